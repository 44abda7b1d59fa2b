//! Vertices of the 3-D convex hull by the incremental algorithm.

use std::collections::HashSet;

use crate::error::{Error, Result};

use super::SimplexPoint;

type P3 = [f64; 3];

/// Drops coordinate `drop` of a composition. Compositions lie on the plane
/// `sum = 1`, so the map is an affine bijection onto its image and preserves
/// convex-hull membership.
pub fn project(p: &SimplexPoint, drop: usize) -> P3 {
    let mut out = [0.0; 3];
    let mut k = 0;
    for (d, v) in p.parts().iter().enumerate() {
        if d != drop {
            out[k] = *v;
            k += 1;
        }
    }
    out
}

fn sub(a: P3, b: P3) -> P3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: P3, b: P3) -> P3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: P3, b: P3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: P3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Debug, Clone, Copy)]
struct Face {
    v: [usize; 3],
    normal: P3,
    offset: f64,
}

impl Face {
    fn new(pts: &[P3], v: [usize; 3]) -> Self {
        let n = cross(sub(pts[v[1]], pts[v[0]]), sub(pts[v[2]], pts[v[0]]));
        let len = norm(n);
        let normal = if len > 0.0 { [n[0] / len, n[1] / len, n[2] / len] } else { [0.0; 3] };
        Self { v, normal, offset: dot(normal, pts[v[0]]) }
    }

    fn distance(&self, p: P3) -> f64 {
        dot(self.normal, p) - self.offset
    }
}

/// Indices of the points that are vertices of their convex hull, ascending.
///
/// Points on a face or edge of the hull but not at a corner are excluded.
pub fn hull_vertices(pts: &[P3]) -> Result<Vec<usize>> {
    if pts.len() < 4 {
        return Err(Error::data("a 3-D hull needs at least four points"));
    }
    // At least half the diameter of the cloud.
    let extent = pts.iter().map(|p| norm(sub(*p, pts[0]))).fold(0.0_f64, f64::max);
    let eps = 1e-10 * extent.max(f64::MIN_POSITIVE);

    let i0 = (0..pts.len()).min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0])).unwrap();
    let i1 = (0..pts.len()).max_by(|&a, &b| norm(sub(pts[a], pts[i0])).total_cmp(&norm(sub(pts[b], pts[i0])))).unwrap();
    let axis = sub(pts[i1], pts[i0]);
    let line_dist = |k: usize| norm(cross(axis, sub(pts[k], pts[i0]))) / norm(axis);
    let i2 = (0..pts.len()).max_by(|&a, &b| line_dist(a).total_cmp(&line_dist(b))).unwrap();
    if line_dist(i2) <= eps {
        return Err(Error::data("points are collinear"));
    }
    let base = Face::new(pts, [i0, i1, i2]);
    let i3 =
        (0..pts.len()).max_by(|&a, &b| base.distance(pts[a]).abs().total_cmp(&base.distance(pts[b]).abs())).unwrap();
    if base.distance(pts[i3]).abs() <= eps {
        return Err(Error::data("points are coplanar"));
    }

    let centroid = {
        let mut c = [0.0; 3];
        for &i in &[i0, i1, i2, i3] {
            for d in 0..3 {
                c[d] += pts[i][d] / 4.0;
            }
        }
        c
    };
    let oriented = |v: [usize; 3]| {
        let f = Face::new(pts, v);
        if f.distance(centroid) > 0.0 {
            Face::new(pts, [v[0], v[2], v[1]])
        } else {
            f
        }
    };
    let mut faces: Vec<Face> =
        vec![oriented([i0, i1, i2]), oriented([i0, i1, i3]), oriented([i0, i2, i3]), oriented([i1, i2, i3])];

    for (k, &p) in pts.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&k) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| f.distance(p) > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges: HashSet<(usize, usize)> = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for e in 0..3 {
                edges.insert((f.v[e], f.v[(e + 1) % 3]));
            }
        }
        let horizon: Vec<(usize, usize)> = edges.iter().copied().filter(|&(a, b)| !edges.contains(&(b, a))).collect();
        let mut next: Vec<Face> = faces.iter().zip(&visible).filter(|(_, &v)| !v).map(|(f, _)| *f).collect();
        next.extend(horizon.into_iter().map(|(a, b)| Face::new(pts, [a, b, k])));
        faces = next;
    }

    let mut verts: Vec<usize> = faces.iter().flat_map(|f| f.v).collect::<HashSet<_>>().into_iter().collect();
    verts.sort_unstable();
    // Drop points that ended up flat on a face (no corner).
    verts.retain(|&v| is_corner(&faces, v));
    Ok(verts)
}

/// A hull vertex is a corner when its incident face normals span 3-D.
fn is_corner(faces: &[Face], v: usize) -> bool {
    let normals: Vec<P3> = faces.iter().filter(|f| f.v.contains(&v)).map(|f| f.normal).collect();
    for a in 0..normals.len() {
        for b in a + 1..normals.len() {
            let ab = cross(normals[a], normals[b]);
            if norm(ab) <= 1e-9 {
                continue;
            }
            for c in &normals[b + 1..] {
                if dot(ab, *c).abs() > 1e-9 {
                    return true;
                }
            }
        }
    }
    false
}
