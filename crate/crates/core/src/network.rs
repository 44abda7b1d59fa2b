//! Commute graph and modularity-based community detection.
//!
//! Communities are found with the Louvain method: greedy local moves of
//! single vertices between communities followed by aggregation of each
//! community into a super-vertex, repeated until modularity stops improving.
//! Directed commuter flows are symmetrised by summation first.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metapop::MobilityMatrix;
use crate::rng::{self, Stream};

/// Minimum modularity gain for a move to count.
const MIN_GAIN: f64 = 1e-12;

/// Directed weighted graph with an edge wherever commuter flux is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommuteGraph {
    pub ids: Vec<String>,
    /// `(origin, destination, weight)`, no self-loops.
    pub edges: Vec<(usize, usize, f64)>,
}

impl CommuteGraph {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Undirected adjacency lists with weights `w_ij + w_ji`.
    fn symmetric(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); self.len()];
        for &(a, b, w) in &self.edges {
            *adj[a].entry(b).or_default() += w;
            *adj[b].entry(a).or_default() += w;
        }
        adj.into_iter().map(|m| m.into_iter().collect()).collect()
    }
}

pub fn build_commute_graph(mobility: &MobilityMatrix) -> CommuteGraph {
    let n = mobility.len();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in 0..n {
            let w = mobility.get(a, b);
            if a != b && w > 0.0 {
                edges.push((a, b, w));
            }
        }
    }
    CommuteGraph { ids: mobility.ids().to_vec(), edges }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Community index per vertex, numbered by first appearance.
    pub community: Vec<usize>,
    pub modularity: f64,
}

impl Partition {
    pub fn count(&self) -> usize {
        self.community.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.community.len()).filter(|&v| self.community[v] == c).collect()
    }
}

/// Newman modularity of `community` on the symmetrised graph.
pub fn modularity(graph: &CommuteGraph, community: &[usize]) -> Result<f64> {
    if community.len() != graph.len() {
        return Err(Error::Shape { expected: graph.len(), got: community.len() });
    }
    let adj = graph.symmetric();
    Ok(modularity_of(&adj, &vec![0.0; graph.len()], community))
}

/// `self_loops[v]` holds `A_vv`; adjacency lists exclude the diagonal.
fn modularity_of(adj: &[Vec<(usize, f64)>], self_loops: &[f64], community: &[usize]) -> f64 {
    let k: Vec<f64> = adj.iter().zip(self_loops).map(|(l, s)| l.iter().map(|e| e.1).sum::<f64>() + s).collect();
    let two_m: f64 = k.iter().sum();
    if two_m == 0.0 {
        return 0.0;
    }
    let n_comm = community.iter().max().map_or(0, |m| m + 1);
    let mut internal = vec![0.0; n_comm];
    let mut total = vec![0.0; n_comm];
    for v in 0..adj.len() {
        total[community[v]] += k[v];
        internal[community[v]] += self_loops[v];
        for &(u, w) in &adj[v] {
            if community[u] == community[v] {
                internal[community[v]] += w;
            }
        }
    }
    internal.iter().zip(&total).map(|(i, t)| i / two_m - (t / two_m).powi(2)).sum()
}

/// Louvain community detection; `seed` fixes the vertex visiting order.
pub fn detect_communities(graph: &CommuteGraph, seed: u64) -> Result<Partition> {
    if graph.is_empty() {
        return Err(Error::data("community detection on an empty graph"));
    }
    let mut rng = rng::stream(seed, Stream::Init, 0);
    let mut adj = graph.symmetric();
    let mut loops = vec![0.0; graph.len()];
    // membership of every original vertex in the current level's vertices
    let mut membership: Vec<usize> = (0..graph.len()).collect();
    loop {
        let mut comm = local_moves(&adj, &loops, &mut rng);
        let n_comm = renumber(&mut comm);
        if n_comm == adj.len() {
            break;
        }
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        (adj, loops) = aggregate(&adj, &loops, &comm, n_comm);
    }
    renumber(&mut membership);
    let q = modularity(graph, &membership)?;
    Ok(Partition { community: membership, modularity: q })
}

fn local_moves(adj: &[Vec<(usize, f64)>], loops: &[f64], rng: &mut rng::StreamRng) -> Vec<usize> {
    let n = adj.len();
    let k: Vec<f64> = adj.iter().zip(loops).map(|(l, s)| l.iter().map(|e| e.1).sum::<f64>() + s).collect();
    let two_m: f64 = k.iter().sum();
    let mut comm: Vec<usize> = (0..n).collect();
    if two_m == 0.0 {
        return comm;
    }
    let mut tot = k.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut links = vec![0.0; n];
    let mut touched = Vec::new();
    let mut improved = true;
    while improved {
        improved = false;
        for &v in &order {
            let own = comm[v];
            for &(u, w) in &adj[v] {
                if links[comm[u]] == 0.0 {
                    touched.push(comm[u]);
                }
                links[comm[u]] += w;
            }
            tot[own] -= k[v];
            let gain = |c: usize, links: &[f64]| (links[c] - tot[c] * k[v] / two_m) / two_m;
            let mut best = (own, gain(own, &links));
            for &c in &touched {
                let g = gain(c, &links);
                if g > best.1 + MIN_GAIN {
                    best = (c, g);
                }
            }
            tot[best.0] += k[v];
            if best.0 != own {
                comm[v] = best.0;
                improved = true;
            }
            for &c in &touched {
                links[c] = 0.0;
            }
            touched.clear();
        }
    }
    comm
}

/// Relabels to `0..count` by first appearance; returns the count.
fn renumber(comm: &mut [usize]) -> usize {
    let mut map = std::collections::HashMap::new();
    for c in comm.iter_mut() {
        let next = map.len();
        *c = *map.entry(*c).or_insert(next);
    }
    map.len()
}

fn aggregate(
    adj: &[Vec<(usize, f64)>],
    loops: &[f64],
    comm: &[usize],
    n_comm: usize,
) -> (Vec<Vec<(usize, f64)>>, Vec<f64>) {
    let mut maps: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n_comm];
    let mut new_loops = vec![0.0; n_comm];
    for v in 0..adj.len() {
        new_loops[comm[v]] += loops[v];
        for &(u, w) in &adj[v] {
            if comm[u] == comm[v] {
                new_loops[comm[v]] += w;
            } else {
                *maps[comm[v]].entry(comm[u]).or_default() += w;
            }
        }
    }
    (maps.into_iter().map(|m| m.into_iter().collect()).collect(), new_loops)
}
