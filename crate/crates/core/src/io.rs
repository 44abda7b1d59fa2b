//! On-disk formats: contact matrices, mobility and census tables, JSON.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::census::{NomisCensusRow, NOMIS_BANDS};
use crate::error::{Error, Result};
use crate::metapop::MobilityMatrix;
use crate::types::{ContactMatrix, ContactPair, MatrixLabel, GROUPS};

/// Parses two whitespace-separated 4×4 blocks, term then holiday. Text after
/// `#` is ignored.
pub fn parse_contact_pair(text: &str) -> Result<ContactPair> {
    let mut rows: Vec<[f64; GROUPS]> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::data(format!("contact file line {}: bad number {t:?}", lineno + 1)))
            })
            .collect::<Result<_>>()?;
        let row: [f64; GROUPS] = vals.try_into().map_err(|v: Vec<f64>| {
            Error::data(format!("contact file line {}: {} values, expected 4", lineno + 1, v.len()))
        })?;
        rows.push(row);
    }
    if rows.len() != 2 * GROUPS {
        return Err(Error::data(format!("contact file has {} rows, expected 8", rows.len())));
    }
    let block = |k: usize| -> [[f64; GROUPS]; GROUPS] { [rows[k], rows[k + 1], rows[k + 2], rows[k + 3]] };
    Ok(ContactPair {
        term: ContactMatrix::new(block(0), MatrixLabel::Term)?,
        holiday: ContactMatrix::new(block(4), MatrixLabel::Holiday)?,
    })
}

pub fn format_contact_pair(pair: &ContactPair) -> String {
    let mut out = String::from("# rows/columns: children adolescents adults elderly\n");
    for (name, m) in [("term", &pair.term), ("holiday", &pair.holiday)] {
        out.push_str(&format!("# {name}\n"));
        for row in m.entries() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
    }
    out
}

pub fn read_contact_pair(path: &Path) -> Result<ContactPair> {
    parse_contact_pair(&read_to_string(path)?)
}

fn read_to_string(path: &Path) -> Result<String> {
    let mut s = String::new();
    File::open(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?.read_to_string(&mut s)?;
    Ok(s)
}

/// Mobility CSV: a header `origin,<id>...` and one row `<id>,<flux>...` per
/// origin, in header order.
pub fn read_mobility<R: Read>(input: R) -> Result<MobilityMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::with_capacity(ids.len());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let origin = rec.get(0).unwrap_or("");
        if ids.get(k).map(String::as_str) != Some(origin) {
            return Err(Error::data(format!("mobility row {k} is {origin:?}, expected header order")));
        }
        let vals = rec
            .iter()
            .skip(1)
            .map(|t| t.parse::<f64>().map_err(|_| Error::data(format!("mobility row {origin}: bad number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(vals);
    }
    MobilityMatrix::new(ids, rows)
}

pub fn write_mobility<W: Write>(m: &MobilityMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["origin".to_string()];
    header.extend(m.ids().iter().cloned());
    w.write_record(&header)?;
    for (k, id) in m.ids().iter().enumerate() {
        let mut row = vec![id.clone()];
        row.extend(m.row(k).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Census CSV with a `district_id` column and one column per census band,
/// located by header name.
pub fn read_census<R: Read>(input: R) -> Result<Vec<NomisCensusRow>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    let col = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| Error::data(format!("census file lacks column {name:?}")))
    };
    let id_col = col("district_id")?;
    let band_cols = NOMIS_BANDS.iter().map(|b| col(b)).collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let id = rec.get(id_col).unwrap_or("").to_string();
        let mut bands = [0.0; 16];
        for (b, &c) in bands.iter_mut().zip(&band_cols) {
            let t = rec.get(c).unwrap_or("");
            *b = t.parse().map_err(|_| Error::data(format!("census {id}: bad count {t:?}")))?;
        }
        out.push(NomisCensusRow::new(id, bands)?);
    }
    Ok(out)
}

pub fn write_census<W: Write>(rows: &[NomisCensusRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["district_id"];
    header.extend(NOMIS_BANDS);
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.district_id.clone()];
        rec.extend(r.bands.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}
