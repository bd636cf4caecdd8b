//! Headerless CSV for points (one row per point) and labels (`id,label`,
//! label 0 for outliers, 1..=k for clusters).

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Dataset, Point};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(r)
}

fn parse_err(line: Option<u64>, msg: impl Into<String>) -> Error {
    Error::Parse {
        line: line.unwrap_or(0) as usize,
        msg: msg.into(),
    }
}

fn csv_err(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    parse_err(line, e.to_string())
}

pub fn parse_points<R: Read>(r: R) -> Result<Dataset> {
    let mut points: Vec<Point> = Vec::new();
    for rec in reader(r).records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let p = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| parse_err(line, format!("{f:?}: {e}"))))
            .collect::<Result<Point>>()?;
        points.push(p);
    }
    Dataset::new(points)
}

pub fn read_points(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_points(std::fs::File::open(path)?)
}

/// Shortest decimal that reads back to the same `f64`.
pub fn write_points<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for p in data.points() {
        out.write_record(p.iter().map(|v| v.to_string())).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_points(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_points(data, std::fs::File::create(path)?)
}

/// Reads `id,label` rows. Every id in `0..n` must appear exactly once.
pub fn parse_labels<R: Read>(r: R, k: Option<usize>) -> Result<Vec<Option<usize>>> {
    let mut rows: Vec<(usize, usize, Option<u64>)> = Vec::new();
    for rec in reader(r).records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map(|p| p.line());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(line, "expected `id,label`"));
        }
        let id = rec[0].parse::<usize>().map_err(|e| parse_err(line, e.to_string()))?;
        let label = rec[1].parse::<usize>().map_err(|e| parse_err(line, e.to_string()))?;
        rows.push((id, label, line));
    }
    let n = rows.len();
    let mut labels = vec![None; n];
    let mut seen = vec![false; n];
    for (id, label, line) in rows {
        if id >= n || seen[id] {
            return Err(parse_err(line, format!("id {id} is out of range or repeated")));
        }
        if let Some(k) = k {
            if label > k {
                return Err(parse_err(line, format!("label {label} exceeds k = {k}")));
            }
        }
        seen[id] = true;
        labels[id] = label.checked_sub(1);
    }
    Ok(labels)
}

pub fn read_labels(path: impl AsRef<Path>, k: Option<usize>) -> Result<Vec<Option<usize>>> {
    parse_labels(std::fs::File::open(path)?, k)
}

pub fn write_labels<W: Write>(labels: &[Option<usize>], w: W) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for (i, l) in labels.iter().enumerate() {
        let v = l.map_or(0, |c| c + 1);
        out.write_record([i.to_string(), v.to_string()]).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_labels(labels: &[Option<usize>], path: impl AsRef<Path>) -> Result<()> {
    write_labels(labels, std::fs::File::create(path)?)
}
