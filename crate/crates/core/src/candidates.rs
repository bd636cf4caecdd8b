//! Candidate center tuples and their line-delimited JSON checkpoint format.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;

/// Where a candidate came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    /// Position in the labeled-partition stream of one sampling repeat.
    Partition { repeat: u32, index: u64 },
    /// Schedule index and per-level child indices of a peeling-tree leaf.
    TreePath { zeta: u32, path: Vec<u32> },
    /// Supplied directly, e.g. from a checkpoint or a caller.
    External { index: u64 },
}

/// An ordered tuple of `k` approximate centers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateTuple {
    pub centers: Vec<Point>,
    pub provenance: Provenance,
}

impl CandidateTuple {
    pub fn new(centers: Vec<Point>, provenance: Provenance) -> Self {
        Self { centers, provenance }
    }

    pub fn external(centers: Vec<Point>, index: u64) -> Self {
        Self::new(centers, Provenance::External { index })
    }

    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Checks that there are `k` finite centers of dimension `dim`.
    pub fn validate(&self, k: usize, dim: usize) -> Result<()> {
        if self.centers.len() != k {
            return Err(invalid(format!(
                "candidate has {} centers, expected {k}",
                self.centers.len()
            )));
        }
        for c in &self.centers {
            if c.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: c.len(),
                });
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(invalid("candidate center has a non-finite coordinate"));
            }
        }
        Ok(())
    }
}

/// Appends candidates to a checkpoint file, one JSON object per line.
pub struct CheckpointWriter {
    out: BufWriter<File>,
    written: u64,
}

impl CheckpointWriter {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self {
            out: BufWriter::new(File::create(path)?),
            written: 0,
        })
    }

    pub fn append(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: BufWriter::new(file),
            written: 0,
        })
    }

    pub fn push(&mut self, tuple: &CandidateTuple) -> Result<()> {
        serde_json::to_writer(&mut self.out, tuple)?;
        self.out.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> u64 {
        self.written
    }

    pub fn finish(mut self) -> Result<u64> {
        self.out.flush()?;
        Ok(self.written)
    }
}

/// Reads a checkpoint, skipping blank lines. A truncated final line (from an
/// interrupted run) is dropped rather than reported.
pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Vec<CandidateTuple>> {
    let reader = BufReader::new(File::open(path)?);
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let last = lines.len();
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(t) => out.push(t),
            Err(_) if i + 1 == last => break,
            Err(e) => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: e.to_string(),
                })
            }
        }
    }
    Ok(out)
}
