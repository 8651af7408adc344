//! Sparse sets, one per line as whitespace-separated feature indices.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SparseData;

/// Parses one set per line. The universe is `max index + 1` unless given.
pub fn parse_sparse(text: &str, universe: Option<u64>) -> Result<SparseData> {
    let mut sets = Vec::new();
    let mut max = 0u64;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let mut set = Vec::new();
        for tok in line.split_whitespace() {
            let x: u32 = tok.parse().map_err(|_| {
                Error::at_line(lineno, format!("{tok:?} is not a non-negative index"))
            })?;
            max = max.max(x as u64);
            set.push(x);
        }
        if set.is_empty() {
            return Err(Error::at_line(lineno, "empty set"));
        }
        set.sort_unstable();
        set.dedup();
        sets.push(set);
    }
    let universe = match universe {
        Some(u) if !sets.is_empty() && u <= max => {
            return Err(Error::invalid(format!("index {max} outside universe {u}")))
        }
        Some(u) => u,
        None => max + 1,
    };
    SparseData::new(universe, sets)
}

pub fn read_sparse(path: impl AsRef<Path>, universe: Option<u64>) -> Result<SparseData> {
    parse_sparse(&fs::read_to_string(path)?, universe)
}

pub fn write_sparse(path: impl AsRef<Path>, data: &SparseData) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for set in data.sets() {
        let line: Vec<String> = set.iter().map(u32::to_string).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}
