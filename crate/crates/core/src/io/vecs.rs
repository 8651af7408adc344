//! `.fvecs` / `.bvecs` vector files.
//!
//! Each record is a little-endian `i32` dimension followed by that many
//! `f32` values (fvecs) or unsigned bytes (bvecs).

use byteorder::{ByteOrder, LittleEndian as LE};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::DenseData;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecsFormat {
    Fvecs,
    Bvecs,
}

impl VecsFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("fvecs") => Ok(VecsFormat::Fvecs),
            Some(e) if e.eq_ignore_ascii_case("bvecs") => Ok(VecsFormat::Bvecs),
            _ => Err(Error::invalid(format!(
                "{} is neither .fvecs nor .bvecs",
                path.display()
            ))),
        }
    }

    fn elem_size(self) -> usize {
        match self {
            VecsFormat::Fvecs => 4,
            VecsFormat::Bvecs => 1,
        }
    }
}

pub fn parse_vecs(bytes: &[u8], format: VecsFormat) -> Result<DenseData> {
    let mut values = Vec::new();
    let mut dim: Option<usize> = None;
    let mut pos = 0usize;
    while pos < bytes.len() {
        if bytes.len() - pos < 4 {
            return Err(Error::at_offset(pos as u64, "truncated dimension header"));
        }
        let d = LE::read_i32(&bytes[pos..]);
        if d <= 0 {
            return Err(Error::at_offset(
                pos as u64,
                format!("invalid dimension {d}"),
            ));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(Error::at_offset(
                    pos as u64,
                    format!("dimension {d} differs from {expected}"),
                ))
            }
            _ => {}
        }
        let body = pos + 4;
        let end = body + d * format.elem_size();
        if end > bytes.len() {
            return Err(Error::at_offset(body as u64, "truncated vector"));
        }
        match format {
            VecsFormat::Fvecs => {
                for (k, chunk) in bytes[body..end].chunks_exact(4).enumerate() {
                    let x = LE::read_f32(chunk);
                    if !x.is_finite() {
                        return Err(Error::at_offset((body + 4 * k) as u64, "non-finite value"));
                    }
                    values.push(x);
                }
            }
            VecsFormat::Bvecs => values.extend(bytes[body..end].iter().map(|&b| b as f32)),
        }
        pos = end;
    }
    DenseData::new(dim.unwrap_or(1), values)
}

/// Reads a vector file; the format follows the extension.
pub fn read_vecs(path: impl AsRef<Path>) -> Result<DenseData> {
    let path = path.as_ref();
    let format = VecsFormat::from_path(path)?;
    parse_vecs(&fs::read(path)?, format)
}

pub fn read_fvecs(path: impl AsRef<Path>) -> Result<DenseData> {
    parse_vecs(&fs::read(path)?, VecsFormat::Fvecs)
}

pub fn read_bvecs(path: impl AsRef<Path>) -> Result<DenseData> {
    parse_vecs(&fs::read(path)?, VecsFormat::Bvecs)
}

pub fn write_fvecs(path: impl AsRef<Path>, data: &DenseData) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut buf = [0u8; 4];
    for row in data.rows() {
        LE::write_i32(&mut buf, row.len() as i32);
        w.write_all(&buf)?;
        for &x in row {
            LE::write_f32(&mut buf, x);
            w.write_all(&buf)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes bytes; every value must be an integer in `[0, 255]`.
pub fn write_bvecs(path: impl AsRef<Path>, data: &DenseData) -> Result<()> {
    if data
        .values()
        .iter()
        .any(|&x| !(0.0..=255.0).contains(&x) || x.fract() != 0.0)
    {
        return Err(Error::invalid("bvecs values must be integers in [0, 255]"));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut buf = [0u8; 4];
    for row in data.rows() {
        LE::write_i32(&mut buf, row.len() as i32);
        w.write_all(&buf)?;
        let bytes: Vec<u8> = row.iter().map(|&x| x as u8).collect();
        w.write_all(&bytes)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_vecs(path: impl AsRef<Path>, data: &DenseData) -> Result<()> {
    match VecsFormat::from_path(path.as_ref())? {
        VecsFormat::Fvecs => write_fvecs(path, data),
        VecsFormat::Bvecs => write_bvecs(path, data),
    }
}
