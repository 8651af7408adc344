//! Versioned binary artifacts: bucket collections, seed groups and
//! clusterings.
//!
//! Layout: magic `GEEK`, `u16` version, `u8` kind, `u64` payload length,
//! payload. All integers little-endian.

use std::fs;
use std::path::Path;

use super::codec::{Decoder, Encoder};
use crate::assign::Clustering;
use crate::error::{Error, Result};
use crate::model::{Bucket, SeedGroup};

pub const MAGIC: &[u8; 4] = b"GEEK";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum ArtifactKind {
    Buckets = 1,
    SeedGroups = 2,
    Clustering = 3,
}

impl ArtifactKind {
    fn from_u8(v: u8) -> Option<Self> {
        match v {
            1 => Some(ArtifactKind::Buckets),
            2 => Some(ArtifactKind::SeedGroups),
            3 => Some(ArtifactKind::Clustering),
            _ => None,
        }
    }
}

fn frame(kind: ArtifactKind, payload: Vec<u8>) -> Vec<u8> {
    let mut e = Encoder::new();
    for &b in MAGIC {
        e.u8(b);
    }
    e.u16(VERSION);
    e.u8(kind as u8);
    e.bytes(&payload);
    e.finish()
}

fn unframe(bytes: &[u8], want: ArtifactKind) -> Result<Decoder<'_>> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::at_offset(0, "not a geek artifact"));
    }
    let mut d = Decoder::with_base(&bytes[4..], 4);
    let version = d.u16()?;
    if version != VERSION {
        return Err(Error::at_offset(
            4,
            format!("unsupported version {version}"),
        ));
    }
    let kind = d.u8()?;
    match ArtifactKind::from_u8(kind) {
        Some(k) if k == want => {}
        _ => {
            return Err(Error::at_offset(
                6,
                format!("artifact kind {kind}, expected {want:?}"),
            ))
        }
    }
    let payload = d.bytes()?;
    d.finish()?;
    Ok(Decoder::with_base(payload, HEADER_LEN as u64))
}

pub fn encode_buckets(buckets: &[Bucket]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.buckets(buckets);
    frame(ArtifactKind::Buckets, e.finish())
}

pub fn decode_buckets(bytes: &[u8]) -> Result<Vec<Bucket>> {
    let mut d = unframe(bytes, ArtifactKind::Buckets)?;
    let b = d.buckets()?;
    d.finish()?;
    Ok(b)
}

pub fn encode_seed_groups(groups: &[SeedGroup]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.seed_groups(groups);
    frame(ArtifactKind::SeedGroups, e.finish())
}

pub fn decode_seed_groups(bytes: &[u8]) -> Result<Vec<SeedGroup>> {
    let mut d = unframe(bytes, ArtifactKind::SeedGroups)?;
    let g = d.seed_groups()?;
    d.finish()?;
    Ok(g)
}

pub fn encode_clustering(c: &Clustering) -> Vec<u8> {
    let mut e = Encoder::new();
    e.centers(&c.centers);
    e.u32s(&c.assignment);
    e.f64s(&c.radii);
    e.u64s(&c.sizes);
    e.f64(c.objective);
    e.f64(c.sse);
    frame(ArtifactKind::Clustering, e.finish())
}

pub fn decode_clustering(bytes: &[u8]) -> Result<Clustering> {
    let mut d = unframe(bytes, ArtifactKind::Clustering)?;
    let centers = d.centers()?;
    let at = d.offset();
    let assignment = d.u32s()?;
    let radii = d.f64s()?;
    let sizes = d.u64s()?;
    let objective = d.f64()?;
    let sse = d.f64()?;
    d.finish()?;
    let k = centers.len();
    if radii.len() != k || sizes.len() != k || assignment.iter().any(|&a| a as usize >= k) {
        return Err(Error::at_offset(
            at,
            "clustering fields disagree with the center count",
        ));
    }
    Ok(Clustering {
        centers,
        assignment,
        radii,
        sizes,
        objective,
        sse,
    })
}

pub fn write_buckets(path: impl AsRef<Path>, buckets: &[Bucket]) -> Result<()> {
    Ok(fs::write(path, encode_buckets(buckets))?)
}

pub fn read_buckets(path: impl AsRef<Path>) -> Result<Vec<Bucket>> {
    decode_buckets(&fs::read(path)?)
}

pub fn write_seed_groups(path: impl AsRef<Path>, groups: &[SeedGroup]) -> Result<()> {
    Ok(fs::write(path, encode_seed_groups(groups))?)
}

pub fn read_seed_groups(path: impl AsRef<Path>) -> Result<Vec<SeedGroup>> {
    decode_seed_groups(&fs::read(path)?)
}

pub fn write_clustering(path: impl AsRef<Path>, c: &Clustering) -> Result<()> {
    Ok(fs::write(path, encode_clustering(c))?)
}

pub fn read_clustering(path: impl AsRef<Path>) -> Result<Clustering> {
    decode_clustering(&fs::read(path)?)
}

/// One center index per line.
pub fn write_assignment_text(path: impl AsRef<Path>, assignment: &[u32]) -> Result<()> {
    let mut s = String::with_capacity(assignment.len() * 4);
    for a in assignment {
        s.push_str(&a.to_string());
        s.push('\n');
    }
    Ok(fs::write(path, s)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CenterRepr, CentralVector};

    #[test]
    fn round_trips() {
        let buckets = vec![
            Bucket::new(0, 0, vec![3, 1]).unwrap(),
            Bucket::new(2, 5, vec![9]).unwrap(),
        ];
        assert_eq!(decode_buckets(&encode_buckets(&buckets)).unwrap(), buckets);
        let groups = vec![SeedGroup::new(vec![1, 2]).unwrap()];
        assert_eq!(
            decode_seed_groups(&encode_seed_groups(&groups)).unwrap(),
            groups
        );
        let c = Clustering {
            centers: vec![
                CentralVector {
                    repr: CenterRepr::Centroid(vec![0.5, -1.0]),
                    weight: 2,
                },
                CentralVector {
                    repr: CenterRepr::Mode(vec![4]),
                    weight: 1,
                },
            ],
            assignment: vec![0, 1, 0],
            radii: vec![1.0, 0.0],
            sizes: vec![2, 1],
            objective: 2.0,
            sse: 2.0,
        };
        assert_eq!(decode_clustering(&encode_clustering(&c)).unwrap(), c);
    }

    #[test]
    fn rejects_wrong_kind_and_corruption() {
        let b = encode_seed_groups(&[SeedGroup::new(vec![1]).unwrap()]);
        assert!(decode_buckets(&b).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(decode_seed_groups(&bad).is_err());
        assert!(decode_seed_groups(&b[..b.len() - 1]).is_err());
        let mut long = b.clone();
        long.push(0);
        assert!(decode_seed_groups(&long).is_err());
        let mut ver = b;
        ver[4] = 9;
        assert!(decode_seed_groups(&ver)
            .unwrap_err()
            .to_string()
            .contains("version"));
    }
}
