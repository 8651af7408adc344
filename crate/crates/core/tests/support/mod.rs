//! Pinned hash fixtures shared by integration tests.
//!
//! The six objects `x1..x6` of the worked examples use 0-based IDs here, so
//! `x1` is ID 0. Buckets `B1..B8` are indices 0..8 in table order.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use geek_core::{
    Bucket, DataId, DenseData, ProjectionFunction, Result, SeedGroup, SetSigner, Signature, Silk,
};

/// 1-based object labels to IDs.
pub fn x(labels: &[u32]) -> Vec<DataId> {
    labels.iter().map(|l| l - 1).collect()
}

pub fn group(labels: &[u32]) -> SeedGroup {
    SeedGroup::new(x(labels)).unwrap()
}

pub fn buckets_from(tables: &[[&[u32]; 2]]) -> Vec<Bucket> {
    tables
        .iter()
        .enumerate()
        .flat_map(|(t, pair)| {
            pair.iter()
                .enumerate()
                .map(move |(s, m)| Bucket::new(t as u32, s as u32, x(m)).unwrap())
        })
        .collect()
}

/// Signatures looked up from a table of known member sets. Unknown sets get
/// a signature of their own, so they never share a bin.
pub struct PinnedSigner {
    tables: Vec<HashMap<Vec<DataId>, u64>>,
}

impl PinnedSigner {
    /// `bins[t]` lists, per SILK table, groups of bucket indices that must
    /// share a signature.
    pub fn new(buckets: &[Bucket], bins: &[&[&[usize]]]) -> Self {
        let tables = bins
            .iter()
            .map(|table| {
                let mut m = HashMap::new();
                for (label, bin) in table.iter().enumerate() {
                    for &b in bin.iter() {
                        m.insert(buckets[b].members.clone(), label as u64);
                    }
                }
                m
            })
            .collect();
        PinnedSigner { tables }
    }
}

impl SetSigner for PinnedSigner {
    fn tables(&self) -> usize {
        self.tables.len()
    }

    fn signature(&self, table: usize, set: &[u32]) -> Result<Signature> {
        Ok(match self.tables[table].get(set) {
            Some(&label) => vec![label],
            None => std::iter::once(u64::MAX)
                .chain(set.iter().map(|&v| v as u64))
                .collect(),
        })
    }
}

/// One table whose signature is the set itself: only identical groups
/// share a dedup bin.
pub struct ExactSigner;

impl SetSigner for ExactSigner {
    fn tables(&self) -> usize {
        1
    }

    fn signature(&self, _table: usize, set: &[u32]) -> Result<Signature> {
        Ok(set.iter().map(|&v| v as u64).collect())
    }
}

pub fn silk_with(buckets: &[Bucket], bins: &[&[&[usize]]], delta: usize) -> Silk {
    Silk::with_signers(
        delta,
        Arc::new(PinnedSigner::new(buckets, bins)),
        Arc::new(ExactSigner),
    )
    .unwrap()
}

// Fixture A: four projection tables with t = 2.
pub const A_TABLES: [[&[u32]; 2]; 4] = [
    [&[1, 2, 4], &[3, 5, 6]],
    [&[2, 3, 4], &[1, 5, 6]],
    [&[1, 2, 6], &[3, 4, 5]],
    [&[1, 4, 5], &[2, 3, 6]],
];

pub const A_BINS: [&[&[usize]]; 2] = [
    &[&[0, 2, 4, 6], &[1, 5, 7], &[3]],
    &[&[0, 2, 6], &[1, 5], &[3, 7], &[4]],
];

pub fn fixture_a_buckets() -> Vec<Bucket> {
    buckets_from(&A_TABLES)
}

/// Three true clusters {x1,x2,x4}, {x3,x5}, {x6} in the first two
/// coordinates. Coordinate `2 + i` ranks the objects for table `i`: the
/// first bucket's members get 0.1, 0.2, 0.3 and the second's 0.4, 0.5, 0.6.
pub fn fixture_a_data() -> DenseData {
    let plane = [
        [0.0, 0.0],
        [0.0, 1.0],
        [10.0, 10.0],
        [1.0, 0.0],
        [10.0, 11.0],
        [20.0, 0.0],
    ];
    let mut rows: Vec<Vec<f32>> = plane.iter().map(|p| p.to_vec()).collect();
    for pair in A_TABLES {
        let mut rank = 1;
        for members in pair {
            for &l in members {
                rows[l as usize - 1].push(rank as f32 / 10.0);
                rank += 1;
            }
        }
    }
    DenseData::from_rows(&rows).unwrap()
}

pub fn fixture_a_projections() -> Vec<ProjectionFunction> {
    (0..4)
        .map(|i| {
            let mut d = vec![0.0; 6];
            d[2 + i] = 1.0;
            ProjectionFunction::from_direction(d)
        })
        .collect()
}

pub fn fixture_a_silk(delta: usize) -> Silk {
    silk_with(&fixture_a_buckets(), &A_BINS, delta)
}

// Fixture B: the buckets of the communication example, held by two workers
// with round-robin table ownership.
pub const B_TABLES: [[&[u32]; 2]; 4] = [
    [&[1, 2, 4], &[3, 5, 6]],
    [&[1, 2, 3, 4], &[5, 6]],
    [&[1, 2, 4, 6], &[3, 5]],
    [&[1, 2, 4, 5], &[3, 6]],
];

pub const B_BINS: [&[&[usize]]; 2] = [
    &[&[0, 2, 4, 6], &[1, 5, 7], &[3]],
    &[&[0, 2], &[1, 5], &[4, 6], &[3, 7]],
];

pub fn fixture_b_buckets() -> Vec<Bucket> {
    buckets_from(&B_TABLES)
}

pub fn fixture_b_silk(delta: usize) -> Silk {
    silk_with(&fixture_b_buckets(), &B_BINS, delta)
}

/// Buckets of the tables owned by `rank` out of `g` workers.
pub fn owned(buckets: &[Bucket], rank: usize, g: usize) -> Vec<Bucket> {
    buckets
        .iter()
        .filter(|b| b.id.table as usize % g == rank)
        .cloned()
        .collect()
}
