//! Central vectors from member sets.
//!
//! A [`PartialCenter`] accumulates one group's members and merges with the
//! partial centers of other shards. Dense sums are kept in 2^-32 fixed point
//! so that merging is exact and the resulting centroid does not depend on
//! how the members were split.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{CenterRepr, CentralVector, DataSet, PayloadKind, SeedGroup};

const FIXED_SCALE: f64 = 4_294_967_296.0;
const FIXED_LIMIT: f64 = 1_152_921_504_606_846_976.0; // 2^60

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PartialCenter {
    /// Coordinate sums in units of 2^-32.
    Sum { sums: Vec<i128>, count: u64 },
    /// Per-attribute code counts.
    Counts {
        counts: Vec<BTreeMap<u32, u64>>,
        count: u64,
    },
    /// Per-element presence counts.
    Presence {
        counts: BTreeMap<u32, u64>,
        count: u64,
    },
}

impl PartialCenter {
    /// Empty accumulator for objects of `data`.
    pub fn empty_for(data: &DataSet) -> Self {
        match data {
            DataSet::Dense(d) => PartialCenter::Sum {
                sums: vec![0; d.dim()],
                count: 0,
            },
            DataSet::Categorical(d) => PartialCenter::Counts {
                counts: vec![BTreeMap::new(); d.dim()],
                count: 0,
            },
            DataSet::Sparse(_) => PartialCenter::Presence {
                counts: BTreeMap::new(),
                count: 0,
            },
        }
    }

    pub fn kind(&self) -> PayloadKind {
        match self {
            PartialCenter::Sum { .. } => PayloadKind::Dense,
            PartialCenter::Counts { .. } => PayloadKind::Categorical,
            PartialCenter::Presence { .. } => PayloadKind::Sparse,
        }
    }

    pub fn count(&self) -> u64 {
        match self {
            PartialCenter::Sum { count, .. }
            | PartialCenter::Counts { count, .. }
            | PartialCenter::Presence { count, .. } => *count,
        }
    }

    /// Adds object `i` of `data`.
    pub fn add(&mut self, data: &DataSet, i: usize) -> Result<()> {
        if i >= data.len() {
            return Err(Error::invalid(format!(
                "object {i} out of range for {} objects",
                data.len()
            )));
        }
        match (self, data) {
            (PartialCenter::Sum { sums, count }, DataSet::Dense(d)) => {
                for (s, &x) in sums.iter_mut().zip(d.row(i)) {
                    *s += to_fixed(x)?;
                }
                *count += 1;
            }
            (PartialCenter::Counts { counts, count }, DataSet::Categorical(d)) => {
                for (c, &code) in counts.iter_mut().zip(d.row(i)) {
                    *c.entry(code).or_insert(0) += 1;
                }
                *count += 1;
            }
            (PartialCenter::Presence { counts, count }, DataSet::Sparse(d)) => {
                for &e in d.set(i) {
                    *counts.entry(e).or_insert(0) += 1;
                }
                *count += 1;
            }
            (me, _) => {
                return Err(Error::invalid(format!(
                    "{:?} accumulator cannot take {:?} objects",
                    me.kind(),
                    data.kind()
                )))
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &PartialCenter) -> Result<()> {
        match (self, other) {
            (PartialCenter::Sum { sums, count }, PartialCenter::Sum { sums: o, count: oc })
                if sums.len() == o.len() =>
            {
                for (s, x) in sums.iter_mut().zip(o) {
                    *s += x;
                }
                *count += oc;
            }
            (
                PartialCenter::Counts { counts, count },
                PartialCenter::Counts {
                    counts: o,
                    count: oc,
                },
            ) if counts.len() == o.len() => {
                for (c, oc) in counts.iter_mut().zip(o) {
                    for (&code, &n) in oc {
                        *c.entry(code).or_insert(0) += n;
                    }
                }
                *count += oc;
            }
            (
                PartialCenter::Presence { counts, count },
                PartialCenter::Presence {
                    counts: o,
                    count: oc,
                },
            ) => {
                for (&e, &n) in o {
                    *counts.entry(e).or_insert(0) += n;
                }
                *count += oc;
            }
            _ => return Err(Error::invalid("partial centers of different shapes")),
        }
        Ok(())
    }

    /// The central vector, or `None` when nothing was added.
    pub fn finish(&self) -> Option<CentralVector> {
        let weight = self.count();
        if weight == 0 {
            return None;
        }
        let repr = match self {
            PartialCenter::Sum { sums, count } => CenterRepr::Centroid(
                sums.iter()
                    .map(|&s| (s as f64 / FIXED_SCALE / *count as f64) as f32)
                    .collect(),
            ),
            PartialCenter::Counts { counts, .. } => CenterRepr::Mode(
                counts
                    .iter()
                    .map(|c| {
                        // BTreeMap iterates codes ascending, so the first maximum wins
                        let mut best = (0u32, 0u64);
                        for (&code, &n) in c {
                            if n > best.1 {
                                best = (code, n);
                            }
                        }
                        best.0
                    })
                    .collect(),
            ),
            PartialCenter::Presence { counts, count } => CenterRepr::SparseMode(
                counts
                    .iter()
                    .filter(|(_, &n)| 2 * n > *count)
                    .map(|(&e, _)| e)
                    .collect(),
            ),
        };
        Some(CentralVector { repr, weight })
    }
}

fn to_fixed(x: f32) -> Result<i128> {
    let v = x as f64;
    if v.abs() >= FIXED_LIMIT {
        return Err(Error::invalid(format!(
            "coordinate {x} too large for exact centroid sums"
        )));
    }
    Ok((v * FIXED_SCALE).round() as i128)
}

/// Partial centers of `groups` over the objects of `data`, whose IDs start
/// at `id_offset`. Members outside the shard are skipped.
pub fn partial_centers(
    groups: &[SeedGroup],
    data: &DataSet,
    id_offset: usize,
) -> Result<Vec<PartialCenter>> {
    let end = id_offset + data.len();
    groups
        .iter()
        .map(|g| {
            let mut p = PartialCenter::empty_for(data);
            let lo = g.members().partition_point(|&m| (m as usize) < id_offset);
            for &m in &g.members()[lo..] {
                let m = m as usize;
                if m >= end {
                    break;
                }
                p.add(data, m - id_offset)?;
            }
            Ok(p)
        })
        .collect()
}

/// One central vector per group: centroid for dense data, per-attribute mode
/// for categorical records, majority element set for sparse sets. Weight is
/// the group size.
pub fn seeds_to_centers(groups: &[SeedGroup], data: &DataSet) -> Result<Vec<CentralVector>> {
    let n = data.len();
    let mut out = Vec::with_capacity(groups.len());
    for g in groups {
        if let Some(&last) = g.members().last() {
            if last as usize >= n {
                return Err(Error::invalid(format!(
                    "seed member {last} out of range for {n} objects"
                )));
            }
        }
    }
    for p in partial_centers(groups, data, 0)? {
        out.push(p.finish().expect("seed groups are non-empty"));
    }
    Ok(out)
}
