//! Initial seeding from similar buckets.
//!
//! Buckets are hashed into bins by MinHash over their member IDs. In every
//! bin with at least two buckets, the IDs present in a strict majority of
//! the bin's buckets form a candidate seed group, kept when it has at least
//! `delta` members. The accumulated groups are then treated as buckets
//! themselves and binned again; each bin keeps one representative.
//!
//! Nothing here takes the number of clusters as input.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hashing::{derive_seed, SetSigner, Signature, SignatureScheme};
use crate::model::{Bin, Bucket, DataId, SeedGroup};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SilkParams {
    pub k: usize,
    pub l: usize,
    /// Minimum seed group size.
    pub delta: usize,
    pub seed: u64,
    /// Tables used by the deduplication pass.
    pub dedup_l: usize,
}

impl Default for SilkParams {
    fn default() -> Self {
        SilkParams {
            k: 3,
            l: 20,
            delta: 10,
            seed: 0,
            dedup_l: 1,
        }
    }
}

/// Groups buckets by their signature in `table`; bins holding a single
/// bucket are dropped. Bins come out ordered by their first bucket.
pub fn bin_buckets(buckets: &[Bucket], signer: &dyn SetSigner, table: usize) -> Result<Vec<Bin>> {
    bin_sets(buckets.iter().map(|b| b.members.as_slice()), signer, table)
}

fn bin_sets<'a>(
    sets: impl Iterator<Item = &'a [DataId]>,
    signer: &dyn SetSigner,
    table: usize,
) -> Result<Vec<Bin>> {
    let mut by_sig: BTreeMap<Signature, Vec<usize>> = BTreeMap::new();
    for (i, set) in sets.enumerate() {
        if set.is_empty() {
            return Err(Error::invalid(format!("set {i} is empty")));
        }
        by_sig
            .entry(signer.signature(table, set)?)
            .or_default()
            .push(i);
    }
    let mut bins: Vec<Bin> = by_sig
        .into_iter()
        .filter(|(_, b)| b.len() > 1)
        .map(|(signature, buckets)| Bin { signature, buckets })
        .collect();
    bins.sort_unstable_by_key(|b| b.buckets[0]);
    Ok(bins)
}

/// IDs occurring in strictly more than half of the bin's buckets.
pub fn majority_vote(bin: &Bin, buckets: &[Bucket]) -> Option<SeedGroup> {
    let mut all: Vec<DataId> = bin
        .buckets
        .iter()
        .flat_map(|&b| buckets[b].members.iter().copied())
        .collect();
    all.sort_unstable();
    let half = bin.buckets.len();
    let mut winners = Vec::new();
    for run in all.chunk_by(|a, b| a == b) {
        if 2 * run.len() > half {
            winners.push(run[0]);
        }
    }
    SeedGroup::new(winners).ok()
}

/// One voted group with the bin it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub table: usize,
    pub bin: Bin,
    pub group: SeedGroup,
}

/// SILK configured with its two signers.
#[derive(Clone)]
pub struct Silk {
    delta: usize,
    main: Arc<dyn SetSigner>,
    dedup: Arc<dyn SetSigner>,
}

impl std::fmt::Debug for Silk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Silk")
            .field("delta", &self.delta)
            .field("tables", &self.main.tables())
            .field("dedup_tables", &self.dedup.tables())
            .finish()
    }
}

impl Silk {
    /// MinHash signers over the ID universe `[0, n)`.
    pub fn new(params: &SilkParams, n: usize) -> Result<Self> {
        if params.delta == 0 {
            return Err(Error::invalid("delta must be at least 1"));
        }
        if params.dedup_l == 0 {
            return Err(Error::invalid("dedup_l must be at least 1"));
        }
        let universe = n.max(1) as u64;
        let main = SignatureScheme::new(params.k, params.l, params.seed, universe)?;
        let dedup = SignatureScheme::new(
            params.k,
            params.dedup_l,
            derive_seed(params.seed, &[0xDED0]),
            universe,
        )?;
        Ok(Silk {
            delta: params.delta,
            main: Arc::new(main),
            dedup: Arc::new(dedup),
        })
    }

    pub fn with_signers(
        delta: usize,
        main: Arc<dyn SetSigner>,
        dedup: Arc<dyn SetSigner>,
    ) -> Result<Self> {
        if delta == 0 || main.tables() == 0 || dedup.tables() == 0 {
            return Err(Error::invalid(
                "delta and both table counts must be positive",
            ));
        }
        Ok(Silk { delta, main, dedup })
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn tables(&self) -> usize {
        self.main.tables()
    }

    /// Bin, vote and threshold over one table.
    pub fn table_groups(&self, buckets: &[Bucket], table: usize) -> Result<Vec<TraceEntry>> {
        Ok(bin_buckets(buckets, self.main.as_ref(), table)?
            .into_iter()
            .filter_map(|bin| {
                majority_vote(&bin, buckets)
                    .filter(|g| g.len() >= self.delta)
                    .map(|group| TraceEntry { table, bin, group })
            })
            .collect())
    }

    /// Every table's groups with their bins. The bin indices refer to
    /// `buckets`.
    pub fn collect_traced(&self, buckets: &[Bucket]) -> Result<Vec<TraceEntry>> {
        let per_table: Vec<Vec<TraceEntry>> = (0..self.main.tables())
            .into_par_iter()
            .map(|t| self.table_groups(buckets, t))
            .collect::<Result<_>>()?;
        Ok(per_table.into_iter().flatten().collect())
    }

    /// Groups from all tables before deduplication, in canonical order.
    pub fn collect_groups(&self, buckets: &[Bucket]) -> Result<Vec<SeedGroup>> {
        let mut groups: Vec<SeedGroup> = self
            .collect_traced(buckets)?
            .into_iter()
            .map(|e| e.group)
            .collect();
        groups.sort_unstable();
        Ok(groups)
    }

    /// Same groups as [`Silk::collect_groups`] over the concatenation of all
    /// chunks, with only one chunk of buckets loaded at a time. `load(c)`
    /// must return the same buckets on both passes.
    pub fn collect_groups_streamed<F>(&self, chunks: usize, mut load: F) -> Result<Vec<SeedGroup>>
    where
        F: FnMut(usize) -> Result<Vec<Bucket>>,
    {
        let tables = self.main.tables();
        let mut sigs: Vec<BTreeMap<Signature, Vec<usize>>> = vec![BTreeMap::new(); tables];
        let mut total = 0usize;
        for c in 0..chunks {
            let buckets = load(c)?;
            sigs.par_iter_mut()
                .enumerate()
                .try_for_each(|(t, map)| -> Result<()> {
                    for (i, b) in buckets.iter().enumerate() {
                        map.entry(self.main.signature(t, &b.members)?)
                            .or_default()
                            .push(total + i);
                    }
                    Ok(())
                })?;
            total += buckets.len();
        }
        let bins: Vec<Vec<usize>> = sigs
            .into_iter()
            .flat_map(|m| m.into_values().filter(|b| b.len() > 1))
            .collect();
        let mut bins_of: Vec<Vec<u32>> = vec![Vec::new(); total];
        for (j, bin) in bins.iter().enumerate() {
            for &b in bin {
                bins_of[b].push(j as u32);
            }
        }
        let mut votes: Vec<HashMap<DataId, u32>> = vec![HashMap::new(); bins.len()];
        let mut base = 0usize;
        for c in 0..chunks {
            let buckets = load(c)?;
            for (i, b) in buckets.iter().enumerate() {
                for &j in &bins_of[base + i] {
                    let v = &mut votes[j as usize];
                    for &id in &b.members {
                        *v.entry(id).or_insert(0) += 1;
                    }
                }
            }
            base += buckets.len();
        }
        if base != total {
            return Err(Error::invalid("chunks changed between passes"));
        }
        let mut groups: Vec<SeedGroup> = bins
            .iter()
            .zip(votes)
            .filter_map(|(bin, v)| {
                let winners: Vec<DataId> = v
                    .into_iter()
                    .filter(|&(_, c)| 2 * c as usize > bin.len())
                    .map(|(id, _)| id)
                    .collect();
                SeedGroup::new(winners)
                    .ok()
                    .filter(|g| g.len() >= self.delta)
            })
            .collect();
        groups.sort_unstable();
        Ok(groups)
    }

    /// Bins the groups as if they were buckets; every multi-group bin keeps
    /// only its largest group (ties to the lexicographically smallest).
    /// Output is sorted.
    pub fn dedup(&self, mut groups: Vec<SeedGroup>) -> Result<Vec<SeedGroup>> {
        groups.sort_unstable();
        let mut removed = vec![false; groups.len()];
        for table in 0..self.dedup.tables() {
            let bins = bin_sets(
                groups.iter().map(|g| g.members()),
                self.dedup.as_ref(),
                table,
            )?;
            for bin in bins {
                // groups are sorted, so the first index wins ties
                let rep = *bin
                    .buckets
                    .iter()
                    .max_by(|&&a, &&b| groups[a].len().cmp(&groups[b].len()).then(b.cmp(&a)))
                    .expect("bins hold at least two groups");
                for &g in &bin.buckets {
                    if g != rep {
                        removed[g] = true;
                    }
                }
            }
        }
        Ok(groups
            .into_iter()
            .zip(removed)
            .filter_map(|(g, r)| (!r).then_some(g))
            .collect())
    }

    pub fn run(&self, buckets: &[Bucket]) -> Result<Vec<SeedGroup>> {
        if buckets.is_empty() {
            return Err(Error::invalid("no buckets to seed from"));
        }
        self.dedup(self.collect_groups(buckets)?)
    }
}

/// SILK with MinHash signers over the ID universe `[0, n)`.
pub fn silk(buckets: &[Bucket], params: &SilkParams, n: usize) -> Result<Vec<SeedGroup>> {
    Silk::new(params, n)?.run(buckets)
}
