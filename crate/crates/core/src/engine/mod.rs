//! Shared-nothing execution on `g` workers.
//!
//! Each worker owns a contiguous shard of the objects and talks to the
//! others only through a [`Transport`]. The phases are:
//!
//! 1. hash the shard and send every table's fragment to the table's owner
//!    (table `i` belongs to worker `i mod g`);
//! 2. assemble the owned tables into complete buckets;
//! 3. run SILK on the owned tables only (in memory-budget loads), exchange
//!    the resulting seed groups and deduplicate the union;
//! 4. exchange per-group partial sums or counts and merge them, in worker
//!    order, into the global centers;
//! 5. assign the shard and gather the assignment on worker 0.

pub mod config;
pub mod message;
pub mod transport;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::ops::Range;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::assign::{assign_range, Clustering};
use crate::centers::{partial_centers, PartialCenter};
use crate::error::{Error, Result};
use crate::hashing::derive_seed;
use crate::io::codec::{Decoder, Encoder};
use crate::metrics::{MetricsRecord, RadiusSummary};
use crate::model::{Bucket, CentralVector, DataSet, MixedData, SeedGroup};
use crate::silk::Silk;
use crate::transform::{discretize_numeric, Transformer};

pub use config::EngineConfig;
use message::*;
pub use message::{Message, MessageKind};
pub use transport::{channel_mesh, ByteCounter, ChannelTransport, Transport};

pub const STAGES: [&str; 6] = [
    "transform",
    "sync",
    "seeding",
    "centers",
    "assign",
    "refine",
];

/// Contiguous ID ranges whose sizes differ by at most one.
pub fn split_data(n: usize, g: usize) -> Result<Vec<Range<usize>>> {
    if g == 0 || g > n {
        return Err(Error::invalid(format!(
            "cannot split {n} objects over {g} workers"
        )));
    }
    let (base, extra) = (n / g, n % g);
    let mut start = 0;
    Ok((0..g)
        .map(|w| {
            let len = base + usize::from(w < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect())
}

pub fn table_owner(table: usize, g: usize) -> usize {
    table % g
}

/// Transformation matching the payload kind and configuration.
pub fn transformer_for(data: &DataSet, cfg: &EngineConfig) -> Result<Transformer> {
    match data {
        DataSet::Dense(d) => Transformer::homo(d.dim(), &cfg.homo_params()),
        DataSet::Categorical(d) => {
            Transformer::categorical(d.dim(), d.code_stride(), &cfg.minhash_params())
        }
        DataSet::Sparse(d) => {
            Transformer::sparse(d.universe(), Some(cfg.doph_dims), &cfg.minhash_params())
        }
    }
}

/// What one worker saw, for audits.
#[derive(Clone, Debug)]
pub struct WorkerReport {
    pub rank: usize,
    pub shard: Range<usize>,
    pub owned_tables: Vec<u32>,
    /// Complete buckets of the owned tables.
    pub buckets: Vec<Bucket>,
    /// Data IDs over all owned tables.
    pub synced_ids: u64,
    /// Seeding loads used.
    pub loads: usize,
    /// Groups from this worker's own tables, before exchange.
    pub local_groups: Vec<SeedGroup>,
    /// Deduplicated union; identical on every worker.
    pub seeds: Vec<SeedGroup>,
    pub centers: Vec<CentralVector>,
    pub fallback: bool,
    pub timings: BTreeMap<&'static str, Duration>,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub clustering: Clustering,
    pub seeds: Vec<SeedGroup>,
    /// Seconds per stage, the slowest worker's.
    pub timings: BTreeMap<String, f64>,
    /// Cross-worker bytes per message kind, plus `total`.
    pub bytes: BTreeMap<String, u64>,
    pub workers: Vec<WorkerReport>,
    /// SILK found nothing and one random object per worker was used.
    pub fallback: bool,
}

impl PipelineOutput {
    pub fn k_star(&self) -> usize {
        self.clustering.k_star()
    }

    /// The report from the clustering's stored distances.
    pub fn metrics(&self, cfg: &EngineConfig) -> MetricsRecord {
        let c = &self.clustering;
        MetricsRecord {
            k_star: c.k_star(),
            centers: c.centers.len(),
            empty_clusters: c.empty_clusters().len(),
            radius: RadiusSummary {
                max: c.max_radius(),
                mean: c.mean_radius(),
                weighted_mean: c.weighted_mean_radius(),
                per_cluster: c.radii.clone(),
            },
            objective: c.objective,
            sse: c.sse,
            timings: self.timings.clone(),
            transport_bytes: self.bytes.clone(),
            params: serde_json::to_value(cfg).unwrap_or_default(),
        }
    }
}

/// Runs the full pipeline with hash functions built from `cfg`.
pub fn run_pipeline(data: &DataSet, cfg: &EngineConfig) -> Result<PipelineOutput> {
    cfg.validate(data)?;
    let transformer = transformer_for(data, cfg).map_err(|e| e.in_stage("transform"))?;
    let silk = Silk::new(&cfg.silk_params(), data.len()).map_err(|e| e.in_stage("seeding"))?;
    run_pipeline_with(data, cfg, transformer, silk)
}

/// Discretizes numeric columns centrally, then runs the pipeline on the
/// resulting categorical records.
pub fn run_pipeline_mixed(
    data: &MixedData,
    cfg: &EngineConfig,
) -> Result<(PipelineOutput, DataSet)> {
    let cat = DataSet::Categorical(
        discretize_numeric(data, cfg.t_disc).map_err(|e| e.in_stage("transform"))?,
    );
    Ok((run_pipeline(&cat, cfg)?, cat))
}

/// Runs the pipeline with the given hash functions.
pub fn run_pipeline_with(
    data: &DataSet,
    cfg: &EngineConfig,
    transformer: Transformer,
    silk: Silk,
) -> Result<PipelineOutput> {
    cfg.validate(data)?;
    if !transformer.tables().is_multiple_of(cfg.g) {
        return Err(Error::config(format!(
            "table count {} must be a multiple of g = {}",
            transformer.tables(),
            cfg.g
        )));
    }
    let started = Instant::now();
    let ranges = split_data(data.len(), cfg.g)?;
    let (endpoints, counter) = channel_mesh(cfg.g);
    let transformer = Arc::new(transformer);
    let results: Vec<Result<(WorkerReport, Option<Clustering>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = endpoints
            .into_iter()
            .map(|mut tx| {
                let rank = tx.rank();
                let shard = data.slice(ranges[rank].clone());
                let ctx = WorkerCtx {
                    cfg,
                    ranges: &ranges,
                    transformer: transformer.clone(),
                    silk: silk.clone(),
                };
                s.spawn(move || {
                    let r = ctx.run(shard, &mut tx);
                    if r.is_err() {
                        tx.abort();
                    }
                    r
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(Error::Engine {
                        worker: usize::MAX,
                        message: "worker panicked".into(),
                    })
                })
            })
            .collect()
    });
    let mut workers = Vec::with_capacity(cfg.g);
    let mut clustering = None;
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok((rep, c)) => {
                workers.push(rep);
                if c.is_some() {
                    clustering = c;
                }
            }
            Err(e) => errors.push(e),
        }
    }
    if !errors.is_empty() {
        // the failing worker makes the others abort; report the root cause
        let root = errors
            .iter()
            .position(|e| !e.to_string().contains("aborted after"));
        return Err(errors.swap_remove(root.unwrap_or(0)));
    }
    let clustering = clustering.expect("worker 0 returns the clustering");
    let mut timings = BTreeMap::new();
    for stage in STAGES {
        let t = workers
            .iter()
            .filter_map(|w| w.timings.get(stage))
            .max()
            .copied()
            .unwrap_or_default();
        timings.insert(stage.to_string(), t.as_secs_f64());
    }
    timings.insert("total".into(), started.elapsed().as_secs_f64());
    let mut bytes: BTreeMap<String, u64> = MessageKind::ALL
        .iter()
        .map(|&k| (k.label().to_string(), counter.get(k)))
        .collect();
    bytes.insert("total".into(), counter.total());
    let seeds = workers[0].seeds.clone();
    let fallback = workers[0].fallback;
    Ok(PipelineOutput {
        clustering,
        seeds,
        timings,
        bytes,
        workers,
        fallback,
    })
}

struct WorkerCtx<'a> {
    cfg: &'a EngineConfig,
    ranges: &'a [Range<usize>],
    transformer: Arc<Transformer>,
    silk: Silk,
}

/// Encoded size of a table's buckets, the unit the memory budget counts.
fn encode_table(buckets: &[Bucket]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.buckets(buckets);
    e.finish()
}

fn decode_table(bytes: &[u8]) -> Result<Vec<Bucket>> {
    let mut d = Decoder::new(bytes);
    let b = d.buckets()?;
    d.finish()?;
    Ok(b)
}

/// Consecutive runs of whole tables whose sizes sum to at most `budget`.
pub fn plan_loads(table_sizes: &[u64], budget: u64) -> Result<Vec<Range<usize>>> {
    let mut loads = Vec::new();
    let mut start = 0;
    let mut used = 0u64;
    for (i, &s) in table_sizes.iter().enumerate() {
        if s > budget {
            return Err(Error::config(format!(
                "table {i} needs {s} bytes, more than the memory budget of {budget}"
            )));
        }
        if used + s > budget {
            loads.push(start..i);
            start = i;
            used = 0;
        }
        used += s;
    }
    if start < table_sizes.len() {
        loads.push(start..table_sizes.len());
    }
    Ok(loads)
}

impl WorkerCtx<'_> {
    fn run(
        &self,
        shard: DataSet,
        tx: &mut ChannelTransport,
    ) -> Result<(WorkerReport, Option<Clustering>)> {
        let rank = tx.rank();
        let g = tx.size();
        let offset = self.ranges[rank].start;
        let mut timings = BTreeMap::new();
        let fail = |message: String| Error::Engine {
            worker: rank,
            message,
        };

        // transform
        let t0 = Instant::now();
        let prepared = self
            .transformer
            .prepare(&shard)
            .map_err(|e| e.in_stage("transform"))?;
        let fragments = self
            .transformer
            .hash_shard(&prepared, offset as u32)
            .map_err(|e| e.in_stage("transform"))?;
        for f in &fragments {
            let owner = table_owner(f.table() as usize, g);
            tx.send(
                owner,
                &Message::new(MessageKind::BucketShard, rank, encode_fragment(f)),
            )
            .map_err(|e| e.in_stage("transform"))?;
        }
        drop(fragments);
        timings.insert("transform", t0.elapsed());

        // sync
        let t0 = Instant::now();
        let tables = self.transformer.tables();
        let owned: Vec<u32> = (rank..tables).step_by(g).map(|t| t as u32).collect();
        let mut parts: BTreeMap<u32, Vec<(u32, Vec<u8>)>> = BTreeMap::new();
        for _ in 0..owned.len() * g {
            let m = tx
                .recv(MessageKind::BucketShard)
                .map_err(|e| e.in_stage("sync"))?;
            let table = m
                .payload
                .get(1..5)
                .map_or(u32::MAX, |b| u32::from_le_bytes(b.try_into().unwrap()));
            if !owned.contains(&table) {
                return Err(
                    fail(format!("received table {table}, which it does not own")).in_stage("sync"),
                );
            }
            parts.entry(table).or_default().push((m.sender, m.payload));
        }
        let mut encoded_tables = Vec::with_capacity(owned.len());
        let mut buckets = Vec::new();
        for &t in &owned {
            let mut frags = parts.remove(&t).unwrap_or_default();
            if frags.len() != g {
                return Err(fail(format!(
                    "table {t} has {} fragments, expected {g}",
                    frags.len()
                ))
                .in_stage("sync"));
            }
            frags.sort_by_key(|(s, _)| *s);
            let decoded = frags
                .iter()
                .map(|(_, p)| decode_fragment(p))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| e.in_stage("sync"))?;
            let table = self
                .transformer
                .assemble(t, decoded)
                .map_err(|e| e.in_stage("sync"))?;
            encoded_tables.push(encode_table(&table));
            buckets.extend(table);
        }
        let synced_ids: u64 = buckets.iter().map(|b| b.members.len() as u64).sum();
        timings.insert("sync", t0.elapsed());

        // seeding
        let t0 = Instant::now();
        let sizes: Vec<u64> = encoded_tables.iter().map(|t| t.len() as u64).collect();
        let loads =
            plan_loads(&sizes, self.cfg.memory_budget).map_err(|e| e.in_stage("seeding"))?;
        let local_groups = if loads.len() <= 1 {
            self.silk.collect_groups(&buckets)
        } else {
            self.silk.collect_groups_streamed(loads.len(), |c| {
                let mut out = Vec::new();
                for t in loads[c].clone() {
                    out.extend(decode_table(&encoded_tables[t])?);
                }
                Ok(out)
            })
        }
        .map_err(|e| e.in_stage("seeding"))?;
        drop(encoded_tables);
        tx.broadcast(&Message::new(
            MessageKind::SeedGroups,
            rank,
            encode_groups(&local_groups),
        ))
        .map_err(|e| e.in_stage("seeding"))?;
        let mut union = Vec::new();
        for m in tx
            .gather_all(MessageKind::SeedGroups)
            .map_err(|e| e.in_stage("seeding"))?
        {
            union.extend(decode_groups(&m.payload).map_err(|e| e.in_stage("seeding"))?);
        }
        let mut seeds = self.silk.dedup(union).map_err(|e| e.in_stage("seeding"))?;
        let fallback = seeds.is_empty();
        if fallback {
            if rank == 0 {
                warn!("seeding found no groups; using one random object per worker");
            }
            seeds = self.fallback_seeds();
        }
        timings.insert("seeding", t0.elapsed());

        // centers
        let t0 = Instant::now();
        let local =
            partial_centers(&seeds, &prepared, offset).map_err(|e| e.in_stage("centers"))?;
        let centers = self
            .all_reduce(tx, &local)
            .map_err(|e| e.in_stage("centers"))?;
        if centers.len() < seeds.len() && rank == 0 {
            warn!(
                "{} seed groups had no members and were dropped",
                seeds.len() - centers.len()
            );
        }
        timings.insert("centers", t0.elapsed());

        // local assignment
        let t0 = Instant::now();
        let (mut ids, mut dists) = assign_range(&prepared, 0..prepared.len(), &centers);
        timings.insert("assign", t0.elapsed());

        let t0 = Instant::now();
        let mut final_centers = centers.clone();
        for _ in 0..self.cfg.passes {
            let mut local = vec![PartialCenter::empty_for(&prepared); final_centers.len()];
            for (i, &a) in ids.iter().enumerate() {
                local[a as usize]
                    .add(&prepared, i)
                    .map_err(|e| e.in_stage("refine"))?;
            }
            final_centers = self
                .all_reduce(tx, &local)
                .map_err(|e| e.in_stage("refine"))?;
            (ids, dists) = assign_range(&prepared, 0..prepared.len(), &final_centers);
        }
        timings.insert("refine", t0.elapsed());

        let t0 = Instant::now();
        tx.send(
            0,
            &Message::new(
                MessageKind::Assignments,
                rank,
                encode_assignments(&ids, &dists),
            ),
        )
        .map_err(|e| e.in_stage("assign"))?;
        let clustering = if rank == 0 {
            let mut all_ids = Vec::new();
            let mut all_dists = Vec::new();
            for m in tx
                .gather_all(MessageKind::Assignments)
                .map_err(|e| e.in_stage("assign"))?
            {
                let (i, d) = decode_assignments(&m.payload).map_err(|e| e.in_stage("assign"))?;
                if i.len() != self.ranges[m.sender as usize].len() {
                    return Err(
                        fail(format!("worker {} sent {} assignments", m.sender, i.len()))
                            .in_stage("assign"),
                    );
                }
                all_ids.extend(i);
                all_dists.extend(d);
            }
            Some(
                Clustering::from_parts(final_centers, all_ids, &all_dists)
                    .map_err(|e| e.in_stage("assign"))?,
            )
        } else {
            None
        };
        *timings.get_mut("assign").unwrap() += t0.elapsed();

        Ok((
            WorkerReport {
                rank,
                shard: self.ranges[rank].clone(),
                owned_tables: owned,
                buckets,
                synced_ids,
                loads: loads.len(),
                local_groups,
                seeds,
                centers,
                fallback,
                timings,
            },
            clustering,
        ))
    }

    /// Exchanges partial centers and merges them in worker order. Groups
    /// with no members anywhere are dropped, identically on every worker.
    fn all_reduce(
        &self,
        tx: &mut ChannelTransport,
        local: &[PartialCenter],
    ) -> Result<Vec<CentralVector>> {
        let rank = tx.rank();
        tx.broadcast(&Message::new(
            MessageKind::LocalCenters,
            rank,
            encode_partials(local),
        ))?;
        let mut merged: Option<Vec<PartialCenter>> = None;
        for m in tx.gather_all(MessageKind::LocalCenters)? {
            let parts = decode_partials(&m.payload)?;
            match merged.as_mut() {
                None => merged = Some(parts),
                Some(acc) => {
                    if acc.len() != parts.len() {
                        return Err(Error::Engine {
                            worker: rank,
                            message: format!(
                                "worker {} sent {} partial centers, expected {}",
                                m.sender,
                                parts.len(),
                                acc.len()
                            ),
                        });
                    }
                    for (a, p) in acc.iter_mut().zip(&parts) {
                        a.merge(p)?;
                    }
                }
            }
        }
        Ok(merged
            .unwrap_or_default()
            .iter()
            .filter_map(PartialCenter::finish)
            .collect())
    }

    /// One object per worker, chosen from that worker's shard by a seed
    /// every worker can derive.
    fn fallback_seeds(&self) -> Vec<SeedGroup> {
        let mut out: Vec<SeedGroup> = self
            .ranges
            .iter()
            .enumerate()
            .map(|(w, r)| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(self.cfg.seed, &[0xFA11, w as u64]));
                let id = r.start + rng.gen_range(0..r.len());
                SeedGroup::new(vec![id as u32]).expect("one member")
            })
            .collect();
        out.sort_unstable();
        out
    }
}
