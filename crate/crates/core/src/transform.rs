//! Data transformation: every payload kind becomes a collection of buckets.
//!
//! Hashing is split from bucket assembly so the distributed engine can hash
//! its own shard and ship per-table fragments to the table's owner. The
//! single-process functions below run the same two steps over the whole data
//! set, which is what makes worker count irrelevant to the output.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hashing::{derive_seed, DophReducer, ProjectionFunction, Signature, SignatureScheme};
use crate::model::{
    Bucket, CategoricalData, Column, DataId, DataSet, DenseData, MixedData, SparseData,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomoTransformParams {
    /// Number of projection tables (`m`).
    pub tables: usize,
    /// Buckets per table (`t`).
    pub buckets_per_table: usize,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinhashTransformParams {
    pub k: usize,
    pub l: usize,
    pub seed: u64,
    /// Equal-frequency bins per numeric attribute of mixed data.
    pub t_disc: usize,
}

impl Default for MinhashTransformParams {
    fn default() -> Self {
        MinhashTransformParams {
            k: 3,
            l: 10,
            seed: 0,
            t_disc: 1024,
        }
    }
}

/// Hash values of one shard for one table, on their way to the table owner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TableFragment {
    /// Projection values, partitioned by rank once the table is complete.
    Ranked {
        table: u32,
        entries: Vec<(f64, DataId)>,
    },
    /// IDs already grouped by signature.
    Keyed {
        table: u32,
        groups: Vec<(Signature, Vec<DataId>)>,
    },
}

impl TableFragment {
    pub fn table(&self) -> u32 {
        match self {
            TableFragment::Ranked { table, .. } | TableFragment::Keyed { table, .. } => *table,
        }
    }

    /// Number of data IDs carried.
    pub fn id_count(&self) -> usize {
        match self {
            TableFragment::Ranked { entries, .. } => entries.len(),
            TableFragment::Keyed { groups, .. } => groups.iter().map(|(_, ids)| ids.len()).sum(),
        }
    }
}

/// A configured transformation.
#[derive(Clone, Debug)]
pub enum Transformer {
    /// Random projection followed by an even split of each sorted table.
    Homo {
        projections: Arc<Vec<ProjectionFunction>>,
        buckets_per_table: usize,
    },
    /// `(K, L)` MinHash bucketing of categorical token sets or of sparse
    /// sets (after optional DOPH reduction).
    Minhash {
        scheme: Arc<SignatureScheme>,
        doph: Option<Arc<DophReducer>>,
    },
}

impl Transformer {
    pub fn homo(dim: usize, params: &HomoTransformParams) -> Result<Self> {
        if params.tables == 0 {
            return Err(Error::invalid("at least one projection table is required"));
        }
        if params.buckets_per_table < 2 {
            return Err(Error::invalid("t must be at least 2"));
        }
        let projections = (0..params.tables)
            .map(|i| ProjectionFunction::new(params.seed, i as u64, dim))
            .collect();
        Ok(Transformer::Homo {
            projections: Arc::new(projections),
            buckets_per_table: params.buckets_per_table,
        })
    }

    pub fn homo_with_projections(
        projections: Vec<ProjectionFunction>,
        buckets_per_table: usize,
    ) -> Result<Self> {
        if projections.is_empty() || buckets_per_table < 2 {
            return Err(Error::invalid("need >= 1 projection and t >= 2"));
        }
        Ok(Transformer::Homo {
            projections: Arc::new(projections),
            buckets_per_table,
        })
    }

    /// MinHash bucketing for categorical records with `dim` attributes and
    /// codes below `code_stride`.
    pub fn categorical(
        dim: usize,
        code_stride: u64,
        params: &MinhashTransformParams,
    ) -> Result<Self> {
        let universe = (dim as u64)
            .checked_mul(code_stride)
            .ok_or_else(|| Error::invalid("token universe overflows u64"))?;
        Ok(Transformer::Minhash {
            scheme: Arc::new(SignatureScheme::new(
                params.k,
                params.l,
                params.seed,
                universe,
            )?),
            doph: None,
        })
    }

    /// MinHash bucketing for sparse sets over `universe`, reduced to
    /// `doph_dims` first when given.
    pub fn sparse(
        universe: u64,
        doph_dims: Option<u32>,
        params: &MinhashTransformParams,
    ) -> Result<Self> {
        let doph = doph_dims
            .map(|r| DophReducer::new(derive_seed(params.seed, &[u64::MAX]), universe, r))
            .transpose()?;
        let hashed_universe = doph.as_ref().map_or(universe, |d| d.dims() as u64);
        Ok(Transformer::Minhash {
            scheme: Arc::new(SignatureScheme::new(
                params.k,
                params.l,
                params.seed,
                hashed_universe,
            )?),
            doph: doph.map(Arc::new),
        })
    }

    pub fn tables(&self) -> usize {
        match self {
            Transformer::Homo { projections, .. } => projections.len(),
            Transformer::Minhash { scheme, .. } => scheme.l(),
        }
    }

    /// DOPH-reduces a sparse shard; other payloads pass through untouched.
    pub fn prepare(&self, data: &DataSet) -> Result<DataSet> {
        match (self, data) {
            (
                Transformer::Minhash {
                    doph: Some(doph), ..
                },
                DataSet::Sparse(s),
            ) => Ok(DataSet::Sparse(doph_reduce_all(doph, s)?)),
            _ => Ok(data.clone()),
        }
    }

    /// Hashes every object of a prepared shard into one fragment per table.
    /// `id_offset` is the global ID of the shard's first object.
    pub fn hash_shard(&self, data: &DataSet, id_offset: DataId) -> Result<Vec<TableFragment>> {
        match (self, data) {
            (Transformer::Homo { projections, .. }, DataSet::Dense(d)) => {
                if let Some(p) = projections.first() {
                    if p.direction().len() != d.dim() {
                        return Err(Error::invalid(format!(
                            "projection dimension {} does not match data dimension {}",
                            p.direction().len(),
                            d.dim()
                        )));
                    }
                }
                Ok(projections
                    .par_iter()
                    .enumerate()
                    .map(|(table, proj)| TableFragment::Ranked {
                        table: table as u32,
                        entries: d
                            .rows()
                            .enumerate()
                            .map(|(i, row)| (proj.project_unchecked(row), id_offset + i as DataId))
                            .collect(),
                    })
                    .collect())
            }
            (Transformer::Minhash { scheme, .. }, DataSet::Categorical(d)) => {
                let stride = scheme_stride(scheme, d.dim())?;
                if d.codes().iter().any(|&c| c as u64 >= stride) {
                    return Err(Error::invalid(
                        "attribute code outside the hashed code range",
                    ));
                }
                keyed_fragments(scheme, d.len(), id_offset, |i, table| {
                    let row = d.row(i);
                    let tokens = row
                        .iter()
                        .enumerate()
                        .map(move |(a, &c)| a as u64 * stride + c as u64);
                    scheme.signature_iter(table, tokens)
                })
            }
            (Transformer::Minhash { scheme, .. }, DataSet::Sparse(d)) => {
                keyed_fragments(scheme, d.len(), id_offset, |i, table| {
                    scheme.signature_iter(table, d.set(i).iter().map(|&x| x as u64))
                })
            }
            _ => Err(Error::invalid(format!(
                "transformation does not apply to {:?} data",
                data.kind()
            ))),
        }
    }

    /// Merges all fragments of one table into its complete buckets.
    /// Fragments may arrive in any order.
    pub fn assemble(&self, table: u32, fragments: Vec<TableFragment>) -> Result<Vec<Bucket>> {
        match self {
            Transformer::Homo {
                buckets_per_table, ..
            } => {
                let mut entries = Vec::new();
                for f in fragments {
                    match f {
                        TableFragment::Ranked {
                            table: t,
                            entries: e,
                        } if t == table => entries.extend(e),
                        other => {
                            return Err(Error::invalid(format!(
                                "unexpected fragment for table {} while assembling table {table}",
                                other.table()
                            )))
                        }
                    }
                }
                let parts = partition_ranked(entries, *buckets_per_table)?;
                Ok(parts
                    .into_iter()
                    .enumerate()
                    .map(|(slot, members)| Bucket {
                        id: crate::model::BucketId {
                            table,
                            slot: slot as u32,
                        },
                        members,
                    })
                    .collect())
            }
            Transformer::Minhash { .. } => {
                let mut merged: BTreeMap<Signature, Vec<DataId>> = BTreeMap::new();
                for f in fragments {
                    match f {
                        TableFragment::Keyed { table: t, groups } if t == table => {
                            for (sig, ids) in groups {
                                merged.entry(sig).or_default().extend(ids);
                            }
                        }
                        other => {
                            return Err(Error::invalid(format!(
                                "unexpected fragment for table {} while assembling table {table}",
                                other.table()
                            )))
                        }
                    }
                }
                let mut groups: Vec<Vec<DataId>> = merged
                    .into_values()
                    .map(|mut ids| {
                        ids.sort_unstable();
                        ids
                    })
                    .collect();
                groups.sort_unstable_by_key(|ids| ids[0]);
                Ok(groups
                    .into_iter()
                    .enumerate()
                    .map(|(slot, members)| Bucket {
                        id: crate::model::BucketId {
                            table,
                            slot: slot as u32,
                        },
                        members,
                    })
                    .collect())
            }
        }
    }

    /// Single-process transformation of a prepared data set.
    pub fn transform(&self, data: &DataSet) -> Result<Vec<Bucket>> {
        let fragments = self.hash_shard(data, 0)?;
        let tables: Vec<Vec<Bucket>> = fragments
            .into_par_iter()
            .map(|f| self.assemble(f.table(), vec![f]))
            .collect::<Result<_>>()?;
        Ok(tables.into_iter().flatten().collect())
    }
}

fn scheme_stride(scheme: &SignatureScheme, dim: usize) -> Result<u64> {
    // universe = dim * stride, fixed when the scheme was built
    let universe = scheme.universe();
    if dim == 0 || !universe.is_multiple_of(dim as u64) {
        return Err(Error::invalid(
            "categorical record width does not match the transformation",
        ));
    }
    Ok(universe / dim as u64)
}

fn keyed_fragments<F>(
    scheme: &SignatureScheme,
    n: usize,
    id_offset: DataId,
    sign: F,
) -> Result<Vec<TableFragment>>
where
    F: Fn(usize, usize) -> Result<Signature> + Sync,
{
    (0..scheme.l())
        .into_par_iter()
        .map(|table| {
            let mut groups: BTreeMap<Signature, Vec<DataId>> = BTreeMap::new();
            for i in 0..n {
                groups
                    .entry(sign(i, table)?)
                    .or_default()
                    .push(id_offset + i as DataId);
            }
            Ok(TableFragment::Keyed {
                table: table as u32,
                groups: groups.into_iter().collect(),
            })
        })
        .collect()
}

/// Sorts `(value, id)` pairs ascending (ties by ID) and cuts them into `t`
/// buckets whose sizes differ by at most one; the first `n mod t` buckets
/// take the extra element.
fn partition_ranked(mut entries: Vec<(f64, DataId)>, t: usize) -> Result<Vec<Vec<DataId>>> {
    let n = entries.len();
    if t == 0 || t > n {
        return Err(Error::invalid(format!(
            "cannot split {n} objects into {t} buckets"
        )));
    }
    entries.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (base, extra) = (n / t, n % t);
    let mut out = Vec::with_capacity(t);
    let mut it = entries.into_iter().map(|(_, id)| id);
    for b in 0..t {
        let size = base + usize::from(b < extra);
        let mut members: Vec<DataId> = it.by_ref().take(size).collect();
        members.sort_unstable();
        out.push(members);
    }
    Ok(out)
}

/// Even partition of object IDs `0..values.len()` by ascending value.
pub fn even_partition(values: &[f64], t: usize) -> Result<Vec<Vec<DataId>>> {
    partition_ranked(
        values
            .iter()
            .enumerate()
            .map(|(i, &v)| (v, i as DataId))
            .collect(),
        t,
    )
}

pub fn transform_homo(data: &DenseData, params: &HomoTransformParams) -> Result<Vec<Bucket>> {
    if params.buckets_per_table > data.len() {
        return Err(Error::invalid(format!(
            "t = {} exceeds n = {}",
            params.buckets_per_table,
            data.len()
        )));
    }
    Transformer::homo(data.dim(), params)?.transform(&DataSet::Dense(data.clone()))
}

/// Replaces each numeric column by its equal-frequency bin index in
/// `[0, t_disc)`; categorical columns pass through unchanged.
pub fn discretize_numeric(data: &MixedData, t_disc: usize) -> Result<CategoricalData> {
    let n = data.len();
    if !data
        .columns()
        .iter()
        .any(|c| matches!(c, Column::Numeric(_)))
    {
        return Err(Error::invalid("no numeric attribute to discretize"));
    }
    if t_disc < 2 || t_disc > n {
        return Err(Error::invalid(format!(
            "t_disc = {t_disc} must lie in [2, n = {n}]"
        )));
    }
    let dim = data.columns().len();
    let mut codes = vec![0u32; n * dim];
    for (a, col) in data.columns().iter().enumerate() {
        match col {
            Column::Categorical(v) => {
                for (i, &c) in v.iter().enumerate() {
                    codes[i * dim + a] = c;
                }
            }
            Column::Numeric(v) => {
                for (bin, ids) in even_partition(v, t_disc)?.into_iter().enumerate() {
                    for id in ids {
                        codes[id as usize * dim + a] = bin as u32;
                    }
                }
            }
        }
    }
    CategoricalData::new(dim, codes)
}

pub fn transform_hetero(
    data: &CategoricalData,
    params: &MinhashTransformParams,
) -> Result<Vec<Bucket>> {
    Transformer::categorical(data.dim(), data.code_stride(), params)?
        .transform(&DataSet::Categorical(data.clone()))
}

/// Discretizes numeric columns, then buckets the records.
pub fn transform_mixed(
    data: &MixedData,
    params: &MinhashTransformParams,
) -> Result<(Vec<Bucket>, CategoricalData)> {
    let cat = discretize_numeric(data, params.t_disc)?;
    Ok((transform_hetero(&cat, params)?, cat))
}

/// DOPH-reduces every set to `doph_dims` dimensions, then buckets the
/// reduced sets. Returns the reduced data too: assignment runs there.
pub fn transform_sparse(
    data: &SparseData,
    params: &MinhashTransformParams,
    doph_dims: u32,
) -> Result<(Vec<Bucket>, SparseData)> {
    let transformer = Transformer::sparse(data.universe(), Some(doph_dims), params)?;
    let reduced = transformer.prepare(&DataSet::Sparse(data.clone()))?;
    let buckets = transformer.transform(&reduced)?;
    match reduced {
        DataSet::Sparse(s) => Ok((buckets, s)),
        _ => unreachable!("prepare keeps the payload kind"),
    }
}

pub fn doph_reduce_all(doph: &DophReducer, data: &SparseData) -> Result<SparseData> {
    let sets: Vec<Vec<u32>> = (0..data.len())
        .into_par_iter()
        .map(|i| doph.reduce(data.set(i)))
        .collect::<Result<_>>()?;
    SparseData::new(doph.dims() as u64, sets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn per_table_partition(buckets: &[Bucket], n: usize, tables: usize) {
        for t in 0..tables as u32 {
            let mut ids: Vec<DataId> = buckets
                .iter()
                .filter(|b| b.id.table == t)
                .flat_map(|b| b.members.iter().copied())
                .collect();
            ids.sort_unstable();
            assert_eq!(ids, (0..n as DataId).collect::<Vec<_>>(), "table {t}");
        }
    }

    #[test]
    fn even_partition_sizes() {
        let v: Vec<f64> = (0..7).map(|x| x as f64).collect();
        let parts = even_partition(&v, 2).unwrap();
        assert_eq!(parts[0].len(), 4);
        assert_eq!(parts[1].len(), 3);
        let singletons = even_partition(&v, 7).unwrap();
        assert!(singletons.iter().all(|b| b.len() == 1));
        assert!(even_partition(&v, 8).is_err());
    }

    #[test]
    fn worked_example_table_order() {
        // table-1 projection order x1 < x2 < x4 < x3 < x5 < x6 (0-based IDs)
        let values = [0.1, 0.2, 0.4, 0.3, 0.5, 0.6];
        let parts = even_partition(&values, 2).unwrap();
        assert_eq!(parts, vec![vec![0, 1, 3], vec![2, 4, 5]]);
    }

    #[test]
    fn homo_counts_and_partition() {
        let rows: Vec<Vec<f32>> = (0..50)
            .map(|i| vec![i as f32, (i * 7 % 13) as f32])
            .collect();
        let data = DenseData::from_rows(&rows).unwrap();
        let p = HomoTransformParams {
            tables: 4,
            buckets_per_table: 6,
            seed: 3,
        };
        let buckets = transform_homo(&data, &p).unwrap();
        assert_eq!(buckets.len(), 24);
        per_table_partition(&buckets, 50, 4);
        for t in 0..4 {
            let sizes: Vec<usize> = buckets
                .iter()
                .filter(|b| b.id.table == t)
                .map(|b| b.members.len())
                .collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        }
        assert!(transform_homo(
            &data,
            &HomoTransformParams {
                tables: 1,
                buckets_per_table: 51,
                seed: 0
            }
        )
        .is_err());
    }

    #[test]
    fn discretize_cases() {
        let mixed = MixedData::new(vec![
            Column::Numeric(vec![1.0, 2.0, 3.0, 4.0]),
            Column::Numeric(vec![5.0; 4]),
            Column::Categorical(vec![7, 7, 1, 2]),
        ])
        .unwrap();
        let cat = discretize_numeric(&mixed, 2).unwrap();
        assert_eq!(
            cat.rows().map(|r| r[0]).collect::<Vec<_>>(),
            vec![0, 0, 1, 1]
        );
        assert_eq!(
            cat.rows().map(|r| r[1]).collect::<Vec<_>>(),
            vec![0, 0, 1, 1]
        );
        assert_eq!(
            cat.rows().map(|r| r[2]).collect::<Vec<_>>(),
            vec![7, 7, 1, 2]
        );
        assert!(discretize_numeric(&mixed, 5).is_err());
        let no_numeric = MixedData::new(vec![Column::Categorical(vec![1, 2])]).unwrap();
        assert!(discretize_numeric(&no_numeric, 2).is_err());
    }

    #[test]
    fn hetero_identical_records_share_buckets() {
        let data = CategoricalData::from_rows(&[
            vec![1, 2, 3],
            vec![1, 2, 3],
            vec![4, 5, 6],
            vec![1, 2, 9],
        ])
        .unwrap();
        let p = MinhashTransformParams {
            k: 2,
            l: 5,
            seed: 8,
            t_disc: 2,
        };
        let buckets = transform_hetero(&data, &p).unwrap();
        per_table_partition(&buckets, 4, 5);
        let occurrences = buckets.iter().map(|b| b.members.len()).sum::<usize>();
        assert_eq!(occurrences, 4 * 5);
        for b in &buckets {
            assert_eq!(b.members.contains(&0), b.members.contains(&1));
        }
    }

    #[test]
    fn sparse_transform_reduces_and_partitions() {
        let data = SparseData::new(
            1 << 20,
            vec![vec![1, 50, 900], vec![1, 50, 900], vec![7, 70_000, 500_000]],
        )
        .unwrap();
        let p = MinhashTransformParams {
            k: 3,
            l: 4,
            seed: 1,
            t_disc: 2,
        };
        let (buckets, reduced) = transform_sparse(&data, &p, 400).unwrap();
        assert_eq!(reduced.universe(), 400);
        assert_eq!(reduced.set(0), reduced.set(1));
        per_table_partition(&buckets, 3, 4);
        for b in &buckets {
            assert_eq!(b.members.contains(&0), b.members.contains(&1));
        }
    }

    #[test]
    fn shard_hashing_matches_whole_data() {
        let rows: Vec<Vec<f32>> = (0..40)
            .map(|i| vec![(i % 5) as f32, (i / 3) as f32])
            .collect();
        let data = DataSet::Dense(DenseData::from_rows(&rows).unwrap());
        let tr = Transformer::homo(
            2,
            &HomoTransformParams {
                tables: 3,
                buckets_per_table: 4,
                seed: 5,
            },
        )
        .unwrap();
        let whole = tr.transform(&data).unwrap();
        let mut per_table: Vec<Vec<TableFragment>> = vec![Vec::new(); 3];
        for (lo, hi) in [(25, 40), (0, 10), (10, 25)] {
            for f in tr.hash_shard(&data.slice(lo..hi), lo as DataId).unwrap() {
                per_table[f.table() as usize].push(f);
            }
        }
        let merged: Vec<Bucket> = per_table
            .into_iter()
            .enumerate()
            .flat_map(|(t, frags)| tr.assemble(t as u32, frags).unwrap())
            .collect();
        assert_eq!(whole, merged);
    }
}
