//! Domain types shared by every phase: data sets, buckets, bins, seed
//! groups, central vectors, and the two distance functions.

use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::error::{Error, Result};

/// Ordinal of a data object inside its data set, contiguous from 0.
pub type DataId = u32;

/// Dense real vectors stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseData {
    dim: usize,
    values: Vec<f32>,
}

impl DenseData {
    pub fn new(dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dense data needs dimension >= 1"));
        }
        if !values.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} values do not divide into rows of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite coordinate in object {}",
                pos / dim
            )));
        }
        Ok(DenseData { dim, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(1);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        DenseData::new(dim, values)
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn slice(&self, range: Range<usize>) -> DenseData {
        DenseData {
            dim: self.dim,
            values: self.values[range.start * self.dim..range.end * self.dim].to_vec(),
        }
    }
}

/// Records of `dim` attribute codes, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalData {
    dim: usize,
    codes: Vec<u32>,
}

impl CategoricalData {
    pub fn new(dim: usize, codes: Vec<u32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(
                "categorical data needs at least one attribute",
            ));
        }
        if !codes.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} codes do not divide into records of {dim} attributes",
                codes.len()
            )));
        }
        Ok(CategoricalData { dim, codes })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(1);
        let mut codes = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(format!(
                    "record {i} has {} attributes, expected {dim}",
                    row.len()
                )));
            }
            codes.extend_from_slice(row);
        }
        CategoricalData::new(dim, codes)
    }

    pub fn len(&self) -> usize {
        self.codes.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.codes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        self.codes.chunks_exact(self.dim)
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    /// One more than the largest code; the per-attribute stride used when
    /// records are flattened into integer tokens for hashing.
    pub fn code_stride(&self) -> u64 {
        self.codes.iter().copied().max().map_or(1, |m| m as u64 + 1)
    }

    pub fn slice(&self, range: Range<usize>) -> CategoricalData {
        CategoricalData {
            dim: self.dim,
            codes: self.codes[range.start * self.dim..range.end * self.dim].to_vec(),
        }
    }
}

/// Sparse sets over `[0, universe)` in compressed-row form. Every set is
/// non-empty, sorted and duplicate free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseData {
    universe: u64,
    offsets: Vec<usize>,
    indices: Vec<u32>,
}

impl SparseData {
    pub fn new(universe: u64, sets: Vec<Vec<u32>>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(sets.len() + 1);
        let mut indices = Vec::new();
        offsets.push(0);
        for (i, set) in sets.into_iter().enumerate() {
            if set.is_empty() {
                return Err(Error::invalid(format!("sparse object {i} is empty")));
            }
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::invalid(format!(
                    "sparse object {i} is not strictly increasing"
                )));
            }
            if let Some(&last) = set.last() {
                if last as u64 >= universe {
                    return Err(Error::invalid(format!(
                        "sparse object {i} has index {last} outside universe {universe}"
                    )));
                }
            }
            indices.extend_from_slice(&set);
            offsets.push(indices.len());
        }
        Ok(SparseData {
            universe,
            offsets,
            indices,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn universe(&self) -> u64 {
        self.universe
    }

    pub fn set(&self, i: usize) -> &[u32] {
        &self.indices[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn sets(&self) -> impl ExactSizeIterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |i| self.set(i))
    }

    pub fn slice(&self, range: Range<usize>) -> SparseData {
        let base = self.offsets[range.start];
        SparseData {
            universe: self.universe,
            offsets: self.offsets[range.start..=range.end]
                .iter()
                .map(|o| o - base)
                .collect(),
            indices: self.indices[base..self.offsets[range.end]].to_vec(),
        }
    }
}

/// One column of a mixed numeric/categorical table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Heterogeneous records held column-wise before discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedData {
    columns: Vec<Column>,
}

impl MixedData {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::invalid("mixed data needs at least one column"));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("mixed data columns differ in length"));
        }
        for col in &columns {
            if let Column::Numeric(v) = col {
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("non-finite numeric value"));
                }
            }
        }
        Ok(MixedData { columns })
    }

    pub fn len(&self) -> usize {
        self.columns[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Dense,
    Categorical,
    Sparse,
}

/// A data set of one payload kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DataSet {
    Dense(DenseData),
    Categorical(CategoricalData),
    Sparse(SparseData),
}

impl DataSet {
    pub fn len(&self) -> usize {
        match self {
            DataSet::Dense(d) => d.len(),
            DataSet::Categorical(d) => d.len(),
            DataSet::Sparse(d) => d.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> PayloadKind {
        match self {
            DataSet::Dense(_) => PayloadKind::Dense,
            DataSet::Categorical(_) => PayloadKind::Categorical,
            DataSet::Sparse(_) => PayloadKind::Sparse,
        }
    }

    /// The metric this payload is clustered under.
    pub fn natural_metric(&self) -> Metric {
        match self {
            DataSet::Dense(_) => Metric::Euclidean,
            _ => Metric::Jaccard,
        }
    }

    pub fn slice(&self, range: Range<usize>) -> DataSet {
        match self {
            DataSet::Dense(d) => DataSet::Dense(d.slice(range)),
            DataSet::Categorical(d) => DataSet::Categorical(d.slice(range)),
            DataSet::Sparse(d) => DataSet::Sparse(d.slice(range)),
        }
    }

    pub fn check_metric(&self, metric: Metric) -> Result<()> {
        if metric == self.natural_metric() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "metric {metric:?} is not defined for {:?} data",
                self.kind()
            )))
        }
    }

    /// Central vector holding a copy of object `i`.
    pub fn object_as_center(&self, i: usize) -> CentralVector {
        let repr = match self {
            DataSet::Dense(d) => CenterRepr::Centroid(d.row(i).to_vec()),
            DataSet::Categorical(d) => CenterRepr::Mode(d.row(i).to_vec()),
            DataSet::Sparse(d) => CenterRepr::SparseMode(d.set(i).to_vec()),
        };
        CentralVector { repr, weight: 1 }
    }

    /// Distance between object `i` and a center of the matching
    /// representation. Callers check compatibility once up front.
    pub fn distance_to(&self, i: usize, center: &CenterRepr) -> f64 {
        match (self, center) {
            (DataSet::Dense(d), CenterRepr::Centroid(c)) => euclidean_unchecked(d.row(i), c),
            (DataSet::Categorical(d), CenterRepr::Mode(c)) => jaccard_records(d.row(i), c),
            (DataSet::Sparse(d), CenterRepr::SparseMode(c)) => dist_jaccard(d.set(i), c),
            _ => f64::NAN,
        }
    }

    /// Distance between objects `i` and `j`.
    pub fn distance_between(&self, i: usize, j: usize) -> f64 {
        match self {
            DataSet::Dense(d) => euclidean_unchecked(d.row(i), d.row(j)),
            DataSet::Categorical(d) => jaccard_records(d.row(i), d.row(j)),
            DataSet::Sparse(d) => dist_jaccard(d.set(i), d.set(j)),
        }
    }

    pub fn check_center(&self, center: &CenterRepr) -> Result<()> {
        let ok = match (self, center) {
            (DataSet::Dense(d), CenterRepr::Centroid(c)) => c.len() == d.dim(),
            (DataSet::Categorical(d), CenterRepr::Mode(c)) => c.len() == d.dim(),
            (DataSet::Sparse(_), CenterRepr::SparseMode(_)) => true,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "center representation does not match {:?} data",
                self.kind()
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Jaccard,
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" | "l2" => Ok(Metric::Euclidean),
            "jaccard" | "1-jaccard" => Ok(Metric::Jaccard),
            other => Err(Error::config(format!("unknown metric {other:?}"))),
        }
    }
}

/// Identifier of a bucket: the hash table it came from and its slot there.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BucketId {
    pub table: u32,
    pub slot: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    pub id: BucketId,
    /// Sorted, duplicate-free, non-empty.
    pub members: Vec<DataId>,
}

impl Bucket {
    pub fn new(table: u32, slot: u32, mut members: Vec<DataId>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::invalid("bucket without members"));
        }
        Ok(Bucket {
            id: BucketId { table, slot },
            members,
        })
    }
}

/// Buckets (by position in the bucket slice they were binned from) that
/// share one SILK signature.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bin {
    pub signature: Vec<u64>,
    pub buckets: Vec<usize>,
}

/// Data IDs voted out of one bin; the unit of initial seeding.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SeedGroup {
    members: Vec<DataId>,
}

impl SeedGroup {
    pub fn new(mut members: Vec<DataId>) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::invalid("seed group without members"));
        }
        Ok(SeedGroup { members })
    }

    pub fn members(&self) -> &[DataId] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// How a cluster center is represented.
///
/// `SparseMode` is the per-dimension majority indicator of sparse sets,
/// stored as the index set of dimensions whose majority value is "present".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CenterRepr {
    Centroid(Vec<f32>),
    Mode(Vec<u32>),
    SparseMode(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralVector {
    pub repr: CenterRepr,
    /// Number of objects the center was computed from.
    pub weight: u64,
}

pub fn dist_euclidean(x: &[f32], y: &[f32]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    Ok(euclidean_unchecked(x, y))
}

#[inline]
pub(crate) fn squared_euclidean(x: &[f32], y: &[f32]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum()
}

#[inline]
pub(crate) fn euclidean_unchecked(x: &[f32], y: &[f32]) -> f64 {
    squared_euclidean(x, y).sqrt()
}

/// `1 - |A ∩ B| / |A ∪ B|` over sorted, duplicate-free token slices. Two
/// empty sets are identical (distance 0).
pub fn dist_jaccard<T: Ord>(a: &[T], b: &[T]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    let inter = sorted_intersection_len(a, b);
    let union = a.len() + b.len() - inter;
    1.0 - inter as f64 / union as f64
}

pub(crate) fn sorted_intersection_len<T: Ord>(a: &[T], b: &[T]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Jaccard distance between the token sets of two records of equal length.
/// Matching positions are the shared tokens, so `|∩| = m` and `|∪| = 2d - m`.
#[inline]
pub(crate) fn jaccard_records(a: &[u32], b: &[u32]) -> f64 {
    let d = a.len();
    if d == 0 {
        return 0.0;
    }
    let m = a.iter().zip(b).filter(|(x, y)| x == y).count();
    1.0 - m as f64 / (2 * d - m) as f64
}

/// The token set `{(attribute, code)}` of a categorical record, sorted.
pub fn categorical_tokens(record: &[u32]) -> Vec<(u32, u32)> {
    record
        .iter()
        .enumerate()
        .map(|(i, &c)| (i as u32, c))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_basic_cases() {
        assert_eq!(dist_euclidean(&[0.0, 0.0], &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(dist_euclidean(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert!(matches!(
            dist_euclidean(&[0.0], &[0.0, 1.0]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn jaccard_basic_cases() {
        assert_eq!(dist_jaccard(&[1, 2, 3], &[1, 2, 3]), 0.0);
        assert_eq!(dist_jaccard(&[1, 2, 3], &[2, 3, 4]), 0.5);
        assert_eq!(dist_jaccard::<u32>(&[], &[]), 0.0);
        assert_eq!(dist_jaccard(&[1], &[]), 1.0);
    }

    #[test]
    fn record_tokens() {
        assert_eq!(categorical_tokens(&[5, 9]), vec![(0, 5), (1, 9)]);
        let a = categorical_tokens(&[5, 9]);
        let b = categorical_tokens(&[5, 8]);
        // |∩| = 1, |∪| = 3 by hand
        assert!((dist_jaccard(&a, &b) - 2.0 / 3.0).abs() < 1e-12);
        assert!((jaccard_records(&[5, 9], &[5, 8]) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(jaccard_records(&[5, 9], &[5, 9]), 0.0);
    }

    #[test]
    fn sparse_rejects_bad_sets() {
        assert!(SparseData::new(10, vec![vec![]]).is_err());
        assert!(SparseData::new(10, vec![vec![2, 1]]).is_err());
        assert!(SparseData::new(10, vec![vec![10]]).is_err());
        let s = SparseData::new(10, vec![vec![1, 2], vec![3], vec![4, 9]]).unwrap();
        let sub = s.slice(1..3);
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.set(1), &[4, 9]);
    }

    #[test]
    fn dense_rejects_non_finite() {
        assert!(DenseData::new(2, vec![0.0, f32::NAN]).is_err());
        assert!(DenseData::new(2, vec![0.0, 1.0, 2.0]).is_err());
    }

    #[test]
    fn metric_payload_pairing() {
        let s = DataSet::Sparse(SparseData::new(4, vec![vec![1]]).unwrap());
        assert!(s.check_metric(Metric::Euclidean).is_err());
        assert!(s.check_metric(Metric::Jaccard).is_ok());
    }
}
