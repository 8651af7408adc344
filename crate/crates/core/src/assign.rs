//! One-pass nearest-center assignment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Range;

use crate::centers::PartialCenter;
use crate::error::{Error, Result};
use crate::model::{CentralVector, DataSet, Metric};

const CHUNK: usize = 1024;

/// Centers, one center index per object, and per-center statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centers: Vec<CentralVector>,
    pub assignment: Vec<u32>,
    /// Largest member distance per center; 0 for empty centers.
    pub radii: Vec<f64>,
    pub sizes: Vec<u64>,
    /// Sum of member distances.
    pub objective: f64,
    /// Sum of squared member distances.
    pub sse: f64,
}

impl Clustering {
    /// Builds the statistics from per-object distances to the assigned
    /// center. Sums run in object order.
    pub fn from_parts(
        centers: Vec<CentralVector>,
        assignment: Vec<u32>,
        distances: &[f64],
    ) -> Result<Self> {
        if assignment.len() != distances.len() {
            return Err(Error::invalid("assignment and distance lengths differ"));
        }
        let k = centers.len();
        let mut radii = vec![0.0f64; k];
        let mut sizes = vec![0u64; k];
        let (mut objective, mut sse) = (0.0, 0.0);
        for (&a, &d) in assignment.iter().zip(distances) {
            let a = a as usize;
            if a >= k {
                return Err(Error::invalid(format!(
                    "assignment {a} out of range for {k} centers"
                )));
            }
            sizes[a] += 1;
            radii[a] = radii[a].max(d);
            objective += d;
            sse += d * d;
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

    /// Number of non-empty clusters.
    pub fn k_star(&self) -> usize {
        self.sizes.iter().filter(|&&s| s > 0).count()
    }

    pub fn empty_clusters(&self) -> Vec<usize> {
        (0..self.sizes.len())
            .filter(|&j| self.sizes[j] == 0)
            .collect()
    }

    /// Mean radius over non-empty clusters.
    pub fn mean_radius(&self) -> f64 {
        let k = self.k_star();
        if k == 0 {
            return 0.0;
        }
        self.nonempty_radii().sum::<f64>() / k as f64
    }

    /// Mean radius weighted by cluster size.
    pub fn weighted_mean_radius(&self) -> f64 {
        let n: u64 = self.sizes.iter().sum();
        if n == 0 {
            return 0.0;
        }
        self.radii
            .iter()
            .zip(&self.sizes)
            .map(|(r, &s)| r * s as f64)
            .sum::<f64>()
            / n as f64
    }

    pub fn max_radius(&self) -> f64 {
        self.radii.iter().copied().fold(0.0, f64::max)
    }

    fn nonempty_radii(&self) -> impl Iterator<Item = f64> + '_ {
        self.radii
            .iter()
            .zip(&self.sizes)
            .filter(|(_, &s)| s > 0)
            .map(|(&r, _)| r)
    }
}

/// Index and distance of the nearest center; ties go to the lower index.
#[inline]
pub fn nearest(data: &DataSet, i: usize, centers: &[CentralVector]) -> (u32, f64) {
    let mut best = (0u32, f64::INFINITY);
    for (j, c) in centers.iter().enumerate() {
        let d = data.distance_to(i, &c.repr);
        if d < best.1 {
            best = (j as u32, d);
        }
    }
    best
}

pub(crate) fn check_centers(
    data: &DataSet,
    centers: &[CentralVector],
    metric: Metric,
) -> Result<()> {
    if centers.is_empty() {
        return Err(Error::invalid("no centers to assign to"));
    }
    data.check_metric(metric)?;
    centers.iter().try_for_each(|c| data.check_center(&c.repr))
}

/// Nearest centers of the objects in `range`, computed in parallel chunks.
pub fn assign_range(
    data: &DataSet,
    range: Range<usize>,
    centers: &[CentralVector],
) -> (Vec<u32>, Vec<f64>) {
    let mut ids = vec![0u32; range.len()];
    let mut dists = vec![0.0f64; range.len()];
    ids.par_chunks_mut(CHUNK)
        .zip(dists.par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(c, (ids, dists))| {
            let start = range.start + c * CHUNK;
            for (o, (id, dist)) in ids.iter_mut().zip(dists.iter_mut()).enumerate() {
                (*id, *dist) = nearest(data, start + o, centers);
            }
        });
    (ids, dists)
}

/// Assigns every object to its nearest center once.
pub fn assign(data: &DataSet, centers: &[CentralVector], metric: Metric) -> Result<Clustering> {
    check_centers(data, centers, metric)?;
    let (ids, dists) = assign_range(data, 0..data.len(), centers);
    Clustering::from_parts(centers.to_vec(), ids, &dists)
}

/// Centers recomputed from the current members; empty clusters are dropped.
pub fn recompute_centers(
    data: &DataSet,
    assignment: &[u32],
    k: usize,
) -> Result<Vec<CentralVector>> {
    let mut parts = vec![PartialCenter::empty_for(data); k];
    for (i, &a) in assignment.iter().enumerate() {
        parts
            .get_mut(a as usize)
            .ok_or_else(|| Error::invalid(format!("assignment {a} out of range")))?
            .add(data, i)?;
    }
    Ok(parts.iter().filter_map(PartialCenter::finish).collect())
}

/// `passes` rounds of recompute-then-assign.
pub fn refine(
    data: &DataSet,
    clustering: &Clustering,
    metric: Metric,
    passes: usize,
) -> Result<Clustering> {
    let mut cur = clustering.clone();
    for _ in 0..passes {
        let centers = recompute_centers(data, &cur.assignment, cur.centers.len())?;
        cur = assign(data, &centers, metric)?;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CenterRepr, DenseData};

    fn dense(rows: &[Vec<f32>]) -> DataSet {
        DataSet::Dense(DenseData::from_rows(rows).unwrap())
    }

    fn centroid(c: &[f32]) -> CentralVector {
        CentralVector {
            repr: CenterRepr::Centroid(c.to_vec()),
            weight: 1,
        }
    }

    #[test]
    fn single_center_takes_everything() {
        let data = dense(&[vec![0.0], vec![3.0], vec![-1.0]]);
        let c = assign(&data, &[centroid(&[0.0])], Metric::Euclidean).unwrap();
        assert_eq!(c.assignment, vec![0, 0, 0]);
        assert_eq!(c.radii, vec![3.0]);
        assert_eq!(c.objective, 4.0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let data = dense(&[vec![0.0, 0.0]]);
        let centers = [
            centroid(&[1.0, 0.0]),
            centroid(&[5.0, 5.0]),
            centroid(&[6.0, 6.0]),
            centroid(&[0.0, 1.0]),
        ];
        let c = assign(&data, &centers, Metric::Euclidean).unwrap();
        assert_eq!(c.assignment, vec![0]);
        assert_eq!(c.k_star(), 1);
        assert_eq!(c.empty_clusters(), vec![1, 2, 3]);
    }

    #[test]
    fn errors() {
        let data = dense(&[vec![0.0]]);
        assert!(assign(&data, &[], Metric::Euclidean).is_err());
        assert!(assign(&data, &[centroid(&[0.0])], Metric::Jaccard).is_err());
        assert!(assign(&data, &[centroid(&[0.0, 1.0])], Metric::Euclidean).is_err());
    }

    #[test]
    fn refine_two_points() {
        let data = dense(&[vec![0.0], vec![10.0]]);
        let start = assign(
            &data,
            &[centroid(&[1.0]), centroid(&[2.0])],
            Metric::Euclidean,
        )
        .unwrap();
        assert_eq!(refine(&data, &start, Metric::Euclidean, 0).unwrap(), start);
        let r = refine(&data, &start, Metric::Euclidean, 1).unwrap();
        assert_eq!(r.radii, vec![0.0, 0.0]);
    }

    #[test]
    fn chunking_does_not_matter() {
        let rows: Vec<Vec<f32>> = (0..3000)
            .map(|i| vec![(i % 97) as f32, (i % 13) as f32])
            .collect();
        let data = dense(&rows);
        let centers: Vec<_> = (0..7)
            .map(|j| centroid(&[j as f32 * 14.0, j as f32 * 2.0]))
            .collect();
        let (ids, d) = assign_range(&data, 0..3000, &centers);
        let (a, da) = assign_range(&data, 0..1500, &centers);
        let (b, db) = assign_range(&data, 1500..3000, &centers);
        assert_eq!(ids, [a, b].concat());
        assert_eq!(d, [da, db].concat());
    }
}
