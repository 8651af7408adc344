//! Comparators: random and k-means++ seeding, Lloyd's k-means and k-modes.
//!
//! They take the same data, metric and seed inputs as the main pipeline and
//! use the same assignment routine, so timings compare like with like.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assign::{assign, check_centers, recompute_centers, Clustering};
use crate::centers::PartialCenter;
use crate::error::{Error, Result};
use crate::model::{CenterRepr, CentralVector, DataSet, Metric, PayloadKind};

fn check_k(data: &DataSet, k: usize) -> Result<()> {
    if k == 0 || k > data.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be in [1, {}]",
            data.len()
        )));
    }
    Ok(())
}

/// IDs of `k` distinct objects drawn uniformly.
pub fn sample_ids(n: usize, k: usize, seed: u64) -> Result<Vec<usize>> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!("k = {k} must be in [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(sample(&mut rng, n, k).into_vec())
}

/// `k` distinct objects, uniformly at random, as centers.
pub fn seed_random(data: &DataSet, k: usize, seed: u64) -> Result<Vec<CentralVector>> {
    check_k(data, k)?;
    Ok(sample_ids(data.len(), k, seed)?
        .into_iter()
        .map(|i| data.object_as_center(i))
        .collect())
}

/// IDs chosen by D² sampling. Weights are squared distances under the
/// Euclidean metric and plain distances under Jaccard.
pub fn kmeanspp_ids(data: &DataSet, k: usize, seed: u64, metric: Metric) -> Result<Vec<usize>> {
    check_k(data, k)?;
    data.check_metric(metric)?;
    let n = data.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = Vec::with_capacity(k);
    let mut taken = vec![false; n];
    let first = rng.gen_range(0..n);
    chosen.push(first);
    taken[first] = true;
    let mut best: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| data.distance_between(i, first))
        .collect();
    let weight = |d: f64| match metric {
        Metric::Euclidean => d * d,
        Metric::Jaccard => d,
    };
    while chosen.len() < k {
        let total: f64 = best.iter().map(|&d| weight(d)).sum();
        let next = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &d) in best.iter().enumerate() {
                let w = weight(d);
                if w <= 0.0 {
                    continue;
                }
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
            pick.expect("positive total has a positive weight")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(next);
        taken[next] = true;
        best.par_iter_mut().enumerate().for_each(|(i, b)| {
            let d = data.distance_between(i, next);
            if d < *b {
                *b = d;
            }
        });
    }
    Ok(chosen)
}

pub fn seed_kmeanspp(
    data: &DataSet,
    k: usize,
    seed: u64,
    metric: Metric,
) -> Result<Vec<CentralVector>> {
    Ok(kmeanspp_ids(data, k, seed, metric)?
        .into_iter()
        .map(|i| data.object_as_center(i))
        .collect())
}

/// Result of an iterative baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterativeResult {
    pub clustering: Clustering,
    /// Squared-error objective after every assignment, starting with the
    /// initial one.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Recomputes centers, keeping the previous center for clusters that lost
/// all members so indices stay stable.
fn update_centers(data: &DataSet, c: &Clustering) -> Result<Vec<CentralVector>> {
    let mut parts = vec![PartialCenter::empty_for(data); c.centers.len()];
    for (i, &a) in c.assignment.iter().enumerate() {
        parts[a as usize].add(data, i)?;
    }
    Ok(parts
        .iter()
        .zip(&c.centers)
        .map(|(p, old)| p.finish().unwrap_or_else(|| old.clone()))
        .collect())
}

fn max_shift(a: &[CentralVector], b: &[CentralVector]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| match (&x.repr, &y.repr) {
            (CenterRepr::Centroid(p), CenterRepr::Centroid(q)) => {
                crate::model::euclidean_unchecked(p, q)
            }
            _ => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

/// Lloyd's k-means from uniformly random initial centers. Stops when no
/// center moves by `tol` or more, or after `max_iters` updates.
pub fn lloyd(
    data: &DataSet,
    k: usize,
    seed: u64,
    max_iters: usize,
    tol: f64,
) -> Result<IterativeResult> {
    if data.kind() != PayloadKind::Dense {
        return Err(Error::invalid("Lloyd's algorithm needs dense data"));
    }
    let init = seed_random(data, k, seed)?;
    lloyd_from(data, init, max_iters, tol)
}

pub fn lloyd_from(
    data: &DataSet,
    centers: Vec<CentralVector>,
    max_iters: usize,
    tol: f64,
) -> Result<IterativeResult> {
    check_centers(data, &centers, Metric::Euclidean)?;
    let mut cur = assign(data, &centers, Metric::Euclidean)?;
    let mut trace = vec![cur.sse];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let next = update_centers(data, &cur)?;
        let shift = max_shift(&cur.centers, &next);
        cur = assign(data, &next, Metric::Euclidean)?;
        trace.push(cur.sse);
        iterations += 1;
        if shift < tol {
            converged = true;
            break;
        }
    }
    Ok(IterativeResult {
        clustering: cur,
        trace,
        iterations,
        converged,
    })
}

/// k-modes under the token Jaccard distance, from uniformly random initial
/// records. Stops when the assignment no longer changes.
pub fn kmodes(data: &DataSet, k: usize, seed: u64, max_iters: usize) -> Result<IterativeResult> {
    if data.kind() == PayloadKind::Dense {
        return Err(Error::invalid("k-modes needs categorical or sparse data"));
    }
    let init = seed_random(data, k, seed)?;
    let mut cur = assign(data, &init, Metric::Jaccard)?;
    let mut trace = vec![cur.sse];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let next = assign(data, &update_centers(data, &cur)?, Metric::Jaccard)?;
        iterations += 1;
        let same = next.assignment == cur.assignment;
        trace.push(next.sse);
        cur = next;
        if same {
            converged = true;
            break;
        }
    }
    Ok(IterativeResult {
        clustering: cur,
        trace,
        iterations,
        converged,
    })
}

/// Centers over the members of each non-empty cluster, then one assignment.
pub fn reassign(data: &DataSet, c: &Clustering, metric: Metric) -> Result<Clustering> {
    let centers = recompute_centers(data, &c.assignment, c.centers.len())?;
    assign(data, &centers, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CategoricalData, DenseData};

    fn dense(rows: &[Vec<f32>]) -> DataSet {
        DataSet::Dense(DenseData::from_rows(rows).unwrap())
    }

    #[test]
    fn random_seeding() {
        let data = dense(&(0..10).map(|i| vec![i as f32]).collect::<Vec<_>>());
        let all = seed_random(&data, 10, 3).unwrap();
        let mut xs: Vec<f32> = all
            .iter()
            .map(|c| match &c.repr {
                CenterRepr::Centroid(v) => v[0],
                _ => unreachable!(),
            })
            .collect();
        xs.sort_by(f32::total_cmp);
        assert_eq!(xs, (0..10).map(|i| i as f32).collect::<Vec<_>>());
        assert_eq!(
            seed_random(&data, 4, 9).unwrap(),
            seed_random(&data, 4, 9).unwrap()
        );
        assert!(seed_random(&data, 11, 0).is_err());
    }

    #[test]
    fn kmeanspp_all_identical_falls_back() {
        let data = dense(&vec![vec![1.0, 1.0]; 6]);
        let mut ids = kmeanspp_ids(&data, 6, 1, Metric::Euclidean).unwrap();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn lloyd_zero_iterations_keeps_initial_centers() {
        let data = dense(&[vec![0.0], vec![1.0], vec![10.0], vec![11.0]]);
        let r = lloyd(&data, 2, 5, 0, 1e-9).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.clustering.centers, seed_random(&data, 2, 5).unwrap());
    }

    #[test]
    fn kmodes_identical_records() {
        let data =
            DataSet::Categorical(CategoricalData::from_rows(&vec![vec![1, 2, 3]; 5]).unwrap());
        let r = kmodes(&data, 1, 0, 10).unwrap();
        assert_eq!(r.clustering.radii, vec![0.0]);
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
    }
}
