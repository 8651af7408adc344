//! Synthetic data sets with known labels.
//!
//! Object `i` belongs to cluster `i mod clusters`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    dist_jaccard, euclidean_unchecked, jaccard_records, CategoricalData, DataSet, DenseData,
    SparseData,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Unit-variance Gaussian blobs; the closest two means are
    /// `separation` standard deviations apart.
    GaussianMixture,
    /// One code pattern per cluster; each attribute is redrawn uniformly
    /// with probability `1 / separation`.
    CategoricalPatterns,
    /// One core set of `set_size` elements per cluster; each object swaps
    /// `floor(set_size / (4 * separation))` core elements for outside ones.
    SparseOverlap,
}

impl FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-mixture" => Ok(SynthKind::GaussianMixture),
            "categorical-patterns" => Ok(SynthKind::CategoricalPatterns),
            "sparse-overlap" => Ok(SynthKind::SparseOverlap),
            _ => Err(Error::config(format!("unknown synthetic kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    /// Dimensions, attributes, or universe size for sparse sets.
    pub d: usize,
    pub clusters: usize,
    pub separation: f64,
    #[serde(default)]
    pub seed: u64,
    /// Codes per attribute for categorical patterns.
    #[serde(default = "default_cardinality")]
    pub cardinality: u32,
    /// Core size for sparse sets.
    #[serde(default = "default_set_size")]
    pub set_size: usize,
}

fn default_cardinality() -> u32 {
    32
}

fn default_set_size() -> usize {
    100
}

impl SynthSpec {
    pub fn new(
        kind: SynthKind,
        n: usize,
        d: usize,
        clusters: usize,
        separation: f64,
        seed: u64,
    ) -> Self {
        SynthSpec {
            kind,
            n,
            d,
            clusters,
            separation,
            seed,
            cardinality: default_cardinality(),
            set_size: default_set_size(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 || self.clusters == 0 || self.clusters > self.n {
            return Err(Error::config("need n >= clusters >= 1 and d >= 1"));
        }
        if !(self.separation.is_finite() && self.separation > 0.0) {
            return Err(Error::config("separation must be positive"));
        }
        match self.kind {
            SynthKind::CategoricalPatterns if self.separation < 1.0 || self.cardinality < 2 => Err(
                Error::config("categorical patterns need separation >= 1 and cardinality >= 2"),
            ),
            SynthKind::SparseOverlap
                if self.set_size == 0
                    || self.clusters * self.set_size > self.d
                    || self.d > u32::MAX as usize =>
            {
                Err(Error::config(
                    "sparse cores must fit disjointly in the universe",
                ))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    pub data: DataSet,
    pub labels: Vec<u32>,
    /// Largest distance from a member to its cluster's generating center.
    pub radii: Vec<f64>,
    /// Generating centers: means, code patterns, or core sets.
    pub truth: Truth,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Truth {
    Means(Vec<Vec<f32>>),
    Patterns(Vec<Vec<u32>>),
    Cores(Vec<Vec<u32>>),
}

pub fn gen_synthetic(spec: &SynthSpec) -> Result<Synthetic> {
    spec.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let labels: Vec<u32> = (0..spec.n).map(|i| (i % spec.clusters) as u32).collect();
    let mut radii = vec![0.0f64; spec.clusters];
    let (data, truth) = match spec.kind {
        SynthKind::GaussianMixture => {
            let means = gaussian_means(spec, &mut rng);
            let mut values = Vec::with_capacity(spec.n * spec.d);
            for &l in &labels {
                let start = values.len();
                for &m in &means[l as usize] {
                    let z: f64 = rng.sample(StandardNormal);
                    values.push(m + z as f32);
                }
                let r = euclidean_unchecked(&values[start..], &means[l as usize]);
                radii[l as usize] = radii[l as usize].max(r);
            }
            (
                DataSet::Dense(DenseData::new(spec.d, values)?),
                Truth::Means(means),
            )
        }
        SynthKind::CategoricalPatterns => {
            let patterns: Vec<Vec<u32>> = (0..spec.clusters)
                .map(|_| {
                    (0..spec.d)
                        .map(|_| rng.gen_range(0..spec.cardinality))
                        .collect()
                })
                .collect();
            let p = 1.0 / spec.separation;
            let mut codes = Vec::with_capacity(spec.n * spec.d);
            for &l in &labels {
                let start = codes.len();
                for &c in &patterns[l as usize] {
                    codes.push(if rng.gen::<f64>() < p {
                        rng.gen_range(0..spec.cardinality)
                    } else {
                        c
                    });
                }
                let r = jaccard_records(&codes[start..], &patterns[l as usize]);
                radii[l as usize] = radii[l as usize].max(r);
            }
            (
                DataSet::Categorical(CategoricalData::new(spec.d, codes)?),
                Truth::Patterns(patterns),
            )
        }
        SynthKind::SparseOverlap => {
            let s = spec.set_size;
            let picked = sample(&mut rng, spec.d, spec.clusters * s).into_vec();
            let cores: Vec<Vec<u32>> = picked
                .chunks(s)
                .map(|c| {
                    let mut v: Vec<u32> = c.iter().map(|&x| x as u32).collect();
                    v.sort_unstable();
                    v
                })
                .collect();
            let swaps = (s as f64 / (4.0 * spec.separation)).floor() as usize;
            let mut sets = Vec::with_capacity(spec.n);
            for &l in &labels {
                let core = &cores[l as usize];
                let mut set: Vec<u32> = core.clone();
                let mut drop = sample(&mut rng, s, swaps.min(s - 1)).into_vec();
                drop.sort_unstable_by(|a, b| b.cmp(a));
                for i in drop {
                    set.swap_remove(i);
                }
                let mut added = 0;
                while added < swaps.min(s - 1) {
                    let x = rng.gen_range(0..spec.d) as u32;
                    if core.binary_search(&x).is_err() && !set.contains(&x) {
                        set.push(x);
                        added += 1;
                    }
                }
                set.sort_unstable();
                let r = dist_jaccard(&set, core);
                radii[l as usize] = radii[l as usize].max(r);
                sets.push(set);
            }
            (
                DataSet::Sparse(SparseData::new(spec.d as u64, sets)?),
                Truth::Cores(cores),
            )
        }
    };
    Ok(Synthetic {
        data,
        labels,
        radii,
        truth,
    })
}

/// Standard-normal means rescaled so the closest pair is exactly
/// `separation` apart.
fn gaussian_means(spec: &SynthSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f32>> {
    let raw: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| (0..spec.d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut min = f64::INFINITY;
    for i in 0..raw.len() {
        for j in i + 1..raw.len() {
            let d: f64 = raw[i]
                .iter()
                .zip(&raw[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            min = min.min(d);
        }
    }
    let scale = if min.is_finite() && min > 0.0 {
        spec.separation / min
    } else {
        1.0
    };
    raw.into_iter()
        .map(|m| m.into_iter().map(|x| (x * scale) as f32).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = SynthSpec::new(SynthKind::GaussianMixture, 50, 4, 3, 10.0, 7);
        assert_eq!(gen_synthetic(&spec).unwrap(), gen_synthetic(&spec).unwrap());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(gen_synthetic(&SynthSpec::new(
            SynthKind::GaussianMixture,
            2,
            4,
            3,
            10.0,
            0
        ))
        .is_err());
        assert!(gen_synthetic(&SynthSpec::new(
            SynthKind::SparseOverlap,
            10,
            50,
            2,
            10.0,
            0
        ))
        .is_err());
        assert!("nope".parse::<SynthKind>().is_err());
    }

    #[test]
    fn sparse_sets_have_core_size() {
        let spec = SynthSpec::new(SynthKind::SparseOverlap, 20, 10_000, 4, 10.0, 1);
        let s = gen_synthetic(&spec).unwrap();
        if let DataSet::Sparse(d) = &s.data {
            assert!(d.sets().all(|x| x.len() == 100));
        } else {
            panic!("not sparse");
        }
    }
}
