use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{DataSet, Metric};
use crate::silk::SilkParams;
use crate::transform::{HomoTransformParams, MinhashTransformParams};

/// Flat engine configuration, read from JSON. Unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    /// Worker count.
    pub g: usize,
    /// Most bucket bytes a worker holds per seeding load.
    pub memory_budget: u64,
    /// Projection tables for dense data.
    pub m: usize,
    /// Buckets per projection table.
    pub t: usize,
    #[serde(rename = "transform_K")]
    pub transform_k: usize,
    #[serde(rename = "transform_L")]
    pub transform_l: usize,
    pub t_disc: usize,
    pub doph_dims: u32,
    #[serde(rename = "silk_K")]
    pub silk_k: usize,
    #[serde(rename = "silk_L")]
    pub silk_l: usize,
    pub delta: usize,
    #[serde(rename = "dedup_L")]
    pub dedup_l: usize,
    pub seed: u64,
    /// Defaults to the payload's natural metric.
    pub metric: Option<Metric>,
    /// Refinement passes after the one-pass assignment.
    pub passes: usize,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            g: 1,
            memory_budget: 1 << 40,
            m: 20,
            t: 100,
            transform_k: 3,
            transform_l: 10,
            t_disc: 1024,
            doph_dims: 400,
            silk_k: 3,
            silk_l: 20,
            delta: 10,
            dedup_l: 1,
            seed: 0,
            metric: None,
            passes: 0,
        }
    }
}

impl EngineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn homo_params(&self) -> HomoTransformParams {
        HomoTransformParams {
            tables: self.m,
            buckets_per_table: self.t,
            seed: self.seed,
        }
    }

    pub fn minhash_params(&self) -> MinhashTransformParams {
        MinhashTransformParams {
            k: self.transform_k,
            l: self.transform_l,
            seed: self.seed,
            t_disc: self.t_disc,
        }
    }

    /// SILK hashes with a seed of its own so its functions are independent
    /// of the transformation's.
    pub fn silk_params(&self) -> SilkParams {
        SilkParams {
            k: self.silk_k,
            l: self.silk_l,
            delta: self.delta,
            seed: crate::hashing::derive_seed(self.seed, &[0x51C]),
            dedup_l: self.dedup_l,
        }
    }

    /// Transform tables for `data`'s payload kind.
    pub fn tables_for(&self, data: &DataSet) -> usize {
        match data {
            DataSet::Dense(_) => self.m,
            _ => self.transform_l,
        }
    }

    /// Checks the settings against the data they will run on.
    pub fn validate(&self, data: &DataSet) -> Result<Metric> {
        let metric = self.metric.unwrap_or_else(|| data.natural_metric());
        data.check_metric(metric)
            .map_err(|e| Error::config(e.to_string()))?;
        if self.g == 0 || self.memory_budget == 0 {
            return Err(Error::config("g and memory_budget must be positive"));
        }
        if self.g > data.len() {
            return Err(Error::config(format!(
                "g = {} exceeds n = {}",
                self.g,
                data.len()
            )));
        }
        let tables = self.tables_for(data);
        if tables == 0 || !tables.is_multiple_of(self.g) {
            return Err(Error::config(format!(
                "table count {tables} must be a positive multiple of g = {}",
                self.g
            )));
        }
        if self.silk_k == 0 || self.silk_l == 0 || self.delta == 0 || self.dedup_l == 0 {
            return Err(Error::config(
                "silk_K, silk_L, delta and dedup_L must be positive",
            ));
        }
        match data {
            DataSet::Dense(_) if self.t < 2 || self.t > data.len() => {
                Err(Error::config(format!("t = {} must lie in [2, n]", self.t)))
            }
            DataSet::Categorical(_) | DataSet::Sparse(_) if self.transform_k == 0 => {
                Err(Error::config("transform_K must be positive"))
            }
            DataSet::Sparse(s) if self.doph_dims == 0 || self.doph_dims as u64 > s.universe() => {
                Err(Error::config("doph_dims must lie in [1, universe]"))
            }
            _ => Ok(metric),
        }
    }
}
