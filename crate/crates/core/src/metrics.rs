//! Radius and timing report.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::assign::{check_centers, Clustering};
use crate::error::{Error, Result};
use crate::model::{DataSet, Metric};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusSummary {
    pub max: f64,
    /// Mean over non-empty clusters.
    pub mean: f64,
    /// Mean weighted by cluster size.
    pub weighted_mean: f64,
    pub per_cluster: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub k_star: usize,
    pub centers: usize,
    pub empty_clusters: usize,
    pub radius: RadiusSummary,
    pub objective: f64,
    pub sse: f64,
    /// Seconds per stage.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
    /// Transport bytes per stage.
    #[serde(default)]
    pub transport_bytes: BTreeMap<String, u64>,
    #[serde(default)]
    pub params: serde_json::Value,
}

impl MetricsRecord {
    pub fn with_timings(mut self, timings: BTreeMap<String, f64>) -> Self {
        self.timings = timings;
        self
    }

    pub fn with_bytes(mut self, bytes: BTreeMap<String, u64>) -> Self {
        self.transport_bytes = bytes;
        self
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    /// Every numeric field is finite and the counts agree.
    pub fn validate(&self) -> Result<()> {
        let r = &self.radius;
        let finite = [r.max, r.mean, r.weighted_mean, self.objective, self.sse]
            .iter()
            .chain(&r.per_cluster)
            .chain(self.timings.values())
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("metrics record holds a non-finite value"));
        }
        if r.per_cluster.len() != self.centers || self.k_star + self.empty_clusters != self.centers
        {
            return Err(Error::invalid("metrics record counts disagree"));
        }
        Ok(())
    }
}

/// Recomputes every member distance from `data` and summarizes.
pub fn evaluate(clustering: &Clustering, data: &DataSet, metric: Metric) -> Result<MetricsRecord> {
    check_centers(data, &clustering.centers, metric)?;
    if clustering.assignment.len() != data.len() {
        return Err(Error::invalid("assignment length differs from the data"));
    }
    let dists: Vec<f64> = clustering
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            clustering
                .centers
                .get(a as usize)
                .map(|c| data.distance_to(i, &c.repr))
                .ok_or_else(|| Error::invalid(format!("assignment {a} out of range")))
        })
        .collect::<Result<_>>()?;
    let c = Clustering::from_parts(
        clustering.centers.clone(),
        clustering.assignment.clone(),
        &dists,
    )?;
    Ok(MetricsRecord {
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
        timings: BTreeMap::new(),
        transport_bytes: BTreeMap::new(),
        params: serde_json::Value::Null,
    })
}
