//! Python bindings: data sets, configuration, the staged pipeline and the
//! distributed run.

use geek_core::engine::{run_pipeline, transformer_for, EngineConfig};
use geek_core::io::{gen_synthetic, read_bvecs, read_fvecs, read_sparse, SynthKind, SynthSpec};
use geek_core::metrics::evaluate;
use geek_core::{
    seeds_to_centers, Bucket, CategoricalData, DataSet, DenseData, Error, SeedGroup, Silk,
    SparseData,
};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::InvalidInput(_) | Error::Format { .. } => {
            PyValueError::new_err(e.to_string())
        }
        e => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Engine configuration. Takes the same JSON as the command line.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: EngineConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (json = "{}"))]
    fn new(json: &str) -> PyResult<Self> {
        Ok(PyConfig {
            inner: EngineConfig::from_json(json).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn g(&self) -> usize {
        self.inner.g
    }

    #[setter]
    fn set_g(&mut self, g: usize) {
        self.inner.g = g;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn delta(&self) -> usize {
        self.inner.delta
    }

    #[setter]
    fn set_delta(&mut self, delta: usize) {
        self.inner.delta = delta;
    }
}

#[pyclass(name = "Dataset", frozen)]
struct PyDataset {
    inner: DataSet,
}

#[pymethods]
impl PyDataset {
    #[staticmethod]
    fn dense(rows: Vec<Vec<f32>>) -> PyResult<Self> {
        Ok(PyDataset {
            inner: DataSet::Dense(DenseData::from_rows(&rows).map_err(py_err)?),
        })
    }

    #[staticmethod]
    fn categorical(rows: Vec<Vec<u32>>) -> PyResult<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(PyValueError::new_err("rows differ in length"));
        }
        let codes = rows.into_iter().flatten().collect();
        Ok(PyDataset {
            inner: DataSet::Categorical(CategoricalData::new(dim, codes).map_err(py_err)?),
        })
    }

    #[staticmethod]
    fn sparse(sets: Vec<Vec<u32>>, universe: u64) -> PyResult<Self> {
        let sets = sets
            .into_iter()
            .map(|mut s| {
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        Ok(PyDataset {
            inner: DataSet::Sparse(SparseData::new(universe, sets).map_err(py_err)?),
        })
    }

    /// Reads .fvecs, .bvecs or a sparse text file.
    #[staticmethod]
    #[pyo3(signature = (path, universe = None))]
    fn read(path: &str, universe: Option<u64>) -> PyResult<Self> {
        let inner = if path.ends_with(".fvecs") {
            DataSet::Dense(read_fvecs(path).map_err(py_err)?)
        } else if path.ends_with(".bvecs") {
            DataSet::Dense(read_bvecs(path).map_err(py_err)?)
        } else {
            DataSet::Sparse(read_sparse(path, universe).map_err(py_err)?)
        };
        Ok(PyDataset { inner })
    }

    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.inner.kind()).to_lowercase()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Clustering", frozen)]
struct PyClustering {
    inner: geek_core::Clustering,
    metrics: String,
}

#[pymethods]
impl PyClustering {
    #[getter]
    fn assignment(&self) -> Vec<u32> {
        self.inner.assignment.clone()
    }

    #[getter]
    fn radii(&self) -> Vec<f64> {
        self.inner.radii.clone()
    }

    #[getter]
    fn k_star(&self) -> usize {
        self.inner.k_star()
    }

    #[getter]
    fn mean_radius(&self) -> f64 {
        self.inner.mean_radius()
    }

    #[getter]
    fn max_radius(&self) -> f64 {
        self.inner.max_radius()
    }

    /// The metrics record as JSON.
    fn metrics_json(&self) -> String {
        self.metrics.clone()
    }
}

/// Synthetic data with known labels: `(dataset, labels)`.
#[pyfunction]
#[pyo3(signature = (kind, n, d, clusters, separation, seed = 0))]
fn synthetic(
    kind: &str,
    n: usize,
    d: usize,
    clusters: usize,
    separation: f64,
    seed: u64,
) -> PyResult<(PyDataset, Vec<u32>)> {
    let kind: SynthKind = kind.parse().map_err(py_err)?;
    let syn =
        gen_synthetic(&SynthSpec::new(kind, n, d, clusters, separation, seed)).map_err(py_err)?;
    Ok((PyDataset { inner: syn.data }, syn.labels))
}

/// Buckets as `(table, slot, members)` tuples.
#[pyfunction]
fn transform(data: &PyDataset, config: &PyConfig) -> PyResult<Vec<(u32, u32, Vec<u32>)>> {
    config.inner.validate(&data.inner).map_err(py_err)?;
    let tr = transformer_for(&data.inner, &config.inner).map_err(py_err)?;
    let buckets = tr.transform(&data.inner).map_err(py_err)?;
    Ok(buckets
        .into_iter()
        .map(|b| (b.id.table, b.id.slot, b.members))
        .collect())
}

/// Seed groups from buckets over `n` objects.
#[pyfunction]
fn seed(
    buckets: Vec<(u32, u32, Vec<u32>)>,
    n: usize,
    config: &PyConfig,
) -> PyResult<Vec<Vec<u32>>> {
    let buckets = buckets
        .into_iter()
        .map(|(t, s, m)| Bucket::new(t, s, m))
        .collect::<geek_core::Result<Vec<_>>>()
        .map_err(py_err)?;
    let silk = Silk::new(&config.inner.silk_params(), n).map_err(py_err)?;
    let groups = silk.run(&buckets).map_err(py_err)?;
    Ok(groups.into_iter().map(|g| g.members().to_vec()).collect())
}

/// One-pass assignment to the centers of `seeds`.
#[pyfunction]
fn assign(data: &PyDataset, seeds: Vec<Vec<u32>>, config: &PyConfig) -> PyResult<PyClustering> {
    let metric = config.inner.validate(&data.inner).map_err(py_err)?;
    let groups = seeds
        .into_iter()
        .map(SeedGroup::new)
        .collect::<geek_core::Result<Vec<_>>>()
        .map_err(py_err)?;
    let centers = seeds_to_centers(&groups, &data.inner).map_err(py_err)?;
    let inner = geek_core::assign(&data.inner, &centers, metric).map_err(py_err)?;
    let record = evaluate(&inner, &data.inner, metric).map_err(py_err)?;
    Ok(PyClustering {
        inner,
        metrics: serde_json::to_string(&record).expect("record serializes"),
    })
}

/// The whole pipeline on `config.g` workers.
#[pyfunction]
fn run(py: Python<'_>, data: &PyDataset, config: &PyConfig) -> PyResult<PyClustering> {
    let out = py
        .detach(|| run_pipeline(&data.inner, &config.inner))
        .map_err(py_err)?;
    let metrics = serde_json::to_string(&out.metrics(&config.inner)).expect("record serializes");
    Ok(PyClustering {
        inner: out.clustering,
        metrics,
    })
}

#[pymodule]
fn geek(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyClustering>()?;
    m.add_function(wrap_pyfunction!(synthetic, m)?)?;
    m.add_function(wrap_pyfunction!(transform, m)?)?;
    m.add_function(wrap_pyfunction!(seed, m)?)?;
    m.add_function(wrap_pyfunction!(assign, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
