//! Python bindings. Matrices cross the boundary as lists of rows.

use std::cell::RefCell;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use xgeoml::bench::{run_bench, BenchConfig, Preset};
use xgeoml::engine::{ExplainConfig, PdConfig, ScanResult};
use xgeoml::explain::{lime_explain, shapley_exact, LimeConfig};
use xgeoml::learners::GbtParams;
use xgeoml::spatial::load_dataset_path;
use xgeoml::synth::{generate, ResponseForm, SynthSpec};
use xgeoml::{
    Bandwidth, BandwidthMode, DistanceIndex, Engine, KernelKind, KernelSpec, LearnerConfig,
    LearnerKind, Matrix, Predictor, Schema, SpatialDataset, WeightingMode,
};

fn err(e: xgeoml::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<Matrix> {
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("rows must all have the same length"));
    }
    Ok(Matrix::from_vec(rows.len(), d, rows.concat()))
}

fn to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.rows_iter().map(<[f64]>::to_vec).collect()
}

/// Points with coordinates, features and a response.
#[pyclass(module = "xgeoml", frozen)]
struct Dataset {
    inner: SpatialDataset,
    index: DistanceIndex,
}

impl Dataset {
    fn wrap(inner: SpatialDataset) -> Self {
        let index = DistanceIndex::build(&inner);
        Dataset { inner, index }
    }
}

#[pymethods]
impl Dataset {
    #[new]
    #[pyo3(signature = (coords, features, response, feature_names=None, ids=None))]
    fn new(
        coords: Vec<[f64; 2]>,
        features: Vec<Vec<f64>>,
        response: Vec<f64>,
        feature_names: Option<Vec<String>>,
        ids: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let x = to_matrix(&features)?;
        let names = feature_names.unwrap_or_else(|| (1..=x.ncols()).map(|j| format!("x{j}")).collect());
        let ids = ids.unwrap_or_else(|| (0..coords.len()).map(|i| i.to_string()).collect());
        SpatialDataset::new(ids, coords, x, names, response)
            .map(Dataset::wrap)
            .map_err(err)
    }

    /// Reads `id,cx,cy,<features>,y`.
    #[staticmethod]
    fn from_csv(path: std::path::PathBuf) -> PyResult<Self> {
        load_dataset_path(&path, &Schema::default()).map(Dataset::wrap).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn ids(&self) -> Vec<String> {
        self.inner.ids().to_vec()
    }

    #[getter]
    fn coords(&self) -> Vec<[f64; 2]> {
        self.inner.coords().to_vec()
    }

    #[getter]
    fn features(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.features())
    }

    #[getter]
    fn feature_names(&self) -> Vec<String> {
        self.inner.feature_names().to_vec()
    }

    #[getter]
    fn response(&self) -> Vec<f64> {
        self.inner.response().to_vec()
    }

    /// Indices and distances of the `k` nearest points to point `i`, itself first.
    fn knn(&self, i: usize, k: usize) -> PyResult<Vec<(usize, f64)>> {
        if i >= self.inner.len() || k > self.inner.len() {
            return Err(PyValueError::new_err("point or neighbor count out of range"));
        }
        Ok(self.index.knn(i, k))
    }

    fn __repr__(&self) -> String {
        format!("Dataset(n={}, features={:?})", self.inner.len(), self.inner.feature_names())
    }
}

/// Spatial kernel: `kind` is gaussian, binary or gaussian_binary; `mode` is
/// fixed (distance radius) or adaptive (neighbor count).
#[pyclass(module = "xgeoml", frozen)]
struct Kernel {
    spec: KernelSpec,
}

#[pymethods]
impl Kernel {
    #[new]
    #[pyo3(signature = (kind, mode, bandwidth, sigma_multiplier=1.0))]
    fn new(kind: &str, mode: &str, bandwidth: f64, sigma_multiplier: f64) -> PyResult<Self> {
        let kind: KernelKind = kind.parse().map_err(err)?;
        let mode: BandwidthMode = mode.parse().map_err(err)?;
        let spec = KernelSpec {
            kind,
            bandwidth: Bandwidth::from_value(mode, bandwidth).map_err(err)?,
            sigma_multiplier,
        };
        spec.validate(usize::MAX).map_err(err)?;
        Ok(Kernel { spec })
    }

    /// Weight of every point relative to target `i`.
    fn weights(&self, data: &Dataset, i: usize) -> PyResult<Vec<f64>> {
        if i >= data.inner.len() {
            return Err(PyValueError::new_err("point out of range"));
        }
        xgeoml::weights_for(&data.index, &self.spec, i)
            .map(|w| w.weights)
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Kernel({})", self.spec)
    }
}

/// Local learner. `kind` is linear, ridge, tree, gbt or knn.
#[pyclass(module = "xgeoml", frozen)]
struct Learner {
    config: LearnerConfig,
}

#[pymethods]
impl Learner {
    #[new]
    #[pyo3(signature = (
        kind="gbt", weighting_mode=None, ridge_lambda=None, max_depth=None,
        n_rounds=None, learning_rate=None, subsample=None, k_model=None
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        weighting_mode: Option<&str>,
        ridge_lambda: Option<f64>,
        max_depth: Option<usize>,
        n_rounds: Option<usize>,
        learning_rate: Option<f64>,
        subsample: Option<f64>,
        k_model: Option<usize>,
    ) -> PyResult<Self> {
        let mut k = LearnerKind::from_name(kind).map_err(err)?;
        match &mut k {
            LearnerKind::Ridge { lambda } => *lambda = ridge_lambda.unwrap_or(*lambda),
            LearnerKind::Tree { max_depth: d } => *d = max_depth.unwrap_or(*d),
            LearnerKind::Gbt(p) => {
                let def = GbtParams::default();
                *p = GbtParams {
                    n_rounds: n_rounds.unwrap_or(def.n_rounds),
                    learning_rate: learning_rate.unwrap_or(def.learning_rate),
                    max_depth: max_depth.unwrap_or(def.max_depth),
                    subsample: subsample.unwrap_or(def.subsample),
                };
            }
            LearnerKind::Knn { k_model: m } => *m = k_model.unwrap_or(*m),
            LearnerKind::Linear => {}
        }
        let mut config = LearnerConfig::new(k);
        if let Some(w) = weighting_mode {
            config = config.with_weighting(w.parse::<WeightingMode>().map_err(err)?);
        }
        config.validate().map_err(err)?;
        Ok(Learner { config })
    }

    #[getter]
    fn weighting_mode(&self) -> String {
        self.config.weighting_mode().to_string()
    }

    fn __repr__(&self) -> String {
        format!("Learner({}, {})", self.config.kind.name(), self.config.weighting_mode())
    }
}

fn scan_dict<'py>(py: Python<'py>, s: &ScanResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("kind", s.kind.to_string())?;
    d.set_item("mode", s.mode.to_string())?;
    d.set_item("chosen", s.chosen)?;
    let curve: Vec<(f64, Option<f64>)> = s.points.iter().map(|p| (p.bandwidth, p.loo_r2)).collect();
    d.set_item("curve", curve)?;
    Ok(d)
}

/// Per-point local models over one dataset.
#[pyclass(module = "xgeoml")]
struct Model {
    data: Py<Dataset>,
    threads: usize,
    seed: u64,
}

impl Model {
    fn with_engine<T>(
        &self,
        py: Python<'_>,
        f: impl FnOnce(&Engine<'_>) -> xgeoml::Result<T> + Send,
    ) -> PyResult<T>
    where
        T: Send,
    {
        let data = self.data.get();
        let (threads, seed) = (self.threads, self.seed);
        py.detach(|| {
            let engine = Engine::new(&data.inner, &data.index, threads, seed)?;
            f(&engine)
        })
        .map_err(err)
    }
}

#[pymethods]
impl Model {
    #[new]
    #[pyo3(signature = (data, threads=1, seed=0))]
    fn new(data: Py<Dataset>, threads: usize, seed: u64) -> PyResult<Self> {
        if threads == 0 {
            return Err(PyValueError::new_err("threads must be at least 1"));
        }
        Ok(Model { data, threads, seed })
    }

    /// Leave-one-out predictions and their R².
    fn loo_evaluate(&self, py: Python<'_>, kernel: &Kernel, learner: &Learner) -> PyResult<(Vec<f64>, f64)> {
        let r = self.with_engine(py, |e| e.loo_evaluate(&kernel.spec, &learner.config))?;
        Ok((r.predictions, r.r2))
    }

    /// Runs the explainers at every point. Returns a dict of fields
    /// (lists of rows) plus `fitted`, `failed` and `pd`.
    #[pyo3(signature = (kernel, learner, shap=true, lime=true, lime_samples=1000, importance=true, pd_features=None, pd_bins=20))]
    #[allow(clippy::too_many_arguments)]
    fn explain_all<'py>(
        &self,
        py: Python<'py>,
        kernel: &Kernel,
        learner: &Learner,
        shap: bool,
        lime: bool,
        lime_samples: usize,
        importance: bool,
        pd_features: Option<Vec<usize>>,
        pd_bins: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = ExplainConfig {
            shap,
            lime: lime.then(|| LimeConfig {
                n_samples: lime_samples,
                ..LimeConfig::default()
            }),
            importance,
            pd: PdConfig {
                bins: pd_bins,
                features: pd_features.unwrap_or_default(),
                ..PdConfig::default()
            },
        };
        let f = self.with_engine(py, |e| e.explain_all(&kernel.spec, &learner.config, &cfg))?;
        let d = PyDict::new(py);
        for (name, m) in f.explainer_fields() {
            d.set_item(name, to_rows(m))?;
        }
        if let Some(c) = &f.coefficients {
            d.set_item("coefficients", to_rows(c))?;
        }
        if let Some(b) = &f.shap_base {
            d.set_item("shap_base", b.clone())?;
        }
        d.set_item("fitted", f.fitted.clone())?;
        d.set_item("failed", f.failed.clone())?;
        let pd: Vec<(usize, Vec<f64>, Vec<f64>)> =
            f.pd.iter().map(|c| (c.feature, c.grid.clone(), c.means.clone())).collect();
        d.set_item("pd", pd)?;
        Ok(d)
    }

    /// Local weighted least squares coefficients, slopes then intercept.
    fn gwr_coefficients(&self, py: Python<'_>, kernel: &Kernel) -> PyResult<Vec<Vec<f64>>> {
        let c = self.with_engine(py, |e| e.gwr_coefficient_surface(&kernel.spec))?;
        Ok(to_rows(&c.values))
    }

    /// Local slopes of each attribution column on its feature.
    fn smooth_attributions(&self, py: Python<'_>, kernel: &Kernel, field: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        let m = to_matrix(&field)?;
        let c = self.with_engine(py, |e| e.gwr_smooth_attributions(&kernel.spec, &m))?;
        Ok(to_rows(&c.values))
    }

    /// LOO R² over a bandwidth grid; returns kind, mode, chosen and curve.
    fn scan<'py>(
        &self,
        py: Python<'py>,
        kind: &str,
        mode: &str,
        learner: &Learner,
        grid: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let kind: KernelKind = kind.parse().map_err(err)?;
        let mode: BandwidthMode = mode.parse().map_err(err)?;
        let s = self.with_engine(py, |e| e.scan_bandwidth(kind, mode, 1.0, &learner.config, &grid, None))?;
        scan_dict(py, &s)
    }
}

/// Calls a Python callable as a model, keeping the first raised error.
struct PyModel<'a, 'py> {
    f: &'a Bound<'py, PyAny>,
    error: RefCell<Option<PyErr>>,
}

impl Predictor for PyModel<'_, '_> {
    fn predict_one(&self, x: &[f64]) -> f64 {
        if self.error.borrow().is_some() {
            return f64::NAN;
        }
        match self.f.call1((x.to_vec(),)).and_then(|v| v.extract::<f64>()) {
            Ok(v) => v,
            Err(e) => {
                *self.error.borrow_mut() = Some(e);
                f64::NAN
            }
        }
    }
}

impl PyModel<'_, '_> {
    fn check(self) -> PyResult<()> {
        self.error.into_inner().map_or(Ok(()), Err)
    }
}

/// Exact Shapley values of `model(row) -> float` at `x`, with features
/// outside a coalition set to the weighted background mean.
#[pyfunction]
#[pyo3(signature = (model, x, background, weights=None))]
fn shapley_values(
    model: &Bound<'_, PyAny>,
    x: Vec<f64>,
    background: Vec<Vec<f64>>,
    weights: Option<Vec<f64>>,
) -> PyResult<(Vec<f64>, f64)> {
    let bg = to_matrix(&background)?;
    let w = weights.unwrap_or_else(|| vec![1.0; bg.nrows()]);
    let m = PyModel { f: model, error: RefCell::new(None) };
    let r = shapley_exact(&m, &x, &bg, &w);
    m.check()?;
    let r = r.map_err(err)?;
    Ok((r.values, r.base_value))
}

/// LIME slopes and intercept of `model` around `x`.
#[pyfunction]
#[pyo3(signature = (model, x, local_x, seed=0, n_samples=1000))]
fn lime_values(
    model: &Bound<'_, PyAny>,
    x: Vec<f64>,
    local_x: Vec<Vec<f64>>,
    seed: u64,
    n_samples: usize,
) -> PyResult<(Vec<f64>, f64)> {
    let local = to_matrix(&local_x)?;
    let cfg = LimeConfig {
        n_samples,
        ..LimeConfig::default()
    };
    let m = PyModel { f: model, error: RefCell::new(None) };
    let r = lime_explain(&m, &x, &local, seed, &cfg);
    m.check()?;
    let r = r.map_err(err)?;
    Ok((r.slopes, r.intercept))
}

#[pyfunction]
fn pearson(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    xgeoml::pearson_correlation(&a, &b).map_err(err)
}

/// Per-column correlations of a field with the truth, and their mean.
#[pyfunction]
fn recovery(field: Vec<Vec<f64>>, truth: Vec<Vec<f64>>) -> PyResult<(Vec<f64>, f64)> {
    let r = xgeoml::recovery_metrics(&to_matrix(&field)?, &to_matrix(&truth)?).map_err(err)?;
    Ok((r.per_feature, r.mean))
}

/// Synthetic grid dataset and its true coefficient surfaces by name.
#[pyfunction]
#[pyo3(signature = (preset="linear", seed=42, grid_side=30, noise_sd=0.5))]
fn synth<'py>(
    py: Python<'py>,
    preset: &str,
    seed: u64,
    grid_side: usize,
    noise_sd: f64,
) -> PyResult<(Dataset, Bound<'py, PyDict>)> {
    let spec = SynthSpec {
        grid_side,
        seed,
        noise_sd,
        response_form: preset.parse::<ResponseForm>().map_err(err)?,
        ..SynthSpec::default()
    };
    let (ds, truth) = generate(&spec).map_err(err)?;
    let t = PyDict::new(py);
    for (j, name) in truth.names.iter().enumerate() {
        t.set_item(name, truth.values.column(j))?;
    }
    Ok((Dataset::wrap(ds), t))
}

/// Runs the synthetic benchmark; returns the summary table and model rows.
#[pyfunction]
#[pyo3(name = "bench", signature = (preset="linear", seed=42, threads=1))]
fn run_bench_py<'py>(py: Python<'py>, preset: &str, seed: u64, threads: usize) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = BenchConfig::new(preset.parse::<Preset>().map_err(err)?);
    cfg.seed = seed;
    cfg.threads = threads.max(1);
    let b = py.detach(|| run_bench(&cfg)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("summary", b.summary())?;
    d.set_item("ols_r2", b.ols.in_sample_r2)?;
    let rows = b
        .rows()
        .into_iter()
        .map(|r| {
            let row = PyDict::new(py);
            row.set_item("model", &r.model)?;
            row.set_item("kernel", r.kernel.to_string())?;
            row.set_item("loo_r2", r.loo_r2)?;
            row.set_item("in_sample_r2", r.in_sample_r2)?;
            let rec = PyDict::new(py);
            for (name, m) in &r.recovery {
                rec.set_item(name, m.per_feature.clone())?;
            }
            row.set_item("recovery", rec)?;
            Ok(row)
        })
        .collect::<PyResult<Vec<_>>>()?;
    d.set_item("rows", rows)?;
    Ok(d)
}

#[pymodule]
#[pyo3(name = "xgeoml")]
fn xgeoml_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Kernel>()?;
    m.add_class::<Learner>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(shapley_values, m)?)?;
    m.add_function(wrap_pyfunction!(lime_values, m)?)?;
    m.add_function(wrap_pyfunction!(pearson, m)?)?;
    m.add_function(wrap_pyfunction!(recovery, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench_py, m)?)?;
    Ok(())
}
