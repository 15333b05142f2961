//! Flat `key = value` run configuration.
//!
//! Lines starting with `#` are comments. When a `[config]` section header is
//! present only the lines of that section are read, so a run report can be
//! fed back in as a configuration file.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bench::{BenchConfig, Preset};
use crate::engine::{default_grid, ExplainConfig, PdConfig};
use crate::error::{Error, Result};
use crate::explain::{Binning, LimeConfig, DEFAULT_PD_BINS};
use crate::kernels::{Bandwidth, BandwidthMode, KernelKind, KernelSpec};
use crate::learners::{
    GbtParams, LearnerConfig, LearnerKind, WeightingMode, DEFAULT_KNN_K, DEFAULT_RIDGE_LAMBDA,
    DEFAULT_TREE_DEPTH,
};
use crate::spatial::{Schema, SpatialDataset};
use crate::synth::{Axis, SynthSpec};

/// Environment variable overriding `run.threads`.
pub const THREADS_ENV: &str = "XGEOML_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Ground-truth CSV (id + one column per feature) for recovery metrics.
    pub truth: Option<PathBuf>,
    pub schema: Schema,

    pub seed: u64,
    pub threads: usize,

    pub kernel_kind: KernelKind,
    pub bandwidth_mode: BandwidthMode,
    pub fixed_radius: f64,
    pub adaptive_k: usize,
    pub sigma_multiplier: f64,

    pub learner: String,
    pub weighting: Option<WeightingMode>,
    pub ridge_lambda: f64,
    pub tree_max_depth: usize,
    pub gbt: GbtParams,
    pub knn_k: usize,

    pub shap: bool,
    pub lime_enabled: bool,
    pub lime: LimeConfig,
    pub importance: bool,
    pub pd_bins: usize,
    /// Feature names; empty disables partial dependence.
    pub pd_features: Vec<String>,
    pub pd_binning: Binning,

    pub scan_kinds: Vec<KernelKind>,
    pub scan_modes: Vec<BandwidthMode>,
    /// Empty means the default grid of the mode.
    pub scan_fixed_grid: Vec<f64>,
    pub scan_adaptive_grid: Vec<f64>,

    pub bench_preset: Preset,
    pub bench_gwr_kernel: KernelKind,
    pub bench_linear_kernel: KernelKind,
    pub bench_fixed_grid: Vec<f64>,
    /// `None` follows the preset.
    pub bench_fixed_kinds: Option<Vec<KernelKind>>,

    pub synth: SynthSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = BenchConfig::new(Preset::Nonlinear);
        let gbt = GbtParams::default();
        RunConfig {
            input: None,
            output_dir: PathBuf::from("out"),
            truth: None,
            schema: Schema::default(),
            seed: 42,
            threads: 1,
            kernel_kind: KernelKind::Binary,
            bandwidth_mode: BandwidthMode::Adaptive,
            fixed_radius: 7.0,
            adaptive_k: 150,
            sigma_multiplier: 1.0,
            learner: "gbt".into(),
            weighting: None,
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            tree_max_depth: DEFAULT_TREE_DEPTH,
            gbt,
            knn_k: DEFAULT_KNN_K,
            shap: true,
            lime_enabled: true,
            lime: LimeConfig::default(),
            importance: true,
            pd_bins: DEFAULT_PD_BINS,
            pd_features: Vec::new(),
            pd_binning: Binning::Percentile,
            scan_kinds: KernelKind::ALL.to_vec(),
            scan_modes: BandwidthMode::ALL.to_vec(),
            scan_fixed_grid: Vec::new(),
            scan_adaptive_grid: Vec::new(),
            bench_preset: Preset::Nonlinear,
            bench_gwr_kernel: bench.gwr_kernel,
            bench_linear_kernel: bench.linear_kernel,
            bench_fixed_grid: bench.fixed_grid,
            bench_fixed_kinds: None,
            synth: SynthSpec::default(),
        }
    }
}

fn parse_value<T: FromStr>(v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| Error::Config(format!("bad value '{v}': {e}")))
}

fn parse_bool(v: &str) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("expected true or false, got '{v}'"))),
    }
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse_value)
        .collect()
}

fn parse_path(v: &str) -> Option<PathBuf> {
    (!v.is_empty()).then(|| PathBuf::from(v))
}

fn parse_centers(v: &str) -> Result<Vec<[f64; 2]>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|c| {
            let (a, b) = c
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("center '{c}' is not u:v")))?;
            Ok([parse_value(a.trim())?, parse_value(b.trim())?])
        })
        .collect()
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn path_str(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

/// `(line number, key, value)` triples of the relevant section.
fn entries(text: &str) -> Result<Vec<(usize, String, String)>> {
    let has_section = text.lines().any(|l| l.trim() == "[config]");
    let mut inside = !has_section;
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.starts_with('[') {
            if !has_section {
                return Err(Error::Config(format!("line {}: unexpected section {line}", n + 1)));
            }
            inside = line == "[config]";
            continue;
        }
        if !inside {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
        out.push((n + 1, k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = BTreeSet::new();
        for (line, key, value) in entries(text)? {
            if !seen.insert(key.clone()) {
                return Err(Error::Config(format!("line {line}: duplicate key '{key}'")));
            }
            cfg.set(&key, &value).map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("line {line}: {key}: {m}")),
                other => Error::Config(format!("line {line}: {key}: {other}")),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Applies `XGEOML_THREADS` when set.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(THREADS_ENV) {
            self.threads = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{THREADS_ENV}: bad thread count '{v}'")))?;
            if self.threads == 0 {
                return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
            }
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "io.input" => self.input = parse_path(v),
            "io.output_dir" => self.output_dir = PathBuf::from(v),
            "io.truth" => self.truth = parse_path(v),
            "io.id_column" => self.schema.id = v.into(),
            "io.x_column" => self.schema.cx = v.into(),
            "io.y_column" => self.schema.cy = v.into(),
            "io.response_column" => self.schema.response = v.into(),
            "io.feature_columns" => self.schema.features = parse_list(v)?,
            "io.delimiter" => {
                let b = v.as_bytes();
                self.schema.delimiter = match v {
                    "tab" => b'\t',
                    _ if b.len() == 1 => b[0],
                    _ => return Err(Error::Config(format!("delimiter must be one byte, got '{v}'"))),
                };
            }
            "run.seed" => self.seed = parse_value(v)?,
            "run.threads" => self.threads = parse_value(v)?,
            "kernel.kind" => self.kernel_kind = parse_value(v)?,
            "kernel.bandwidth_mode" => self.bandwidth_mode = parse_value(v)?,
            "kernel.b" => self.fixed_radius = parse_value(v)?,
            "kernel.k" => self.adaptive_k = parse_value(v)?,
            "kernel.sigma_multiplier" => self.sigma_multiplier = parse_value(v)?,
            "learner.kind" => {
                LearnerKind::from_name(v)?;
                self.learner = v.into();
            }
            "learner.weighting_mode" => {
                self.weighting = if v == "auto" { None } else { Some(parse_value(v)?) }
            }
            "learner.ridge.lambda" => self.ridge_lambda = parse_value(v)?,
            "learner.tree.max_depth" => self.tree_max_depth = parse_value(v)?,
            "learner.gbt.n_rounds" => self.gbt.n_rounds = parse_value(v)?,
            "learner.gbt.learning_rate" => self.gbt.learning_rate = parse_value(v)?,
            "learner.gbt.max_depth" => self.gbt.max_depth = parse_value(v)?,
            "learner.gbt.subsample" => self.gbt.subsample = parse_value(v)?,
            "learner.knn.k_model" => self.knn_k = parse_value(v)?,
            "explain.shap.enabled" => self.shap = parse_bool(v)?,
            "explain.lime.enabled" => self.lime_enabled = parse_bool(v)?,
            "explain.lime.n_samples" => self.lime.n_samples = parse_value(v)?,
            "explain.lime.kernel_width" => {
                self.lime.kernel_width = if v == "auto" { None } else { Some(parse_value(v)?) }
            }
            "explain.lime.ridge" => self.lime.ridge = parse_value(v)?,
            "explain.importance.enabled" => self.importance = parse_bool(v)?,
            "explain.pd.bins" => self.pd_bins = parse_value(v)?,
            "explain.pd.features" => self.pd_features = parse_list(v)?,
            "explain.pd.binning" => self.pd_binning = parse_value(v)?,
            "scan.kinds" => self.scan_kinds = parse_list(v)?,
            "scan.modes" => self.scan_modes = parse_list(v)?,
            "scan.fixed_grid" => self.scan_fixed_grid = parse_list(v)?,
            "scan.adaptive_grid" => self.scan_adaptive_grid = parse_list(v)?,
            "bench.preset" => self.bench_preset = parse_value(v)?,
            "bench.gwr_kernel" => self.bench_gwr_kernel = parse_value(v)?,
            "bench.linear_kernel" => self.bench_linear_kernel = parse_value(v)?,
            "bench.fixed_grid" => self.bench_fixed_grid = parse_list(v)?,
            "bench.fixed_kinds" => {
                self.bench_fixed_kinds = if v == "auto" { None } else { Some(parse_list(v)?) }
            }
            "synth.grid_side" => self.synth.grid_side = parse_value(v)?,
            "synth.noise_sd" => self.synth.noise_sd = parse_value(v)?,
            "synth.noise_in_nonlinear" => self.synth.noise_in_nonlinear = parse_bool(v)?,
            "synth.cosine_periods" => self.synth.cosine_periods = parse_value(v)?,
            "synth.cosine_axis" => self.synth.cosine_axis = parse_value::<Axis>(v)?,
            "synth.poly_centers" => self.synth.poly_centers = parse_centers(v)?,
            "synth.poly_sigma_divisor" => self.synth.poly_sigma_divisor = parse_value(v)?,
            _ => return Err(Error::Config("unknown key".into())),
        }
        Ok(())
    }

    /// Checks everything that does not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        if self.threads == 0 {
            return Err(Error::Config("run.threads must be positive".into()));
        }
        if !(self.sigma_multiplier > 0.0 && self.sigma_multiplier.is_finite()) {
            return Err(Error::Config("kernel.sigma_multiplier must be positive".into()));
        }
        // the upper bound on k is checked once the dataset is loaded
        self.kernel_spec()?.validate(usize::MAX)?;
        self.learner_config()?.validate()?;
        if self.lime.n_samples < 2 {
            return Err(Error::Config("explain.lime.n_samples must be at least 2".into()));
        }
        if self.lime.kernel_width.is_some_and(|w| !(w > 0.0)) {
            return Err(Error::Config("explain.lime.kernel_width must be positive".into()));
        }
        if !(self.lime.ridge >= 0.0) {
            return Err(Error::Config("explain.lime.ridge must be non-negative".into()));
        }
        if self.pd_bins < 2 {
            return Err(Error::Config("explain.pd.bins must be at least 2".into()));
        }
        if self.scan_kinds.is_empty() || self.scan_modes.is_empty() {
            return Err(Error::Config("scan.kinds and scan.modes must be nonempty".into()));
        }
        for &v in &self.scan_fixed_grid {
            Bandwidth::from_value(BandwidthMode::Fixed, v)?;
        }
        for &v in &self.scan_adaptive_grid {
            Bandwidth::from_value(BandwidthMode::Adaptive, v)?;
        }
        if self.bench_fixed_grid.is_empty() {
            return Err(Error::Config("bench.fixed_grid must be nonempty".into()));
        }
        for &v in &self.bench_fixed_grid {
            Bandwidth::from_value(BandwidthMode::Fixed, v)?;
        }
        self.synth.validate()
    }

    fn bandwidth_value(&self) -> f64 {
        match self.bandwidth_mode {
            BandwidthMode::Fixed => self.fixed_radius,
            BandwidthMode::Adaptive => self.adaptive_k as f64,
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        Ok(KernelSpec {
            kind: self.kernel_kind,
            bandwidth: Bandwidth::from_value(self.bandwidth_mode, self.bandwidth_value())?,
            sigma_multiplier: self.sigma_multiplier,
        })
    }

    pub fn learner_config(&self) -> Result<LearnerConfig> {
        let kind = match LearnerKind::from_name(&self.learner)? {
            LearnerKind::Ridge { .. } => LearnerKind::Ridge {
                lambda: self.ridge_lambda,
            },
            LearnerKind::Tree { .. } => LearnerKind::Tree {
                max_depth: self.tree_max_depth,
            },
            LearnerKind::Gbt(_) => LearnerKind::Gbt(self.gbt),
            LearnerKind::Knn { .. } => LearnerKind::Knn { k_model: self.knn_k },
            k => k,
        };
        Ok(LearnerConfig {
            kind,
            weighting: self.weighting,
        })
    }

    /// Explainer settings with PD feature names resolved against `ds`.
    pub fn explain_config(&self, ds: &SpatialDataset) -> Result<ExplainConfig> {
        let names = ds.feature_names();
        let features = self
            .pd_features
            .iter()
            .map(|f| {
                names
                    .iter()
                    .position(|n| n == f)
                    .ok_or_else(|| Error::Config(format!("explain.pd.features: unknown feature '{f}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ExplainConfig {
            shap: self.shap,
            lime: self.lime_enabled.then_some(self.lime),
            importance: self.importance,
            pd: PdConfig {
                bins: self.pd_bins,
                features,
                binning: self.pd_binning,
            },
        })
    }

    pub fn scan_grid(&self, mode: BandwidthMode, n: usize) -> Vec<f64> {
        let g = match mode {
            BandwidthMode::Fixed => &self.scan_fixed_grid,
            BandwidthMode::Adaptive => &self.scan_adaptive_grid,
        };
        if g.is_empty() {
            default_grid(mode, n)
        } else {
            g.clone()
        }
    }

    /// Benchmark settings: the local learner row uses `learner.*` and `kernel.*`.
    pub fn bench_config(&self) -> Result<BenchConfig> {
        let mut b = BenchConfig::new(self.bench_preset);
        b.synth = SynthSpec {
            seed: self.seed,
            response_form: self.bench_preset.into(),
            ..self.synth.clone()
        };
        b.seed = self.seed;
        b.threads = self.threads;
        b.gwr_kernel = self.bench_gwr_kernel;
        b.linear_kernel = self.bench_linear_kernel;
        b.scan_grid = self.scan_adaptive_grid.clone();
        b.gbt = self.learner_config()?;
        b.gbt_kernel = self.kernel_spec()?;
        b.fixed_grid = self.bench_fixed_grid.clone();
        if let Some(k) = &self.bench_fixed_kinds {
            b.fixed_kinds = k.clone();
        }
        b.lime = self.lime;
        b.pd_bins = self.pd_bins;
        Ok(b)
    }

    /// Every resolved key in a fixed order. `run.threads` is left out because
    /// it never changes results.
    pub fn echo(&self) -> String {
        let s = &self.schema;
        let delim = match s.delimiter {
            b'\t' => "tab".to_string(),
            c => (c as char).to_string(),
        };
        let weighting = self.weighting.map_or("auto".to_string(), |w| w.to_string());
        let width = self.lime.kernel_width.map_or("auto".to_string(), |w| w.to_string());
        let centers: Vec<String> = self
            .synth
            .poly_centers
            .iter()
            .map(|c| format!("{}:{}", c[0], c[1]))
            .collect();
        let pairs: Vec<(&str, String)> = vec![
            ("io.input", path_str(&self.input)),
            ("io.output_dir", self.output_dir.display().to_string()),
            ("io.truth", path_str(&self.truth)),
            ("io.id_column", s.id.clone()),
            ("io.x_column", s.cx.clone()),
            ("io.y_column", s.cy.clone()),
            ("io.response_column", s.response.clone()),
            ("io.feature_columns", join(&s.features)),
            ("io.delimiter", delim),
            ("run.seed", self.seed.to_string()),
            ("kernel.kind", self.kernel_kind.to_string()),
            ("kernel.bandwidth_mode", self.bandwidth_mode.to_string()),
            ("kernel.b", self.fixed_radius.to_string()),
            ("kernel.k", self.adaptive_k.to_string()),
            ("kernel.sigma_multiplier", self.sigma_multiplier.to_string()),
            ("learner.kind", self.learner.clone()),
            ("learner.weighting_mode", weighting),
            ("learner.ridge.lambda", self.ridge_lambda.to_string()),
            ("learner.tree.max_depth", self.tree_max_depth.to_string()),
            ("learner.gbt.n_rounds", self.gbt.n_rounds.to_string()),
            ("learner.gbt.learning_rate", self.gbt.learning_rate.to_string()),
            ("learner.gbt.max_depth", self.gbt.max_depth.to_string()),
            ("learner.gbt.subsample", self.gbt.subsample.to_string()),
            ("learner.knn.k_model", self.knn_k.to_string()),
            ("explain.shap.enabled", self.shap.to_string()),
            ("explain.lime.enabled", self.lime_enabled.to_string()),
            ("explain.lime.n_samples", self.lime.n_samples.to_string()),
            ("explain.lime.kernel_width", width),
            ("explain.lime.ridge", self.lime.ridge.to_string()),
            ("explain.importance.enabled", self.importance.to_string()),
            ("explain.pd.bins", self.pd_bins.to_string()),
            ("explain.pd.features", join(&self.pd_features)),
            ("explain.pd.binning", self.pd_binning.to_string()),
            ("scan.kinds", join(&self.scan_kinds)),
            ("scan.modes", join(&self.scan_modes)),
            ("scan.fixed_grid", join(&self.scan_fixed_grid)),
            ("scan.adaptive_grid", join(&self.scan_adaptive_grid)),
            ("bench.preset", self.bench_preset.to_string()),
            ("bench.gwr_kernel", self.bench_gwr_kernel.to_string()),
            ("bench.linear_kernel", self.bench_linear_kernel.to_string()),
            ("bench.fixed_grid", join(&self.bench_fixed_grid)),
            (
                "bench.fixed_kinds",
                self.bench_fixed_kinds.as_ref().map_or("auto".to_string(), |k| join(k)),
            ),
            ("synth.grid_side", self.synth.grid_side.to_string()),
            ("synth.noise_sd", self.synth.noise_sd.to_string()),
            ("synth.noise_in_nonlinear", self.synth.noise_in_nonlinear.to_string()),
            ("synth.cosine_periods", self.synth.cosine_periods.to_string()),
            ("synth.cosine_axis", self.synth.cosine_axis.to_string()),
            ("synth.poly_centers", centers.join(",")),
            ("synth.poly_sigma_divisor", self.synth.poly_sigma_divisor.to_string()),
        ];
        let mut out = String::new();
        for (k, v) in pairs {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
