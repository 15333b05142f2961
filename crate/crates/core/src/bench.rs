//! Synthetic benchmark: global OLS, classical GWR and the local learners on
//! generated data with known coefficient surfaces.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::engine::{
    default_grid, global_ols, recovery_metrics, AttributionField, Engine, ExplainConfig, OlsFit,
    PdConfig, PdSummary, RecoveryMetrics, ScanResult,
};
use crate::error::{Error, Result};
use crate::explain::LimeConfig;
use crate::kernels::{Bandwidth, BandwidthMode, KernelKind, KernelSpec};
use crate::learners::LearnerConfig;
use crate::matrix::Matrix;
use crate::spatial::{r_squared, DistanceIndex};
use crate::synth::{generate, GroundTruth, ResponseForm, SynthSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Linear,
    Nonlinear,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Preset::Linear),
            "nonlinear" => Ok(Preset::Nonlinear),
            other => Err(Error::InvalidArgument(format!(
                "unknown preset '{other}' (expected linear or nonlinear)"
            ))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Linear => "linear",
            Preset::Nonlinear => "nonlinear",
        })
    }
}

impl From<Preset> for ResponseForm {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Linear => ResponseForm::Linear,
            Preset::Nonlinear => ResponseForm::Nonlinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub preset: Preset,
    /// Data generation; the response form follows `preset`.
    pub synth: SynthSpec,
    pub seed: u64,
    pub threads: usize,
    /// Kernel of the GWR baseline, bandwidth chosen by LOO over `scan_grid`.
    pub gwr_kernel: KernelKind,
    /// Kernel of the local linear learner, bandwidth chosen the same way.
    pub linear_kernel: KernelKind,
    /// Adaptive grid for both scans; empty means the default grid.
    pub scan_grid: Vec<f64>,
    pub gbt: LearnerConfig,
    pub gbt_kernel: KernelSpec,
    /// Radii scanned for the fixed-bandwidth rows.
    pub fixed_grid: Vec<f64>,
    /// One fixed-bandwidth row per kind, each at its LOO-optimal radius.
    pub fixed_kinds: Vec<KernelKind>,
    pub lime: LimeConfig,
    pub pd_bins: usize,
}

/// Integer radii 3..=12.
pub fn default_fixed_grid() -> Vec<f64> {
    (3..=12).map(f64::from).collect()
}

/// Fixed-bandwidth rows only appear in the nonlinear comparison.
pub fn default_fixed_kinds(preset: Preset) -> Vec<KernelKind> {
    match preset {
        Preset::Linear => Vec::new(),
        Preset::Nonlinear => vec![KernelKind::Binary, KernelKind::GaussianBinary],
    }
}

impl BenchConfig {
    pub fn new(preset: Preset) -> Self {
        BenchConfig {
            preset,
            synth: SynthSpec {
                response_form: preset.into(),
                ..SynthSpec::default()
            },
            seed: 42,
            threads: 1,
            gwr_kernel: KernelKind::GaussianBinary,
            linear_kernel: KernelKind::Binary,
            scan_grid: Vec::new(),
            gbt: LearnerConfig::gbt(),
            gbt_kernel: KernelSpec::new(KernelKind::Binary, Bandwidth::Adaptive(150)),
            fixed_grid: default_fixed_grid(),
            fixed_kinds: default_fixed_kinds(preset),
            lime: LimeConfig::default(),
            pd_bins: crate::explain::DEFAULT_PD_BINS,
        }
    }

    fn grid(&self, n: usize) -> Vec<f64> {
        if self.scan_grid.is_empty() {
            default_grid(BandwidthMode::Adaptive, n)
        } else {
            self.scan_grid.clone()
        }
    }
}

/// One line of the accuracy table.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRow {
    pub model: String,
    pub kernel: KernelSpec,
    pub in_sample_r2: Option<f64>,
    pub loo_r2: f64,
    /// Recovery of the true surfaces per attribution field.
    pub recovery: Vec<(String, RecoveryMetrics)>,
}

impl ModelRow {
    pub fn recovery_of(&self, field: &str) -> Option<&RecoveryMetrics> {
        self.recovery.iter().find(|(n, _)| n == field).map(|(_, m)| m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub preset: Preset,
    pub ols: OlsFit,
    pub gwr: ModelRow,
    pub linear: ModelRow,
    pub gbt: ModelRow,
    pub fixed: Vec<ModelRow>,
    pub fixed_scans: Vec<ScanResult>,
    pub pd: Vec<PdSummary>,
    pub truth: GroundTruth,
}

fn fitted_r2(y: &[f64], fitted: &[f64]) -> f64 {
    let (a, b): (Vec<f64>, Vec<f64>) = y
        .iter()
        .zip(fitted)
        .filter(|(_, f)| f.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    r_squared(&a, &b)
}

fn field_recovery(field: &AttributionField, truth: &Matrix) -> Result<Vec<(String, RecoveryMetrics)>> {
    let mut out = Vec::new();
    for (name, m) in field.explainer_fields() {
        out.push((name.to_string(), recovery_metrics(m, truth)?));
    }
    if let Some(c) = &field.coefficients {
        out.push(("coefficients".to_string(), recovery_metrics(c, truth)?));
    }
    Ok(out)
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    let mut synth = cfg.synth.clone();
    synth.response_form = cfg.preset.into();
    let (ds, truth) = generate(&synth)?;
    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, cfg.threads, cfg.seed)?;
    let n = ds.len();
    let y = ds.response();
    let tv = &truth.values;
    let grid = cfg.grid(n);
    let linear = LearnerConfig::linear();

    let ols = global_ols(&ds)?;
    log::info!("ols r2 {:.4}", ols.in_sample_r2);

    let scan = engine.scan_bandwidth(cfg.gwr_kernel, BandwidthMode::Adaptive, 1.0, &linear, &grid, None)?;
    let gwr_kernel = KernelSpec::new(cfg.gwr_kernel, Bandwidth::from_value(BandwidthMode::Adaptive, scan.chosen)?);
    let surface = engine.gwr_coefficient_surface(&gwr_kernel)?;
    let gwr_fit: Vec<f64> = (0..n)
        .map(|i| {
            let c = surface.values.row(i);
            let x = ds.features().row(i);
            x.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() + c[c.len() - 1]
        })
        .collect();
    let gwr = ModelRow {
        model: "GWR".into(),
        kernel: gwr_kernel,
        in_sample_r2: Some(fitted_r2(y, &gwr_fit)),
        loo_r2: scan.chosen_r2().unwrap_or(f64::NAN),
        recovery: vec![("coefficients".into(), recovery_metrics(&surface.values, tv)?)],
    };
    log::info!("gwr k={} loo r2 {:.4}", scan.chosen, gwr.loo_r2);

    let scan = engine.scan_bandwidth(cfg.linear_kernel, BandwidthMode::Adaptive, 1.0, &linear, &grid, None)?;
    let lin_kernel = KernelSpec::new(cfg.linear_kernel, Bandwidth::from_value(BandwidthMode::Adaptive, scan.chosen)?);
    let lin_explain = ExplainConfig {
        shap: true,
        lime: Some(cfg.lime),
        importance: false,
        pd: PdConfig::default(),
    };
    let field = engine.explain_all(&lin_kernel, &linear, &lin_explain)?;
    let recovery = field_recovery(&field, tv)?;
    let linear_row = ModelRow {
        model: "XGeoML-linear".into(),
        kernel: lin_kernel,
        in_sample_r2: Some(fitted_r2(y, &field.fitted)),
        loo_r2: scan.chosen_r2().unwrap_or(f64::NAN),
        recovery,
    };
    log::info!("linear k={} loo r2 {:.4}", scan.chosen, linear_row.loo_r2);

    let gbt_explain = ExplainConfig {
        shap: true,
        lime: Some(cfg.lime),
        importance: true,
        pd: PdConfig {
            bins: cfg.pd_bins,
            features: (0..ds.n_features()).collect(),
            ..PdConfig::default()
        },
    };
    let loo = engine.loo_evaluate(&cfg.gbt_kernel, &cfg.gbt)?;
    let field = engine.explain_all(&cfg.gbt_kernel, &cfg.gbt, &gbt_explain)?;
    let mut recovery = field_recovery(&field, tv)?;
    if let Some(shap) = &field.shap {
        let smooth = engine.gwr_smooth_attributions(&cfg.gbt_kernel, shap)?;
        recovery.push(("smoothed_shap".into(), recovery_metrics(&smooth.values, tv)?));
    }
    let gbt = ModelRow {
        model: format!("XGeoML-{}", cfg.gbt.kind.name()),
        kernel: cfg.gbt_kernel,
        in_sample_r2: Some(fitted_r2(y, &field.fitted)),
        loo_r2: loo.r2,
        recovery,
    };
    log::info!("{} loo r2 {:.4}", gbt.model, gbt.loo_r2);

    let fixed_explain = ExplainConfig {
        shap: true,
        lime: None,
        importance: true,
        pd: PdConfig::default(),
    };
    let mut fixed = Vec::with_capacity(cfg.fixed_kinds.len());
    let mut fixed_scans = Vec::with_capacity(cfg.fixed_kinds.len());
    for &kind in &cfg.fixed_kinds {
        let scan = engine.scan_bandwidth(kind, BandwidthMode::Fixed, 1.0, &cfg.gbt, &cfg.fixed_grid, None)?;
        let kernel = KernelSpec::new(kind, Bandwidth::Fixed(scan.chosen));
        let f = engine.explain_all(&kernel, &cfg.gbt, &fixed_explain)?;
        log::info!("fixed {kind} b={} loo r2 {:.4}", scan.chosen, scan.chosen_r2().unwrap_or(f64::NAN));
        fixed.push(ModelRow {
            model: format!("XGeoML-{}", cfg.gbt.kind.name()),
            kernel,
            in_sample_r2: Some(fitted_r2(y, &f.fitted)),
            loo_r2: scan.chosen_r2().unwrap_or(f64::NAN),
            recovery: field_recovery(&f, tv)?,
        });
        fixed_scans.push(scan);
    }

    Ok(BenchReport {
        preset: cfg.preset,
        ols,
        gwr,
        linear: linear_row,
        gbt,
        fixed,
        fixed_scans,
        pd: field.pd,
        truth,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.4}"))
}

impl BenchReport {
    /// Fixed-bandwidth row with the highest LOO R².
    pub fn best_fixed(&self) -> Option<&ModelRow> {
        self.fixed.iter().fold(None, |best: Option<&ModelRow>, r| match best {
            Some(b) if b.loo_r2 >= r.loo_r2 => Some(b),
            _ => Some(r),
        })
    }

    pub fn fixed_row(&self, kind: KernelKind) -> Option<&ModelRow> {
        self.fixed.iter().find(|r| r.kernel.kind == kind)
    }

    pub fn rows(&self) -> Vec<&ModelRow> {
        let mut rows = vec![&self.gwr, &self.linear, &self.gbt];
        rows.extend(&self.fixed);
        rows
    }

    /// Accuracy table followed by per-field recovery correlations.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "preset: {}", self.preset);
        let _ = writeln!(s, "{:<16} {:<32} {:>10} {:>10}", "model", "kernel", "r2_fit", "r2_loo");
        let _ = writeln!(
            s,
            "{:<16} {:<32} {:>10} {:>10}",
            "OLS",
            "global",
            format!("{:.4}", self.ols.in_sample_r2),
            format!("{:.4}", self.ols.loo_r2)
        );
        for r in self.rows() {
            let _ = writeln!(
                s,
                "{:<16} {:<32} {:>10} {:>10}",
                r.model,
                r.kernel.to_string(),
                fmt_opt(r.in_sample_r2),
                format!("{:.4}", r.loo_r2)
            );
        }
        let _ = writeln!(s);
        let names = &self.truth.names;
        let _ = writeln!(
            s,
            "{:<16} {:<32} {:<14} {} mean",
            "model",
            "kernel",
            "field",
            names.join(" ")
        );
        for r in self.rows() {
            for (field, m) in &r.recovery {
                let cols: Vec<String> = m.per_feature.iter().map(|c| format!("{c:.4}")).collect();
                let _ = writeln!(
                    s,
                    "{:<16} {:<32} {:<14} {} {:.4}",
                    r.model,
                    r.kernel.to_string(),
                    field,
                    cols.join(" "),
                    m.mean
                );
            }
        }
        s
    }
}
