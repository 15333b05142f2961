//! Subcommand bodies shared by the binary and the tests. Each writes its
//! outputs under the configured directory and returns the run report.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::bench::{run_bench, BenchReport};
use crate::config::RunConfig;
use crate::engine::{recovery_metrics, Engine};
use crate::error::{Error, Result};
use crate::io::{self, Report};
use crate::spatial::{load_dataset_path, r_squared, DistanceIndex};
use crate::svg::{render_heatmap, render_scan_curves, HeatmapSpec};
use crate::synth::{generate, SynthSpec};

pub const ATTRIBUTIONS_FILE: &str = "attributions.csv";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const PD_FILE: &str = "pd.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const TIMING_FILE: &str = "timing.txt";
pub const SCAN_FILE: &str = "scan.csv";
pub const SCAN_SVG_FILE: &str = "scan.svg";
pub const SUMMARY_FILE: &str = "summary.txt";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Wall-clock time and thread count live apart from the report so that the
/// report is identical across runs.
fn write_timing(dir: &Path, started: Instant, threads: usize) -> Result<()> {
    let path = dir.join(TIMING_FILE);
    let text = format!(
        "runtime_seconds = {:.3}\nthreads = {threads}\n",
        started.elapsed().as_secs_f64()
    );
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn finite_r2(y: &[f64], pred: &[f64]) -> f64 {
    let (a, b): (Vec<f64>, Vec<f64>) = y
        .iter()
        .zip(pred)
        .filter(|(_, p)| p.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    r_squared(&a, &b)
}

/// Writes the dataset and truth tables; returns their paths.
pub fn synth(spec: &SynthSpec, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let (ds, truth) = generate(spec)?;
    ensure_dir(out_dir)?;
    let data = out_dir.join("dataset.csv");
    let truth_path = out_dir.join("truth.csv");
    io::write_dataset(&data, &ds)?;
    io::write_truth(&truth_path, ds.ids(), &truth)?;
    Ok((data, truth_path))
}

/// Explanation pass plus LOO evaluation with the configured kernel and learner.
pub fn fit(cfg: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("io.input is required".into()))?;
    let kernel = cfg.kernel_spec()?;
    let learner = cfg.learner_config()?;
    let ds = load_dataset_path(input, &cfg.schema)?;
    kernel.validate(ds.len())?;
    let explain = cfg.explain_config(&ds)?;
    let truth = cfg.truth.as_ref().map(|p| io::read_truth(p, &ds)).transpose()?;
    ensure_dir(&cfg.output_dir)?;

    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, cfg.threads, cfg.seed)?;
    let loo = engine.loo_evaluate(&kernel, &learner)?;
    let mut field = engine.explain_all(&kernel, &learner, &explain)?;

    let mut report = Report::new(cfg.echo());
    report.push("n", ds.len());
    report.push("d", ds.n_features());
    report.push("kernel", kernel);
    report.push("learner", learner.kind.name());
    report.push("weighting_mode", learner.weighting_mode());
    report.push("shap_baseline", "weighted_mean");
    report.push("loo_r2", loo.r2);
    report.push("fitted_r2", finite_r2(ds.response(), &field.fitted));
    report.push("loo_failed", loo.failed.len());
    report.push("explain_failed", field.failed.len());
    if let Some(t) = &truth {
        let mut fields: Vec<(&str, _)> = field.explainer_fields();
        if let Some(c) = &field.coefficients {
            fields.push(("coefficients", c));
        }
        let mut headline = None;
        for (name, m) in fields {
            let r = recovery_metrics(m, t)?;
            for (j, c) in r.per_feature.iter().enumerate() {
                report.push(format!("recovery.{name}.{}", ds.feature_names()[j]), c);
            }
            report.push(format!("recovery.{name}.mean"), r.mean);
            let preferred = if learner.kind.is_tree_based() { "importance" } else { "lime" };
            if name == preferred {
                headline = Some(r.mean);
            }
        }
        if let Some(h) = headline {
            report.push("average_correlation", h);
        }
    }
    field.loo = Some(loo);

    let out = &cfg.output_dir;
    io::write_attributions(&out.join(ATTRIBUTIONS_FILE), &ds, &field)?;
    io::write_predictions(&out.join(PREDICTIONS_FILE), &ds, &field)?;
    if !field.pd.is_empty() {
        io::write_pd(&out.join(PD_FILE), ds.feature_names(), &field.pd)?;
    }
    report.write(&out.join(REPORT_FILE))?;
    write_timing(out, started, cfg.threads)?;
    Ok(report)
}

/// Bandwidth scans over every configured kernel kind × bandwidth mode.
pub fn scan(cfg: &RunConfig) -> Result<Report> {
    let started = Instant::now();
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Error::Config("io.input is required".into()))?;
    let learner = cfg.learner_config()?;
    let ds = load_dataset_path(input, &cfg.schema)?;
    let explain = cfg.explain_config(&ds)?;
    let truth = cfg.truth.as_ref().map(|p| io::read_truth(p, &ds)).transpose()?;
    ensure_dir(&cfg.output_dir)?;

    let index = DistanceIndex::build(&ds);
    let engine = Engine::new(&ds, &index, cfg.threads, cfg.seed)?;
    let mut report = Report::new(cfg.echo());
    let mut scans = Vec::new();
    for &kind in &cfg.scan_kinds {
        for &mode in &cfg.scan_modes {
            let grid = cfg.scan_grid(mode, ds.len());
            let s = engine.scan_bandwidth(
                kind,
                mode,
                cfg.sigma_multiplier,
                &learner,
                &grid,
                truth.as_ref().map(|t| (t, &explain)),
            )?;
            report.push(format!("chosen.{kind}.{mode}"), s.chosen);
            report.push(format!("loo_r2.{kind}.{mode}"), s.chosen_r2().unwrap_or(f64::NAN));
            scans.push(s);
        }
    }
    let out = &cfg.output_dir;
    io::write_scan(&out.join(SCAN_FILE), &scans)?;
    let svg = render_scan_curves(&scans)?;
    let p = out.join(SCAN_SVG_FILE);
    fs::write(&p, svg).map_err(|e| Error::io(&p, e))?;
    report.write(&out.join(REPORT_FILE))?;
    write_timing(out, started, cfg.threads)?;
    Ok(report)
}

/// Runs the synthetic benchmark and writes its summary, report, PD curves
/// and fixed-bandwidth scan curves.
pub fn bench(cfg: &RunConfig) -> Result<(BenchReport, Report)> {
    let started = Instant::now();
    let b = run_bench(&cfg.bench_config()?)?;
    ensure_dir(&cfg.output_dir)?;
    let mut report = Report::new(cfg.echo());
    report.push("ols.in_sample_r2", b.ols.in_sample_r2);
    report.push("ols.loo_r2", b.ols.loo_r2);
    for r in b.rows() {
        let key = format!("{}.{}.{}", r.model, r.kernel.kind, r.kernel.bandwidth.mode());
        report.push(format!("{key}.bandwidth"), r.kernel.bandwidth.value());
        if let Some(v) = r.in_sample_r2 {
            report.push(format!("{key}.in_sample_r2"), v);
        }
        report.push(format!("{key}.loo_r2"), r.loo_r2);
        for (field, m) in &r.recovery {
            for (j, c) in m.per_feature.iter().enumerate() {
                report.push(format!("{key}.recovery.{field}.{}", b.truth.names[j]), c);
            }
            report.push(format!("{key}.recovery.{field}.mean"), m.mean);
        }
    }
    let out = &cfg.output_dir;
    let names: Vec<String> = (1..=b.truth.names.len()).map(|j| format!("x{j}")).collect();
    io::write_pd(&out.join(PD_FILE), &names, &b.pd)?;
    if !b.fixed_scans.is_empty() {
        io::write_scan(&out.join(SCAN_FILE), &b.fixed_scans)?;
    }
    let p = out.join(SUMMARY_FILE);
    fs::write(&p, b.summary()).map_err(|e| Error::io(&p, e))?;
    report.write(&out.join(REPORT_FILE))?;
    write_timing(out, started, cfg.threads)?;
    Ok((b, report))
}

/// Values of one column keyed by id. With `explainer`, the table is read as
/// the long attribution format and `column` names the feature.
pub fn read_values(path: &Path, column: &str, explainer: Option<&str>) -> Result<HashMap<String, f64>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(f);
    let header = r.headers()?.clone();
    let pos = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let id = pos("id")?;
    let mut out = HashMap::new();
    match explainer {
        None => {
            let c = pos(column)?;
            for rec in r.records() {
                let rec = rec?;
                out.insert(rec[id].to_string(), rec[c].trim().parse().unwrap_or(f64::NAN));
            }
        }
        Some(e) => {
            let (ec, fc, vc) = (pos("explainer")?, pos("feature")?, pos("value")?);
            for rec in r.records() {
                let rec = rec?;
                if &rec[ec] == e && &rec[fc] == column {
                    out.insert(rec[id].to_string(), rec[vc].trim().parse().unwrap_or(f64::NAN));
                }
            }
        }
    }
    Ok(out)
}

/// Heatmap of one value column over the coordinates of `data`.
pub fn render(
    data: &Path,
    values: &Path,
    column: &str,
    explainer: Option<&str>,
    out: &Path,
) -> Result<()> {
    let f = fs::File::open(data).map_err(|e| Error::io(data, e))?;
    let mut r = csv::Reader::from_reader(f);
    let header = r.headers()?.clone();
    let pos = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (ic, xc, yc) = (pos("id")?, pos("cx")?, pos("cy")?);
    let vals = read_values(values, column, explainer)?;
    let mut ids = Vec::new();
    let mut coords = Vec::new();
    let mut v = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let coord = |c: usize| {
            rec[c].trim().parse::<f64>().map_err(|_| Error::Load {
                row: n + 1,
                column: header[c].to_string(),
                message: format!("not a number: '{}'", &rec[c]),
            })
        };
        coords.push([coord(xc)?, coord(yc)?]);
        ids.push(rec[ic].to_string());
        v.push(vals.get(&rec[ic]).copied().unwrap_or(f64::NAN));
    }
    let title = match explainer {
        Some(e) => format!("{e} {column}"),
        None => column.to_string(),
    };
    let svg = render_heatmap(&HeatmapSpec::new(ids, coords, v).with_title(title))?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    fs::write(out, svg).map_err(|e| Error::io(out, e))
}
