//! CSV and report writers.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::path::Path;

use crate::engine::{AttributionField, PdSummary, ScanResult};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::SpatialDataset;
use crate::synth::GroundTruth;

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(f))
}

fn finish(mut w: csv::Writer<File>, path: &Path) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

fn num(v: f64) -> String {
    v.to_string()
}

/// `id,cx,cy,<features>,y`
pub fn write_dataset(path: &Path, ds: &SpatialDataset) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string(), "cx".into(), "cy".into()];
    header.extend(ds.feature_names().iter().cloned());
    header.push("y".into());
    w.write_record(&header)?;
    for i in 0..ds.len() {
        let c = ds.coords()[i];
        let mut rec = vec![ds.ids()[i].clone(), num(c[0]), num(c[1])];
        rec.extend(ds.features().row(i).iter().map(|&v| num(v)));
        rec.push(num(ds.response()[i]));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// `id,<surface names>`
pub fn write_truth(path: &Path, ids: &[String], truth: &GroundTruth) -> Result<()> {
    let mut w = writer(path)?;
    let mut header = vec!["id".to_string()];
    header.extend(truth.names.iter().cloned());
    w.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(truth.values.row(i).iter().map(|&v| num(v)));
        w.write_record(&rec)?;
    }
    finish(w, path)
}

/// Reads a truth table keyed by id and aligns it with the dataset's points.
pub fn read_truth(path: &Path, ds: &SpatialDataset) -> Result<Matrix> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(f);
    let header = r.headers()?.clone();
    if header.get(0) != Some("id") || header.len() < 2 {
        return Err(Error::InvalidDataset(format!(
            "{}: truth table needs an id column followed by surfaces",
            path.display()
        )));
    }
    let d = header.len() - 1;
    let mut rows: HashMap<String, Vec<f64>> = HashMap::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let vals = (1..=d)
            .map(|j| {
                rec[j].trim().parse::<f64>().map_err(|_| Error::Load {
                    row: n + 1,
                    column: header[j].to_string(),
                    message: format!("not a number: '{}'", &rec[j]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.insert(rec[0].to_string(), vals);
    }
    let mut data = Vec::with_capacity(ds.len() * d);
    for id in ds.ids() {
        let row = rows
            .get(id)
            .ok_or_else(|| Error::InvalidDataset(format!("truth table has no row for id '{id}'")))?;
        data.extend_from_slice(row);
    }
    Ok(Matrix::from_vec(ds.len(), d, data))
}

/// Long format `id,explainer,feature,value`; coefficient fields include an
/// `intercept` feature.
pub fn write_attributions(path: &Path, ds: &SpatialDataset, field: &AttributionField) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "explainer", "feature", "value"])?;
    let mut fields: Vec<(&str, &Matrix)> = field.explainer_fields();
    if let Some(c) = &field.coefficients {
        fields.push(("coefficients", c));
    }
    let mut names: Vec<String> = field.feature_names.clone();
    names.push("intercept".into());
    for (i, id) in ds.ids().iter().enumerate() {
        for (explainer, m) in &fields {
            for (j, v) in m.row(i).iter().enumerate() {
                w.write_record([id.as_str(), explainer, names[j].as_str(), &num(*v)])?;
            }
        }
    }
    finish(w, path)
}

/// `id,y,fitted,loo` (the LOO column is empty when LOO was not run).
pub fn write_predictions(path: &Path, ds: &SpatialDataset, field: &AttributionField) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["id", "y", "fitted", "loo"])?;
    for (i, id) in ds.ids().iter().enumerate() {
        let loo = field
            .loo
            .as_ref()
            .map_or(String::new(), |l| num(l.predictions[i]));
        w.write_record([id.clone(), num(ds.response()[i]), num(field.fitted[i]), loo])?;
    }
    finish(w, path)
}

/// `feature,grid,mean`
pub fn write_pd(path: &Path, names: &[String], pd: &[PdSummary]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["feature", "grid", "mean"])?;
    for c in pd {
        for (g, m) in c.grid.iter().zip(&c.means) {
            w.write_record([names[c.feature].clone(), num(*g), num(*m)])?;
        }
    }
    finish(w, path)
}

/// One row per scanned bandwidth. Recovery columns are named
/// `<field>.<surface index>` and left empty when truth was not supplied.
pub fn write_scan(path: &Path, scans: &[ScanResult]) -> Result<()> {
    let mut cols: Vec<(String, usize)> = Vec::new();
    for s in scans {
        for p in &s.points {
            for (name, m) in &p.correlations {
                for j in 0..m.per_feature.len() {
                    if !cols.iter().any(|(n, k)| n == name && *k == j) {
                        cols.push((name.clone(), j));
                    }
                }
            }
        }
    }
    let mut w = writer(path)?;
    let mut header = vec![
        "kind".to_string(),
        "mode".into(),
        "bandwidth".into(),
        "loo_r2".into(),
        "chosen".into(),
    ];
    header.extend(cols.iter().map(|(n, j)| format!("{n}.{}", j + 1)));
    w.write_record(&header)?;
    for s in scans {
        for p in &s.points {
            let mut rec = vec![
                s.kind.to_string(),
                s.mode.to_string(),
                num(p.bandwidth),
                p.loo_r2.map_or(String::new(), num),
                (p.bandwidth == s.chosen).to_string(),
            ];
            for (n, j) in &cols {
                let v = p
                    .correlations
                    .iter()
                    .find(|(name, _)| name == n)
                    .and_then(|(_, m)| m.per_feature.get(*j).copied());
                rec.push(v.map_or(String::new(), num));
            }
            w.write_record(&rec)?;
        }
    }
    finish(w, path)
}

/// Text report: a `[config]` section echoing the resolved configuration and
/// a `[results]` section of `key = value` lines.
#[derive(Debug, Clone, Default)]
pub struct Report {
    config: String,
    results: Vec<(String, String)>,
}

impl Report {
    pub fn new(config_echo: impl Into<String>) -> Self {
        Report {
            config: config_echo.into(),
            results: Vec::new(),
        }
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.results.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.results
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut s = String::from("[config]\n");
        s.push_str(&self.config);
        s.push_str("\n[results]\n");
        for (k, v) in &self.results {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}

/// Values of the `[results]` section of a rendered report.
pub fn parse_results(text: &str) -> Vec<(String, String)> {
    let mut inside = false;
    let mut out = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.starts_with('[') {
            inside = line == "[results]";
            continue;
        }
        if inside {
            if let Some((k, v)) = line.split_once('=') {
                out.push((k.trim().to_string(), v.trim().to_string()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::{load_dataset_path, Schema};
    use crate::synth::{generate, SynthSpec};

    #[test]
    fn dataset_and_truth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            grid_side: 5,
            ..SynthSpec::default()
        };
        let (ds, truth) = generate(&spec).unwrap();
        let dp = dir.path().join("d.csv");
        let tp = dir.path().join("t.csv");
        write_dataset(&dp, &ds).unwrap();
        write_truth(&tp, ds.ids(), &truth).unwrap();
        let back = load_dataset_path(&dp, &Schema::default()).unwrap();
        assert_eq!(back.features(), ds.features());
        assert_eq!(back.response(), ds.response());
        assert_eq!(back.coords(), ds.coords());
        assert_eq!(read_truth(&tp, &back).unwrap(), truth.values);
    }

    #[test]
    fn truth_missing_id_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let (ds, truth) = generate(&SynthSpec {
            grid_side: 3,
            ..SynthSpec::default()
        })
        .unwrap();
        let tp = dir.path().join("t.csv");
        write_truth(&tp, &ds.ids()[..8], &truth).unwrap();
        assert!(read_truth(&tp, &ds).is_err());
    }

    #[test]
    fn report_sections() {
        let mut r = Report::new("run.seed = 1\n");
        r.push("loo_r2", 0.5);
        let text = r.render();
        assert!(text.starts_with("[config]\nrun.seed = 1\n"));
        assert_eq!(parse_results(&text), vec![("loo_r2".to_string(), "0.5".to_string())]);
        assert_eq!(r.get("loo_r2"), Some("0.5"));
    }
}
