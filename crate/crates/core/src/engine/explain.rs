use super::{check_failures, point_seed, Engine, LooResult, LEARNER_STREAM, LIME_STREAM};
use crate::error::{Error, Result};
use crate::explain::{
    lime_explain, partial_dependence_on_grid, pd_grid, shapley_exact, tree_importance, Binning,
    LimeConfig, DEFAULT_PD_BINS,
};
use crate::kernels::KernelSpec;
use crate::learners::{LearnerConfig, Predictor, WeightedLearner};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PdConfig {
    pub bins: usize,
    /// Feature indices to compute curves for.
    pub features: Vec<usize>,
    pub binning: Binning,
}

impl Default for PdConfig {
    fn default() -> Self {
        PdConfig {
            bins: DEFAULT_PD_BINS,
            features: Vec::new(),
            binning: Binning::Percentile,
        }
    }
}

/// Which explainers run in the explanation pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainConfig {
    pub shap: bool,
    pub lime: Option<LimeConfig>,
    /// Ignored for learners without split nodes.
    pub importance: bool,
    pub pd: PdConfig,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            shap: true,
            lime: Some(LimeConfig::default()),
            importance: true,
            pd: PdConfig::default(),
        }
    }
}

impl ExplainConfig {
    pub fn none() -> Self {
        ExplainConfig {
            shap: false,
            lime: None,
            importance: false,
            pd: PdConfig::default(),
        }
    }
}

/// Partial dependence on a dataset-wide grid, averaged over every local model.
#[derive(Debug, Clone, PartialEq)]
pub struct PdSummary {
    pub feature: usize,
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
}

/// Per-point explanation fields. Rows of failed points are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionField {
    pub feature_names: Vec<String>,
    pub shap: Option<Matrix>,
    pub shap_base: Option<Vec<f64>>,
    pub lime: Option<Matrix>,
    pub lime_intercept: Option<Vec<f64>>,
    pub importance: Option<Matrix>,
    /// Linear learners only: slopes then intercept, n x (d + 1).
    pub coefficients: Option<Matrix>,
    /// Explanation-pass prediction at each target.
    pub fitted: Vec<f64>,
    pub loo: Option<LooResult>,
    pub pd: Vec<PdSummary>,
    pub failed: Vec<usize>,
}

impl AttributionField {
    /// Explainer fields present, by name.
    pub fn explainer_fields(&self) -> Vec<(&'static str, &Matrix)> {
        let mut out = Vec::new();
        if let Some(m) = &self.shap {
            out.push(("shap", m));
        }
        if let Some(m) = &self.lime {
            out.push(("lime", m));
        }
        if let Some(m) = &self.importance {
            out.push(("importance", m));
        }
        out
    }
}

struct PointOutput {
    fitted: f64,
    shap: Option<(Vec<f64>, f64)>,
    lime: Option<(Vec<f64>, f64)>,
    importance: Option<Vec<f64>>,
    coefficients: Option<Vec<f64>>,
    pd: Vec<Vec<f64>>,
}

impl Engine<'_> {
    fn explain_point(
        &self,
        kernel: &KernelSpec,
        learner: &LearnerConfig,
        cfg: &ExplainConfig,
        grids: &[Vec<f64>],
        i: usize,
    ) -> Result<PointOutput> {
        let ds = self.ds;
        let w = self.weights(kernel, i)?;
        let rows = w.nonzero_indices();
        let d = ds.n_features();
        if rows.len() < d + 2 {
            return Err(Error::DegenerateNeighborhood {
                point: i,
                nonzero: rows.len(),
            });
        }
        let local_x = ds.features().select_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|&j| ds.response()[j]).collect();
        let wt: Vec<f64> = rows.iter().map(|&j| w.weights[j]).collect();
        let model = learner.fit(&local_x, &y, &wt, point_seed(self.seed, i, LEARNER_STREAM))?;
        let xi = ds.features().row(i);
        let fitted = model.predict_one(xi);

        let shap = if cfg.shap {
            let a = shapley_exact(&model, xi, &local_x, &wt)?;
            Some((a.values, a.base_value))
        } else {
            None
        };
        let lime = match &cfg.lime {
            Some(lc) => {
                let a = lime_explain(&model, xi, &local_x, point_seed(self.seed, i, LIME_STREAM), lc)?;
                Some((a.slopes, a.intercept))
            }
            None => None,
        };
        let importance = if cfg.importance && model.is_tree_based() {
            Some(tree_importance(&model)?)
        } else {
            None
        };
        let pd = cfg
            .pd
            .features
            .iter()
            .zip(grids)
            .map(|(&j, g)| partial_dependence_on_grid(&model, &local_x, j, g))
            .collect();
        Ok(PointOutput {
            fitted,
            shap,
            lime,
            importance,
            coefficients: model.coefficients().map(<[f64]>::to_vec),
            pd,
        })
    }

    /// Fits every local model on its full weighted neighborhood (target
    /// included) and runs the enabled explainers at the target point.
    pub fn explain_all(
        &self,
        kernel: &KernelSpec,
        learner: &LearnerConfig,
        cfg: &ExplainConfig,
    ) -> Result<AttributionField> {
        let ds = self.ds;
        let (n, d) = (ds.len(), ds.n_features());
        kernel.validate(n)?;
        learner.validate()?;
        let mut grids = Vec::with_capacity(cfg.pd.features.len());
        for &j in &cfg.pd.features {
            if j >= d {
                return Err(Error::InvalidArgument(format!("PD feature {j} out of range")));
            }
            let g = pd_grid(&ds.features().column(j), cfg.pd.bins, cfg.pd.binning)?;
            if g.len() < 2 {
                return Err(Error::SinglePointGrid(j));
            }
            grids.push(g);
        }

        let outputs = self.par_points(|i| self.explain_point(kernel, learner, cfg, &grids, i));

        let mut failed = Vec::new();
        let mut fitted = vec![f64::NAN; n];
        let mut shap = cfg.shap.then(|| Matrix::filled(n, d, f64::NAN));
        let mut shap_base = cfg.shap.then(|| vec![f64::NAN; n]);
        let mut lime = cfg.lime.map(|_| Matrix::filled(n, d, f64::NAN));
        let mut lime_icpt = cfg.lime.map(|_| vec![f64::NAN; n]);
        let has_imp = cfg.importance && learner.kind.is_tree_based();
        let mut importance = has_imp.then(|| Matrix::filled(n, d, f64::NAN));
        let mut coefficients = learner
            .kind
            .is_linear()
            .then(|| Matrix::filled(n, d + 1, f64::NAN));
        let mut pd_sums = vec![vec![0.0; 0]; grids.len()];
        for (k, g) in grids.iter().enumerate() {
            pd_sums[k] = vec![0.0; g.len()];
        }
        let mut pd_count = 0usize;

        for (i, out) in outputs.into_iter().enumerate() {
            let Ok(o) = out else {
                failed.push(i);
                continue;
            };
            fitted[i] = o.fitted;
            if let (Some(m), Some(b), Some((v, base))) = (&mut shap, &mut shap_base, o.shap) {
                m.row_mut(i).copy_from_slice(&v);
                b[i] = base;
            }
            if let (Some(m), Some(b), Some((v, icpt))) = (&mut lime, &mut lime_icpt, o.lime) {
                m.row_mut(i).copy_from_slice(&v);
                b[i] = icpt;
            }
            if let (Some(m), Some(v)) = (&mut importance, o.importance) {
                m.row_mut(i).copy_from_slice(&v);
            }
            if let (Some(m), Some(v)) = (&mut coefficients, o.coefficients) {
                m.row_mut(i).copy_from_slice(&v);
            }
            for (acc, curve) in pd_sums.iter_mut().zip(&o.pd) {
                for (a, v) in acc.iter_mut().zip(curve) {
                    *a += v;
                }
            }
            pd_count += 1;
        }
        check_failures(failed.len(), n)?;
        let pd = cfg
            .pd
            .features
            .iter()
            .zip(grids)
            .zip(pd_sums)
            .map(|((&feature, grid), sums)| PdSummary {
                feature,
                grid,
                means: sums.into_iter().map(|s| s / pd_count as f64).collect(),
            })
            .collect();
        Ok(AttributionField {
            feature_names: ds.feature_names().to_vec(),
            shap,
            shap_base,
            lime,
            lime_intercept: lime_icpt,
            importance,
            coefficients,
            fitted,
            loo: None,
            pd,
            failed,
        })
    }
}
