//! Weighted learners: linear/ridge least squares, regression tree,
//! gradient-boosted trees and k-nearest neighbors.

mod gbt;
mod knn;
mod linear;
mod tree;
mod weighting;

use std::fmt;
use std::str::FromStr;

pub use gbt::{fit_gbt, GbtModel, GbtParams};
pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_least_squares_qr, fit_linear_wls, LinearModel};
pub use tree::{fit_tree, RegressionTree, Split};
pub use weighting::{apply_weighting, WeightedRows};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;
pub const DEFAULT_TREE_DEPTH: usize = 6;
pub const DEFAULT_KNN_K: usize = 5;

/// Anything that maps a feature row to a real prediction.
pub trait Predictor {
    fn predict_one(&self, x: &[f64]) -> f64;

    fn predict(&self, x: &Matrix) -> Vec<f64> {
        x.rows_iter().map(|r| self.predict_one(r)).collect()
    }
}

impl<F: Fn(&[f64]) -> f64> Predictor for F {
    fn predict_one(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// How spatial weights enter a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightingMode {
    /// Scale rows of `[X | 1]` and `y` by `sqrt(w)`, then fit unweighted.
    SqrtTransform,
    /// Pass `w` to the learner's weighted loss.
    SampleWeight,
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingMode::SqrtTransform => "sqrt_transform",
            WeightingMode::SampleWeight => "sample_weight",
        })
    }
}

impl FromStr for WeightingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sqrt_transform" => Ok(WeightingMode::SqrtTransform),
            "sample_weight" => Ok(WeightingMode::SampleWeight),
            _ => Err(Error::InvalidArgument(format!("unknown weighting mode '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearnerKind {
    Linear,
    Ridge { lambda: f64 },
    Tree { max_depth: usize },
    Gbt(GbtParams),
    Knn { k_model: usize },
}

impl LearnerKind {
    pub fn name(&self) -> &'static str {
        match self {
            LearnerKind::Linear => "linear",
            LearnerKind::Ridge { .. } => "ridge",
            LearnerKind::Tree { .. } => "tree",
            LearnerKind::Gbt(_) => "gbt",
            LearnerKind::Knn { .. } => "knn",
        }
    }

    pub fn is_tree_based(&self) -> bool {
        matches!(self, LearnerKind::Tree { .. } | LearnerKind::Gbt(_))
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, LearnerKind::Linear | LearnerKind::Ridge { .. })
    }

    /// Default kind for a learner name.
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(LearnerKind::Linear),
            "ridge" => Ok(LearnerKind::Ridge {
                lambda: DEFAULT_RIDGE_LAMBDA,
            }),
            "tree" => Ok(LearnerKind::Tree {
                max_depth: DEFAULT_TREE_DEPTH,
            }),
            "gbt" => Ok(LearnerKind::Gbt(GbtParams::default())),
            "knn" => Ok(LearnerKind::Knn {
                k_model: DEFAULT_KNN_K,
            }),
            _ => Err(Error::InvalidArgument(format!("unknown learner '{name}'"))),
        }
    }
}

/// Learner kind plus weighting mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    pub kind: LearnerKind,
    /// `None` selects sqrt_transform for linear kinds and sample_weight otherwise.
    pub weighting: Option<WeightingMode>,
}

impl LearnerConfig {
    pub fn new(kind: LearnerKind) -> Self {
        LearnerConfig {
            kind,
            weighting: None,
        }
    }

    pub fn linear() -> Self {
        Self::new(LearnerKind::Linear)
    }

    pub fn gbt() -> Self {
        Self::new(LearnerKind::Gbt(GbtParams::default()))
    }

    pub fn with_weighting(mut self, mode: WeightingMode) -> Self {
        self.weighting = Some(mode);
        self
    }

    pub fn weighting_mode(&self) -> WeightingMode {
        self.weighting.unwrap_or(if self.kind.is_linear() {
            WeightingMode::SqrtTransform
        } else {
            WeightingMode::SampleWeight
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("{what} must be positive")));
        match self.kind {
            LearnerKind::Linear => Ok(()),
            LearnerKind::Ridge { lambda } if !(lambda > 0.0) => bad("ridge lambda"),
            LearnerKind::Tree { max_depth } if max_depth == 0 => bad("tree max_depth"),
            LearnerKind::Gbt(p) => p.validate(),
            LearnerKind::Knn { k_model } if k_model == 0 => bad("knn k_model"),
            _ => Ok(()),
        }
    }
}

/// Fits a model on weighted rows. Deterministic given the inputs and seed.
pub trait WeightedLearner {
    fn fit(&self, x: &Matrix, y: &[f64], w: &[f64], seed: u64) -> Result<FittedModel>;
}

impl WeightedLearner for LearnerConfig {
    fn fit(&self, x: &Matrix, y: &[f64], w: &[f64], seed: u64) -> Result<FittedModel> {
        self.validate()?;
        let mode = self.weighting_mode();
        let rows = apply_weighting(x, y, w, mode)?;
        let d = x.ncols();
        match (self.kind, mode) {
            (LearnerKind::Linear | LearnerKind::Ridge { .. }, WeightingMode::SqrtTransform) => {
                let lambda = match self.kind {
                    LearnerKind::Ridge { lambda } => lambda,
                    _ => 0.0,
                };
                // the intercept column (last) is left unpenalized
                let penalized: Vec<bool> = (0..=d).map(|j| j < d).collect();
                let coef = fit_least_squares_qr(&rows.x, &rows.y, lambda, &penalized)?;
                Ok(FittedModel::Linear(LinearModel::new(coef, true)))
            }
            (LearnerKind::Linear, WeightingMode::SampleWeight) => Ok(FittedModel::Linear(
                fit_linear_wls(&rows.x, &rows.y, &rows.w, 0.0, true)?,
            )),
            (LearnerKind::Ridge { lambda }, WeightingMode::SampleWeight) => Ok(
                FittedModel::Linear(fit_linear_wls(&rows.x, &rows.y, &rows.w, lambda, true)?),
            ),
            (kind, mode) => {
                let inner = match kind {
                    LearnerKind::Tree { max_depth } => {
                        FittedModel::Tree(fit_tree(&rows.x, &rows.y, &rows.w, max_depth))
                    }
                    LearnerKind::Gbt(params) => {
                        FittedModel::Gbt(fit_gbt(&rows.x, &rows.y, &rows.w, &params, seed)?)
                    }
                    LearnerKind::Knn { k_model } => {
                        FittedModel::Knn(fit_knn(&rows.x, &rows.y, &rows.w, k_model)?)
                    }
                    LearnerKind::Linear | LearnerKind::Ridge { .. } => unreachable!(),
                };
                Ok(match mode {
                    WeightingMode::SqrtTransform => FittedModel::SqrtWeighted(Box::new(inner)),
                    WeightingMode::SampleWeight => inner,
                })
            }
        }
    }
}

/// A trained model.
#[derive(Debug, Clone)]
pub enum FittedModel {
    Linear(LinearModel),
    Tree(RegressionTree),
    Gbt(GbtModel),
    Knn(KnnModel),
    /// A model trained on sqrt-weight transformed rows; queries get the
    /// intercept column 1 appended (a target point has weight 1).
    SqrtWeighted(Box<FittedModel>),
}

impl FittedModel {
    /// Linear coefficients, intercept last.
    pub fn coefficients(&self) -> Option<&[f64]> {
        match self {
            FittedModel::Linear(m) => Some(m.coefficients()),
            _ => None,
        }
    }

    /// Normalized impurity-reduction importance; `None` for non-tree models.
    pub fn importance(&self) -> Option<Vec<f64>> {
        self.raw_importance().map(|raw| normalize(&raw))
    }

    /// Per-feature summed impurity reduction before normalization.
    pub fn raw_importance(&self) -> Option<Vec<f64>> {
        match self {
            FittedModel::Tree(t) => Some(t.raw_importance()),
            FittedModel::Gbt(g) => Some(g.raw_importance()),
            FittedModel::SqrtWeighted(inner) => inner.raw_importance().map(|mut v| {
                // drop the sqrt-weight intercept column
                v.pop();
                v
            }),
            _ => None,
        }
    }

    /// Every split node as (feature, impurity reduction).
    pub fn splits(&self) -> Option<Vec<Split>> {
        match self {
            FittedModel::Tree(t) => Some(t.splits()),
            FittedModel::Gbt(g) => Some(g.trees().iter().flat_map(|t| t.splits()).collect()),
            FittedModel::SqrtWeighted(inner) => inner.splits(),
            _ => None,
        }
    }

    pub fn is_tree_based(&self) -> bool {
        match self {
            FittedModel::Tree(_) | FittedModel::Gbt(_) => true,
            FittedModel::SqrtWeighted(inner) => inner.is_tree_based(),
            _ => false,
        }
    }
}

impl Predictor for FittedModel {
    fn predict_one(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Linear(m) => m.predict_one(x),
            FittedModel::Tree(m) => m.predict_one(x),
            FittedModel::Gbt(m) => m.predict_one(x),
            FittedModel::Knn(m) => m.predict_one(x),
            FittedModel::SqrtWeighted(inner) => {
                let mut q = Vec::with_capacity(x.len() + 1);
                q.extend_from_slice(x);
                q.push(1.0);
                inner.predict_one(&q)
            }
        }
    }
}

pub(crate) fn normalize(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; raw.len()]
    }
}
