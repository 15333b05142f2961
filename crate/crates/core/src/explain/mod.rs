//! Explanations of a fitted local model at its target point.

mod importance;
mod lime;
mod pd;
mod shap;

pub use importance::tree_importance;
pub use lime::{lime_explain, LimeAttribution, LimeConfig, DEFAULT_LIME_SAMPLES};
pub use pd::{partial_dependence, partial_dependence_on_grid, pd_grid, Binning, PdCurve, DEFAULT_PD_BINS};
pub use shap::{shapley_exact, weighted_column_means, ShapAttribution, MAX_EXACT_FEATURES};
