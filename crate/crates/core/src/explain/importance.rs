use crate::error::{Error, Result};
use crate::learners::FittedModel;

/// Summed impurity reduction per feature over every split node, normalized
/// to sum to 1. A model with no splits yields all zeros.
pub fn tree_importance(model: &FittedModel) -> Result<Vec<f64>> {
    model
        .importance()
        .ok_or_else(|| Error::InvalidArgument("importance requires a tree-based model".into()))
}
