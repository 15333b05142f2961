use crate::error::{Error, Result};
use crate::learners::Predictor;
use crate::matrix::Matrix;

/// Largest feature count accepted by full subset enumeration.
pub const MAX_EXACT_FEATURES: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ShapAttribution {
    pub values: Vec<f64>,
    /// Value of the empty coalition (every feature at its background mean).
    pub base_value: f64,
    /// Model output at the explained point.
    pub prediction: f64,
}

pub fn weighted_column_means(background: &Matrix, weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    (0..background.ncols())
        .map(|j| {
            background
                .rows_iter()
                .zip(weights)
                .map(|(r, w)| w * r[j])
                .sum::<f64>()
                / total
        })
        .collect()
}

/// Exact Shapley values by enumerating all 2^d coalitions.
///
/// Features outside a coalition are replaced by the weighted background mean
/// of their column; each coalition value is a single model evaluation.
pub fn shapley_exact<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    background: &Matrix,
    background_weights: &[f64],
) -> Result<ShapAttribution> {
    let d = x.len();
    if d > MAX_EXACT_FEATURES {
        return Err(Error::EnumerationLimit {
            features: d,
            limit: MAX_EXACT_FEATURES,
        });
    }
    if background.nrows() == 0 || background.ncols() != d {
        return Err(Error::InvalidArgument(format!(
            "background must be nonempty with {d} columns"
        )));
    }
    if background_weights.len() != background.nrows()
        || !(background_weights.iter().sum::<f64>() > 0.0)
    {
        return Err(Error::InvalidArgument("background weights must have positive sum".into()));
    }
    let means = weighted_column_means(background, background_weights);

    let n_masks = 1usize << d;
    let mut query = vec![0.0; d];
    let value: Vec<f64> = (0..n_masks)
        .map(|mask| {
            for j in 0..d {
                query[j] = if mask >> j & 1 == 1 { x[j] } else { means[j] };
            }
            model.predict_one(&query)
        })
        .collect();

    // |S|! (d - |S| - 1)! / d!
    let fact: Vec<f64> = (0..=d)
        .scan(1.0, |acc, k| {
            if k > 0 {
                *acc *= k as f64;
            }
            Some(*acc)
        })
        .collect();
    let kernel: Vec<f64> = (0..d)
        .map(|s| fact[s] * fact[d - s - 1] / fact[d])
        .collect();

    let values = (0..d)
        .map(|j| {
            let bit = 1usize << j;
            (0..n_masks)
                .filter(|m| m & bit == 0)
                .map(|m| kernel[m.count_ones() as usize] * (value[m | bit] - value[m]))
                .sum()
        })
        .collect();
    Ok(ShapAttribution {
        values,
        base_value: value[0],
        prediction: value[n_masks - 1],
    })
}
