use super::WeightingMode;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Training rows after dropping zero weights and applying a weighting mode.
#[derive(Debug, Clone)]
pub struct WeightedRows {
    pub x: Matrix,
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    /// Source row index of each kept row.
    pub kept: Vec<usize>,
}

/// Drops rows with zero weight, then either scales `[X | 1]` and `y` by
/// `sqrt(w)` (leaving unit weights) or passes the weights through.
pub fn apply_weighting(x: &Matrix, y: &[f64], w: &[f64], mode: WeightingMode) -> Result<WeightedRows> {
    if x.nrows() != y.len() || y.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "row mismatch: X {}, y {}, w {}",
            x.nrows(),
            y.len(),
            w.len()
        )));
    }
    if let Some(bad) = w.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid weight {bad}")));
    }
    let kept: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0).collect();
    if kept.is_empty() {
        return Err(Error::EmptyNeighborhood);
    }
    let d = x.ncols();
    match mode {
        WeightingMode::SqrtTransform => {
            let mut out = Matrix::zeros(kept.len(), d + 1);
            let mut yt = Vec::with_capacity(kept.len());
            for (r, &i) in kept.iter().enumerate() {
                let s = w[i].sqrt();
                let row = out.row_mut(r);
                for (dst, src) in row.iter_mut().zip(x.row(i)) {
                    *dst = s * src;
                }
                row[d] = s;
                yt.push(s * y[i]);
            }
            Ok(WeightedRows {
                x: out,
                y: yt,
                w: vec![1.0; kept.len()],
                kept,
            })
        }
        WeightingMode::SampleWeight => Ok(WeightedRows {
            x: x.select_rows(&kept),
            y: kept.iter().map(|&i| y[i]).collect(),
            w: kept.iter().map(|&i| w[i]).collect(),
            kept,
        }),
    }
}
