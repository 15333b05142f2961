use super::Predictor;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Weighted k-nearest-neighbor regressor in feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    x: Matrix,
    y: Vec<f64>,
    w: Vec<f64>,
    k: usize,
}

pub fn fit_knn(x: &Matrix, y: &[f64], w: &[f64], k_model: usize) -> Result<KnnModel> {
    if k_model == 0 || k_model > x.nrows() {
        return Err(Error::InvalidArgument(format!(
            "k_model must be in 1..={}, got {k_model}",
            x.nrows()
        )));
    }
    Ok(KnnModel {
        x: x.clone(),
        y: y.to_vec(),
        w: w.to_vec(),
        k: k_model,
    })
}

impl Predictor for KnnModel {
    /// Training-weight-weighted mean response of the k nearest rows
    /// (Euclidean, ties by row index).
    fn predict_one(&self, q: &[f64]) -> f64 {
        let mut d: Vec<(f64, usize)> = self
            .x
            .rows_iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum(), i))
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, cmp);
            d.truncate(self.k);
        }
        d.sort_by(cmp);
        let (mut sw, mut swy) = (0.0, 0.0);
        for &(_, i) in &d {
            sw += self.w[i];
            swy += self.w[i] * self.y[i];
        }
        swy / sw
    }
}
