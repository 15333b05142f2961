use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learners::Predictor;
use crate::matrix::Matrix;

pub const DEFAULT_PD_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binning {
    /// Percentiles `(i + 0.5) / B`, linearly interpolated.
    Percentile,
    /// Centers of `B` equal-width bins between min and max.
    EqualWidth,
}

impl FromStr for Binning {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "percentile" => Ok(Binning::Percentile),
            "equal_width" => Ok(Binning::EqualWidth),
            _ => Err(Error::InvalidArgument(format!("unknown binning '{s}'"))),
        }
    }
}

impl std::fmt::Display for Binning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Binning::Percentile => "percentile",
            Binning::EqualWidth => "equal_width",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdCurve {
    pub feature: usize,
    pub grid: Vec<f64>,
    pub means: Vec<f64>,
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let t = pos - lo as f64;
    sorted[lo] + t * (sorted[hi] - sorted[lo])
}

/// Strictly increasing grid of bin representatives for one feature column.
pub fn pd_grid(values: &[f64], bins: usize, binning: Binning) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bins, got {bins}")));
    }
    if values.is_empty() {
        return Err(Error::InvalidArgument("empty column".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut grid: Vec<f64> = match binning {
        Binning::Percentile => (0..bins)
            .map(|i| quantile_sorted(&sorted, (i as f64 + 0.5) / bins as f64))
            .collect(),
        Binning::EqualWidth => {
            let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
            let step = (hi - lo) / bins as f64;
            (0..bins).map(|i| lo + (i as f64 + 0.5) * step).collect()
        }
    };
    grid.dedup_by(|a, b| a <= b);
    Ok(grid)
}

/// Mean prediction over `local_x` with column `feature` overridden by each grid value.
pub fn partial_dependence_on_grid<P: Predictor + ?Sized>(
    model: &P,
    local_x: &Matrix,
    feature: usize,
    grid: &[f64],
) -> Vec<f64> {
    let m = local_x.nrows() as f64;
    let mut row = vec![0.0; local_x.ncols()];
    grid.iter()
        .map(|&g| {
            let mut acc = 0.0;
            for r in local_x.rows_iter() {
                row.copy_from_slice(r);
                row[feature] = g;
                acc += model.predict_one(&row);
            }
            acc / m
        })
        .collect()
}

/// Partial dependence of `model` on one feature over binned values of `local_x`.
pub fn partial_dependence<P: Predictor + ?Sized>(
    model: &P,
    local_x: &Matrix,
    feature: usize,
    bins: usize,
    binning: Binning,
) -> Result<PdCurve> {
    if local_x.nrows() == 0 || feature >= local_x.ncols() {
        return Err(Error::InvalidArgument("empty local rows or feature out of range".into()));
    }
    let grid = pd_grid(&local_x.column(feature), bins, binning)?;
    if grid.len() < 2 {
        return Err(Error::SinglePointGrid(feature));
    }
    let means = partial_dependence_on_grid(model, local_x, feature, &grid);
    Ok(PdCurve {
        feature,
        grid,
        means,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::pearson_correlation;

    fn sym_rows() -> Matrix {
        let vals: Vec<f64> = (-20..=20).map(|i| i as f64 / 10.0).collect();
        let rows: Vec<[f64; 2]> = vals.iter().map(|v| [*v, (v * 3.0).cos()]).collect();
        Matrix::from_rows(&rows)
    }

    #[test]
    fn flat_model() {
        let c = partial_dependence(&|_: &[f64]| 7.0, &sym_rows(), 0, 20, Binning::Percentile).unwrap();
        assert!(c.means.iter().all(|v| *v == 7.0));
        assert_eq!(c.grid.len(), 20);
        assert!(c.grid.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn identity_follows_grid() {
        let c = partial_dependence(&|x: &[f64]| x[0], &sym_rows(), 0, 10, Binning::Percentile).unwrap();
        for (m, g) in c.means.iter().zip(&c.grid) {
            assert!((m - g).abs() < 1e-12);
        }
    }

    #[test]
    fn square_shape() {
        let c = partial_dependence(&|x: &[f64]| x[0] * x[0] + x[1], &sym_rows(), 0, 20, Binning::Percentile)
            .unwrap();
        let sq: Vec<f64> = c.grid.iter().map(|g| g * g).collect();
        assert!(pearson_correlation(&c.means, &sq).unwrap() >= 0.99);
    }

    #[test]
    fn constant_feature_errors() {
        let x = Matrix::from_rows(&[[1.0, 0.0], [1.0, 2.0], [1.0, 3.0]]);
        assert!(matches!(
            partial_dependence(&|r: &[f64]| r[0], &x, 0, 5, Binning::Percentile),
            Err(Error::SinglePointGrid(0))
        ));
        assert!(partial_dependence(&|r: &[f64]| r[0], &x, 1, 1, Binning::Percentile).is_err());
    }

    #[test]
    fn equal_width_grid() {
        let g = pd_grid(&[0.0, 10.0, 3.0], 5, Binning::EqualWidth).unwrap();
        assert_eq!(g, vec![1.0, 3.0, 5.0, 7.0, 9.0]);
    }
}
