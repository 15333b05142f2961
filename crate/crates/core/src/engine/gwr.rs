use super::{check_failures, Engine};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::learners::{fit_linear_wls, LearnerConfig, Predictor, WeightedLearner};
use crate::matrix::Matrix;
use crate::spatial::{r_squared, SpatialDataset};

/// Per-point coefficient estimates (NaN rows for failed points).
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    pub values: Matrix,
    pub failed: Vec<usize>,
}

/// Single global unweighted linear fit with intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Slopes then intercept.
    pub coefficients: Vec<f64>,
    pub in_sample_r2: f64,
    pub loo_r2: f64,
}

pub fn global_ols(ds: &SpatialDataset) -> Result<OlsFit> {
    let n = ds.len();
    let x = ds.features();
    let y = ds.response();
    let model = fit_linear_wls(x, y, &vec![1.0; n], 0.0, true)?;
    let in_sample_r2 = r_squared(y, &model.predict(x));
    let mut loo = Vec::with_capacity(n);
    let mut w = vec![1.0; n];
    for i in 0..n {
        w[i] = 0.0;
        let m = fit_linear_wls(x, y, &w, 0.0, true)?;
        loo.push(m.predict_one(x.row(i)));
        w[i] = 1.0;
    }
    Ok(OlsFit {
        coefficients: model.coefficients().to_vec(),
        in_sample_r2,
        loo_r2: r_squared(y, &loo),
    })
}

impl Engine<'_> {
    /// Classical GWR: weighted least squares at every point through the
    /// sqrt-weight transform. Columns are slopes then intercept.
    pub fn gwr_coefficient_surface(&self, kernel: &KernelSpec) -> Result<CoefficientField> {
        let ds = self.ds;
        let (n, d) = (ds.len(), ds.n_features());
        kernel.validate(n)?;
        let learner = LearnerConfig::linear();
        let out = self.par_points(|i| -> Result<Vec<f64>> {
            let w = self.weights(kernel, i)?;
            let model = learner.fit(ds.features(), ds.response(), &w.weights, 0)?;
            Ok(model.coefficients().expect("linear model").to_vec())
        });
        let mut values = Matrix::filled(n, d + 1, f64::NAN);
        let mut failed = Vec::new();
        for (i, r) in out.into_iter().enumerate() {
            match r {
                Ok(c) => values.row_mut(i).copy_from_slice(&c),
                Err(_) => failed.push(i),
            }
        }
        check_failures(failed.len(), n)?;
        Ok(CoefficientField { values, failed })
    }

    /// Smooths an attribution field into a coefficient surface: for each
    /// feature `j` and point `i`, the local weighted regression of the field's
    /// column `j` on the centered feature `x_j` (plus intercept) gives the slope.
    pub fn gwr_smooth_attributions(&self, kernel: &KernelSpec, field: &Matrix) -> Result<CoefficientField> {
        let ds = self.ds;
        let (n, d) = (ds.len(), ds.n_features());
        if field.nrows() != n || field.ncols() != d {
            return Err(Error::InvalidArgument(format!(
                "field must be {n} x {d}, got {} x {}",
                field.nrows(),
                field.ncols()
            )));
        }
        kernel.validate(n)?;
        let out = self.par_points(|i| -> Result<Vec<f64>> {
            let w = self.weights(kernel, i)?;
            let mut slopes = Vec::with_capacity(d);
            for j in 0..d {
                let rows: Vec<usize> = w
                    .nonzero_indices()
                    .into_iter()
                    .filter(|&r| field.get(r, j).is_finite())
                    .collect();
                if rows.len() < 3 {
                    return Err(Error::DegenerateNeighborhood {
                        point: i,
                        nonzero: rows.len(),
                    });
                }
                let wt: Vec<f64> = rows.iter().map(|&r| w.weights[r]).collect();
                let tw: f64 = wt.iter().sum();
                let mean = rows
                    .iter()
                    .zip(&wt)
                    .map(|(&r, wr)| wr * ds.features().get(r, j))
                    .sum::<f64>()
                    / tw;
                let centered = Matrix::from_vec(
                    rows.len(),
                    1,
                    rows.iter().map(|&r| ds.features().get(r, j) - mean).collect(),
                );
                let phi: Vec<f64> = rows.iter().map(|&r| field.get(r, j)).collect();
                let m = fit_linear_wls(&centered, &phi, &wt, 0.0, true)?;
                slopes.push(m.coefficients()[0]);
            }
            Ok(slopes)
        });
        let mut values = Matrix::filled(n, d, f64::NAN);
        let mut failed = Vec::new();
        for (i, r) in out.into_iter().enumerate() {
            match r {
                Ok(s) => values.row_mut(i).copy_from_slice(&s),
                Err(_) => failed.push(i),
            }
        }
        check_failures(failed.len(), n)?;
        Ok(CoefficientField { values, failed })
    }
}
