use nalgebra::{DMatrix, DVector};

use super::Predictor;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative pivot size below which a system is treated as singular.
const SINGULAR_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    coef: Vec<f64>,
    intercept: bool,
}

impl LinearModel {
    pub fn new(coef: Vec<f64>, intercept: bool) -> Self {
        LinearModel { coef, intercept }
    }

    /// Slopes followed by the intercept, when one was fitted.
    pub fn coefficients(&self) -> &[f64] {
        &self.coef
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }
}

impl Predictor for LinearModel {
    fn predict_one(&self, x: &[f64]) -> f64 {
        let slopes = if self.intercept {
            &self.coef[..self.coef.len() - 1]
        } else {
            &self.coef[..]
        };
        let mut acc = if self.intercept {
            self.coef[self.coef.len() - 1]
        } else {
            0.0
        };
        for (b, v) in slopes.iter().zip(x) {
            acc += b * v;
        }
        acc
    }
}

/// Weighted least squares through the normal equations
/// `(D'WD + lambda P) b = D'Wy`, where `D` is `X` with an optional trailing
/// intercept column and `P` penalizes every slope but not the intercept.
pub fn fit_linear_wls(x: &Matrix, y: &[f64], w: &[f64], lambda: f64, intercept: bool) -> Result<LinearModel> {
    let d = x.ncols();
    let p = d + usize::from(intercept);
    let mut a = DMatrix::<f64>::zeros(p, p);
    let mut b = DVector::<f64>::zeros(p);
    let mut row = vec![0.0; p];
    for i in 0..x.nrows() {
        row[..d].copy_from_slice(x.row(i));
        if intercept {
            row[d] = 1.0;
        }
        let wi = w[i];
        for r in 0..p {
            let wr = wi * row[r];
            b[r] += wr * y[i];
            for c in r..p {
                a[(r, c)] += wr * row[c];
            }
        }
    }
    for r in 0..p {
        for c in 0..r {
            a[(r, c)] = a[(c, r)];
        }
    }
    for j in 0..d {
        a[(j, j)] += lambda;
    }
    let max_diag = (0..p).map(|j| a[(j, j)]).fold(0.0, f64::max);
    let chol = a.cholesky().ok_or(Error::SingularFit)?;
    let l = chol.l_dirty();
    let min_pivot = (0..p).map(|j| l[(j, j)] * l[(j, j)]).fold(f64::INFINITY, f64::min);
    if !(max_diag > 0.0) || min_pivot <= SINGULAR_TOL * max_diag {
        return Err(Error::SingularFit);
    }
    let beta = chol.solve(&b);
    Ok(LinearModel::new(beta.iter().copied().collect(), intercept))
}

/// Unweighted least squares by Householder QR on the design matrix as given,
/// with a ridge penalty on the flagged columns realized as augmented rows.
pub fn fit_least_squares_qr(design: &Matrix, y: &[f64], lambda: f64, penalized: &[bool]) -> Result<Vec<f64>> {
    let p = design.ncols();
    let extra = if lambda > 0.0 {
        penalized.iter().filter(|b| **b).count()
    } else {
        0
    };
    let m = design.nrows() + extra;
    if m < p {
        return Err(Error::SingularFit);
    }
    let mut a = DMatrix::<f64>::zeros(m, p);
    let mut rhs = DVector::<f64>::zeros(m);
    for i in 0..design.nrows() {
        for j in 0..p {
            a[(i, j)] = design.get(i, j);
        }
        rhs[i] = y[i];
    }
    if extra > 0 {
        let s = lambda.sqrt();
        let mut r = design.nrows();
        for (j, _) in penalized.iter().enumerate().filter(|(_, b)| **b) {
            a[(r, j)] = s;
            r += 1;
        }
    }
    let qr = a.qr();
    let r = qr.r();
    let max_r = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if !(max_r > 0.0) || (0..p).any(|j| r[(j, j)].abs() <= SINGULAR_TOL * max_r) {
        return Err(Error::SingularFit);
    }
    let qty = qr.q().transpose() * rhs;
    let beta = r.solve_upper_triangular(&qty).ok_or(Error::SingularFit)?;
    Ok(beta.iter().copied().collect())
}
