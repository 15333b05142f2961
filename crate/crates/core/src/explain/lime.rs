use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::learners::{fit_linear_wls, Predictor};
use crate::matrix::Matrix;

pub const DEFAULT_LIME_SAMPLES: usize = 1000;

/// Local surrogate settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimeConfig {
    pub n_samples: usize,
    /// Proximity kernel width in standardized units; `None` means `0.75 * sqrt(d)`.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: DEFAULT_LIME_SAMPLES,
            kernel_width: None,
            ridge: 1e-3,
        }
    }
}

impl LimeConfig {
    pub fn width_for(&self, d: usize) -> f64 {
        self.kernel_width.unwrap_or(0.75 * (d as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimeAttribution {
    pub slopes: Vec<f64>,
    pub intercept: f64,
}

/// Fits a proximity-weighted ridge surrogate around `x`.
///
/// Perturbations are `z ~ N(x, diag(s^2))` with `s` the per-feature standard
/// deviation of `local_x`; features with zero spread stay at `x_j` and get a
/// zero slope. Proximity is `exp(-|(z - x) / s|^2 / width^2)`.
pub fn lime_explain<P: Predictor + ?Sized>(
    model: &P,
    x: &[f64],
    local_x: &Matrix,
    seed: u64,
    config: &LimeConfig,
) -> Result<LimeAttribution> {
    let d = x.len();
    let m = local_x.nrows();
    if m < 2 || local_x.ncols() != d {
        return Err(Error::InvalidArgument(format!(
            "LIME needs at least 2 local rows with {d} columns"
        )));
    }
    if config.n_samples < 2 {
        return Err(Error::InvalidArgument("LIME needs at least 2 samples".into()));
    }
    let width = config.width_for(d);
    if !(width > 0.0) {
        return Err(Error::InvalidArgument(format!("invalid kernel width {width}")));
    }

    let spread: Vec<f64> = (0..d)
        .map(|j| {
            let col = local_x.column(j);
            let mean = col.iter().sum::<f64>() / m as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            let s = var.sqrt();
            if s <= 1e-12 * mean.abs().max(1.0) {
                0.0
            } else {
                s
            }
        })
        .collect();
    let active: Vec<usize> = (0..d).filter(|&j| spread[j] > 0.0).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = config.n_samples;
    let mut design = Matrix::zeros(n, active.len());
    let mut target = Vec::with_capacity(n);
    let mut proximity = Vec::with_capacity(n);
    let mut z = x.to_vec();
    let mut eps = vec![0.0; d];
    for r in 0..n {
        for e in eps.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        let mut dist2 = 0.0;
        for (c, &j) in active.iter().enumerate() {
            let offset = spread[j] * eps[j];
            z[j] = x[j] + offset;
            design.set(r, c, offset);
            dist2 += eps[j] * eps[j];
        }
        proximity.push((-dist2 / (width * width)).exp());
        target.push(model.predict_one(&z));
    }
    let fit = fit_linear_wls(&design, &target, &proximity, config.ridge, true)?;
    let coef = fit.coefficients();
    let mut slopes = vec![0.0; d];
    for (c, &j) in active.iter().enumerate() {
        slopes[j] = coef[c];
    }
    Ok(LimeAttribution {
        slopes,
        intercept: coef[active.len()],
    })
}
