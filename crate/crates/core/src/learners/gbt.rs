use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::tree::{grow_tree, Presorted, RegressionTree};
use super::Predictor;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Squared-error gradient boosting hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    /// Fraction of rows drawn (without replacement) for each round.
    pub subsample: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 100,
            learning_rate: 0.1,
            max_depth: 3,
            subsample: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidArgument("gbt max_depth must be positive".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "subsample must be in (0, 1], got {}",
                self.subsample
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
    n_features: usize,
}

impl GbtModel {
    /// Weighted mean of the training response.
    pub fn init_value(&self) -> f64 {
        self.init
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    pub fn raw_importance(&self) -> Vec<f64> {
        let mut imp = vec![0.0; self.n_features];
        for t in &self.trees {
            for (acc, v) in imp.iter_mut().zip(t.raw_importance()) {
                *acc += v;
            }
        }
        imp
    }
}

impl Predictor for GbtModel {
    fn predict_one(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |acc, t| acc + self.learning_rate * t.predict_one(x))
    }
}

/// Boosts depth-limited regression trees on squared-error residuals.
pub fn fit_gbt(x: &Matrix, y: &[f64], w: &[f64], params: &GbtParams, seed: u64) -> Result<GbtModel> {
    params.validate()?;
    let m = x.nrows();
    if m == 0 || !(w.iter().sum::<f64>() > 0.0) {
        return Err(Error::EmptyNeighborhood);
    }
    let sorted = Presorted::new(x);
    // sum in presorted order so the result does not depend on input row order
    let (mut sw, mut swy) = (0.0, 0.0);
    for &r in sorted.canonical_order() {
        sw += w[r as usize];
        swy += w[r as usize] * y[r as usize];
    }
    let init = swy / sw;
    let mut pred = vec![init; m];
    let mut resid = vec![0.0; m];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let n_sub = ((params.subsample * m as f64).floor() as usize).clamp(1, m);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; m];
    for _ in 0..params.n_rounds {
        for i in 0..m {
            resid[i] = y[i] - pred[i];
        }
        let selected = if n_sub < m {
            mask.iter_mut().for_each(|v| *v = false);
            for i in sample(&mut rng, m, n_sub).iter() {
                mask[i] = true;
            }
            Some(mask.as_slice())
        } else {
            None
        };
        let tree = grow_tree(x, &sorted, selected, &resid, w, params.max_depth);
        for (i, p) in pred.iter_mut().enumerate() {
            *p += params.learning_rate * tree.predict_one(x.row(i));
        }
        trees.push(tree);
    }
    Ok(GbtModel {
        init,
        learning_rate: params.learning_rate,
        trees,
        n_features: x.ncols(),
    })
}
