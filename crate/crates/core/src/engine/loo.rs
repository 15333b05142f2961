use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_failures, point_seed, Engine, LEARNER_STREAM};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::learners::{LearnerConfig, Predictor, WeightedLearner};
use crate::spatial::r_squared;

/// Leave-one-out predictions (NaN where the local fit failed) and their R².
#[derive(Debug, Clone, PartialEq)]
pub struct LooResult {
    pub predictions: Vec<f64>,
    pub failed: Vec<usize>,
    pub r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HoldoutResult {
    pub train_r2: f64,
    pub test_r2: f64,
    pub test_points: Vec<usize>,
}

fn r2_over_finite(y: &[f64], pred: &[f64]) -> f64 {
    let (ys, ps): (Vec<f64>, Vec<f64>) = y
        .iter()
        .zip(pred)
        .filter(|(_, p)| p.is_finite())
        .map(|(a, b)| (*a, *b))
        .unzip();
    r_squared(&ys, &ps)
}

impl Engine<'_> {
    /// Predicts at `target` from a local model trained on `allowed` rows
    /// (excluding rows with zero kernel weight).
    fn local_predict(
        &self,
        kernel: &KernelSpec,
        learner: &LearnerConfig,
        target: usize,
        allowed: impl Fn(usize) -> bool,
    ) -> Result<f64> {
        let ds = self.ds;
        let w = self.weights(kernel, target)?;
        let rows: Vec<usize> = w
            .nonzero_indices()
            .into_iter()
            .filter(|&j| allowed(j))
            .collect();
        let d = ds.n_features();
        if rows.len() < d + 2 {
            return Err(Error::DegenerateNeighborhood {
                point: target,
                nonzero: rows.len(),
            });
        }
        let x = ds.features().select_rows(&rows);
        let y: Vec<f64> = rows.iter().map(|&j| ds.response()[j]).collect();
        let wt: Vec<f64> = rows.iter().map(|&j| w.weights[j]).collect();
        let model = learner.fit(&x, &y, &wt, point_seed(self.seed, target, LEARNER_STREAM))?;
        Ok(model.predict_one(ds.features().row(target)))
    }

    /// Leave-one-out evaluation: point `i` is predicted by a model fitted on
    /// its weighted neighborhood with row `i` removed.
    pub fn loo_evaluate(&self, kernel: &KernelSpec, learner: &LearnerConfig) -> Result<LooResult> {
        kernel.validate(self.ds.len())?;
        learner.validate()?;
        let out = self.par_points(|i| self.local_predict(kernel, learner, i, |j| j != i));
        let mut failed = Vec::new();
        let predictions: Vec<f64> = out
            .into_iter()
            .enumerate()
            .map(|(i, r)| match r {
                Ok(p) if p.is_finite() => p,
                Ok(_) | Err(_) => {
                    failed.push(i);
                    f64::NAN
                }
            })
            .collect();
        check_failures(failed.len(), self.ds.len())?;
        let r2 = r2_over_finite(self.ds.response(), &predictions);
        Ok(LooResult {
            predictions,
            failed,
            r2,
        })
    }

    /// Random holdout: a `test_fraction` of points is predicted from training
    /// points only; training R² is in-sample over the remaining points.
    pub fn holdout_evaluate(
        &self,
        kernel: &KernelSpec,
        learner: &LearnerConfig,
        test_fraction: f64,
    ) -> Result<HoldoutResult> {
        let n = self.ds.len();
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test fraction must be in (0, 1), got {test_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(self.seed));
        let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
        let mut is_test = vec![false; n];
        for &i in &order[..n_test] {
            is_test[i] = true;
        }
        let out = self.par_points(|i| self.local_predict(kernel, learner, i, |j| !is_test[j]));
        let mut failed = 0;
        let preds: Vec<f64> = out
            .into_iter()
            .map(|r| {
                r.unwrap_or_else(|_| {
                    failed += 1;
                    f64::NAN
                })
            })
            .collect();
        check_failures(failed, n)?;
        let y = self.ds.response();
        let split = |test: bool| -> (Vec<f64>, Vec<f64>) {
            (0..n)
                .filter(|&i| is_test[i] == test && preds[i].is_finite())
                .map(|i| (y[i], preds[i]))
                .unzip()
        };
        let (yt, pt) = split(false);
        let (ys, ps) = split(true);
        let mut test_points: Vec<usize> = order[..n_test].to_vec();
        test_points.sort_unstable();
        Ok(HoldoutResult {
            train_r2: r_squared(&yt, &pt),
            test_r2: r_squared(&ys, &ps),
            test_points,
        })
    }
}
