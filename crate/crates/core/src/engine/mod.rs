//! Per-point local models: leave-one-out evaluation, bandwidth scans, the
//! explanation pass, classical GWR surfaces and recovery metrics.

mod explain;
mod gwr;
mod loo;
mod metrics;
mod scan;

pub use explain::{AttributionField, ExplainConfig, PdConfig, PdSummary};
pub use gwr::{global_ols, CoefficientField, OlsFit};
pub use loo::{HoldoutResult, LooResult};
pub use metrics::{recovery_metrics, RecoveryMetrics};
pub use scan::{default_grid, ScanPoint, ScanResult};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{weights_for, KernelSpec, WeightVector};
use crate::spatial::{DistanceIndex, SpatialDataset};

/// Fraction of points allowed to fail before a pass aborts.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of point `i` for stream `stream` under run seed `seed`.
pub fn point_seed(seed: u64, i: usize, stream: u64) -> u64 {
    mix(mix(seed ^ mix(i as u64)) ^ stream)
}

pub(crate) const LEARNER_STREAM: u64 = 0;
pub(crate) const LIME_STREAM: u64 = 1;

/// Runs per-point tasks over a dataset on a dedicated thread pool.
///
/// Results are gathered in point order and every task derives its own seed
/// from `(seed, point)`, so output does not depend on `threads`.
pub struct Engine<'a> {
    ds: &'a SpatialDataset,
    index: &'a DistanceIndex,
    pool: rayon::ThreadPool,
    seed: u64,
}

impl<'a> Engine<'a> {
    pub fn new(ds: &'a SpatialDataset, index: &'a DistanceIndex, threads: usize, seed: u64) -> Result<Self> {
        if index.len() != ds.len() {
            return Err(Error::InvalidArgument("index does not match dataset".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        Ok(Engine {
            ds,
            index,
            pool,
            seed,
        })
    }

    pub fn dataset(&self) -> &SpatialDataset {
        self.ds
    }

    pub fn index(&self) -> &DistanceIndex {
        self.index
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub(crate) fn par_points<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let n = self.ds.len();
        self.pool.install(|| (0..n).into_par_iter().map(f).collect())
    }

    pub(crate) fn weights(&self, kernel: &KernelSpec, i: usize) -> Result<WeightVector> {
        weights_for(self.index, kernel, i)
    }
}

/// Errors out when more than 5% of points failed.
pub(crate) fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_FRACTION * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_seeds_differ() {
        let a = point_seed(42, 0, 0);
        assert_ne!(a, point_seed(42, 1, 0));
        assert_ne!(a, point_seed(42, 0, 1));
        assert_ne!(a, point_seed(43, 0, 0));
        assert_eq!(a, point_seed(42, 0, 0));
    }

    #[test]
    fn failure_budget() {
        assert!(check_failures(45, 900).is_ok());
        assert!(check_failures(46, 900).is_err());
    }
}
