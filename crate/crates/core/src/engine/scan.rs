use super::{recovery_metrics, Engine, ExplainConfig, RecoveryMetrics};
use crate::error::{Error, Result};
use crate::kernels::{Bandwidth, BandwidthMode, KernelKind, KernelSpec};
use crate::learners::LearnerConfig;
use crate::matrix::Matrix;

/// Fixed: 2..=40 step 2. Adaptive: 20, 50, ... up to 900, capped at `n`.
pub fn default_grid(mode: BandwidthMode, n: usize) -> Vec<f64> {
    match mode {
        BandwidthMode::Fixed => (1..=20).map(|i| 2.0 * i as f64).collect(),
        BandwidthMode::Adaptive => (0..)
            .map(|i| 20 + 30 * i)
            .take_while(|&k| k <= 900 && k <= n)
            .map(|k| k as f64)
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub bandwidth: f64,
    /// `None` when the evaluation at this bandwidth failed.
    pub loo_r2: Option<f64>,
    /// Recovery metrics per explainer field, when ground truth was supplied.
    pub correlations: Vec<(String, RecoveryMetrics)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub kind: KernelKind,
    pub mode: BandwidthMode,
    pub points: Vec<ScanPoint>,
    /// Bandwidth with the highest LOO R² (smallest bandwidth on ties).
    pub chosen: f64,
}

impl ScanResult {
    pub fn chosen_r2(&self) -> Option<f64> {
        self.points
            .iter()
            .find(|p| p.bandwidth == self.chosen)
            .and_then(|p| p.loo_r2)
    }
}

/// Argmax of R² with ties going to the smaller bandwidth.
pub(crate) fn select_bandwidth(points: &[ScanPoint]) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for p in points {
        let Some(r2) = p.loo_r2 else { continue };
        best = match best {
            None => Some((p.bandwidth, r2)),
            Some((b, r)) if r2 > r || (r2 == r && p.bandwidth < b) => Some((p.bandwidth, r2)),
            keep => keep,
        };
    }
    best.map(|b| b.0)
}

impl Engine<'_> {
    /// Evaluates LOO R² at every bandwidth of `grid` and picks the best.
    /// With `truth`, also runs the explanation pass at each bandwidth and
    /// records how well every field recovers the true surfaces.
    pub fn scan_bandwidth(
        &self,
        kind: KernelKind,
        mode: BandwidthMode,
        sigma_multiplier: f64,
        learner: &LearnerConfig,
        grid: &[f64],
        truth: Option<(&Matrix, &ExplainConfig)>,
    ) -> Result<ScanResult> {
        if grid.is_empty() {
            return Err(Error::InvalidArgument("empty bandwidth grid".into()));
        }
        let n = self.ds.len();
        let mut specs = Vec::with_capacity(grid.len());
        for &v in grid {
            let spec = KernelSpec {
                kind,
                bandwidth: Bandwidth::from_value(mode, v)?,
                sigma_multiplier,
            };
            spec.validate(n)?;
            specs.push(spec);
        }
        let mut points = Vec::with_capacity(grid.len());
        for (spec, &bw) in specs.iter().zip(grid) {
            let loo_r2 = match self.loo_evaluate(spec, learner) {
                Ok(r) => Some(r.r2),
                Err(e) => {
                    log::warn!("bandwidth {bw} failed: {e}");
                    None
                }
            };
            let mut correlations = Vec::new();
            if let (Some((t, cfg)), Some(_)) = (truth, loo_r2) {
                let field = self.explain_all(spec, learner, cfg)?;
                for (name, m) in field.explainer_fields() {
                    correlations.push((name.to_string(), recovery_metrics(m, t)?));
                }
                if let Some(c) = &field.coefficients {
                    correlations.push(("coefficients".to_string(), recovery_metrics(c, t)?));
                }
            }
            points.push(ScanPoint {
                bandwidth: bw,
                loo_r2,
                correlations,
            });
        }
        let chosen = select_bandwidth(&points).ok_or(Error::ScanFailed)?;
        Ok(ScanResult {
            kind,
            mode,
            points,
            chosen,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(bandwidth: f64, r2: Option<f64>) -> ScanPoint {
        ScanPoint {
            bandwidth,
            loo_r2: r2,
            correlations: Vec::new(),
        }
    }

    #[test]
    fn ties_prefer_smaller_bandwidth() {
        let pts = [pt(30.0, Some(0.5)), pt(10.0, Some(0.5)), pt(20.0, Some(0.4))];
        assert_eq!(select_bandwidth(&pts), Some(10.0));
    }

    #[test]
    fn failed_points_skipped() {
        let pts = [pt(10.0, None), pt(20.0, Some(-0.2))];
        assert_eq!(select_bandwidth(&pts), Some(20.0));
        assert_eq!(select_bandwidth(&[pt(1.0, None)]), None);
    }

    #[test]
    fn default_grids() {
        let f = default_grid(BandwidthMode::Fixed, 900);
        assert_eq!((f[0], f[f.len() - 1], f.len()), (2.0, 40.0, 20));
        let a = default_grid(BandwidthMode::Adaptive, 900);
        assert_eq!((a[0], a[a.len() - 1], a.len()), (20.0, 890.0, 30));
        assert_eq!(default_grid(BandwidthMode::Adaptive, 100).len(), 3);
    }
}
