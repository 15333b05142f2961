use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spatial::pearson_correlation;

/// Per-feature correlation between an estimated field and the true surfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryMetrics {
    pub per_feature: Vec<f64>,
    /// Columns whose correlation was undefined (zero variance) and scored 0.
    pub degenerate: Vec<bool>,
    pub mean: f64,
}

/// Pearson correlation of each field column with the matching truth column.
///
/// Rows where the field is NaN are skipped. A zero-variance column scores 0
/// and is flagged rather than failing the whole evaluation.
pub fn recovery_metrics(field: &Matrix, truth: &Matrix) -> Result<RecoveryMetrics> {
    if field.nrows() != truth.nrows() {
        return Err(Error::InvalidArgument(format!(
            "field has {} rows, truth has {}",
            field.nrows(),
            truth.nrows()
        )));
    }
    let d = field.ncols().min(truth.ncols());
    if d == 0 {
        return Err(Error::InvalidArgument("no columns to compare".into()));
    }
    let mut per_feature = Vec::with_capacity(d);
    let mut degenerate = Vec::with_capacity(d);
    for j in 0..d {
        let (a, b): (Vec<f64>, Vec<f64>) = (0..field.nrows())
            .filter(|&i| field.get(i, j).is_finite())
            .map(|i| (field.get(i, j), truth.get(i, j)))
            .unzip();
        match pearson_correlation(&a, &b) {
            Ok(c) => {
                per_feature.push(c);
                degenerate.push(false);
            }
            Err(Error::UndefinedCorrelation(_)) => {
                log::warn!("zero-variance column {j}; correlation recorded as 0");
                per_feature.push(0.0);
                degenerate.push(true);
            }
            Err(e) => return Err(e),
        }
    }
    let mean = per_feature.iter().sum::<f64>() / d as f64;
    Ok(RecoveryMetrics {
        per_feature,
        degenerate,
        mean,
    })
}
