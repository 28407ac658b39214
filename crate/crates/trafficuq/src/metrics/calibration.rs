use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::icp;
use crate::uncertainty::PredictionInterval;

/// Observed coverage against nominal confidence over a grid. The ideal
/// curve is the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationCurve {
    /// Strictly increasing confidence levels 1−α′ in [0, 1].
    pub confidence: Vec<f64>,
    /// Observed ICP at each confidence level.
    pub coverage: Vec<f64>,
}

/// Default confidence grid: 0.05, 0.10, …, 0.95.
pub fn default_confidence_grid() -> Vec<f64> {
    (1..20).map(|k| k as f64 * 0.05).collect()
}

/// Builds the calibration curve by querying `intervals_at(α′)` for every
/// confidence level in the grid and measuring the observed coverage.
pub fn calibration_curve<F>(
    confidence_grid: &[f64],
    y_true: &[f64],
    mut intervals_at: F,
) -> Result<CalibrationCurve>
where
    F: FnMut(f64) -> Result<Vec<PredictionInterval>>,
{
    if confidence_grid.is_empty() {
        return Err(Error::Config("empty calibration grid".to_string()));
    }
    if confidence_grid
        .windows(2)
        .any(|pair| pair[1] <= pair[0])
    {
        return Err(Error::Config(
            "confidence grid must be strictly increasing".to_string(),
        ));
    }
    if confidence_grid
        .iter()
        .any(|c| !(0.0..=1.0).contains(c))
    {
        return Err(Error::Config(
            "confidence levels must lie in [0, 1]".to_string(),
        ));
    }
    let mut coverage = Vec::with_capacity(confidence_grid.len());
    for &c in confidence_grid {
        let intervals = intervals_at(1.0 - c)?;
        coverage.push(icp(&intervals, y_true)?);
    }
    Ok(CalibrationCurve {
        confidence: confidence_grid.to_vec(),
        coverage,
    })
}

/// Trapezoidal integral of |coverage(c) − c| over the confidence grid.
pub fn miscalibration_area(curve: &CalibrationCurve) -> f64 {
    let dev: Vec<f64> = curve
        .confidence
        .iter()
        .zip(&curve.coverage)
        .map(|(c, cov)| (cov - c).abs())
        .collect();
    let mut area = 0.0;
    for k in 0..dev.len().saturating_sub(1) {
        let dc = curve.confidence[k + 1] - curve.confidence[k];
        area += 0.5 * (dev[k] + dev[k + 1]) * dc;
    }
    area
}
