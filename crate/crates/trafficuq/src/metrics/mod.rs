//! Interval-quality metrics: MIL, ICP, RMIL, R², calibration curves with
//! miscalibration area, and a streaming coverage-drift monitor.

pub mod calibration;
pub mod drift;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::PredictionInterval;
pub use calibration::{calibration_curve, miscalibration_area, CalibrationCurve};
pub use drift::{CoverageDriftMonitor, DriftAlarm};

/// Per-scenario metric bundle.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    /// Coefficient of determination; None when the targets are constant.
    pub r2: Option<f64>,
    /// Mean interval length, vehicles/hour.
    pub mil: f64,
    /// Interval coverage percentage in [0, 1].
    pub icp: f64,
    /// MIL relative to per-sample forecast error; None when not computed.
    pub rmil: Option<f64>,
    /// Area between the calibration curve and the identity; None for
    /// estimators restricted to a single significance level.
    pub miscalibration_area: Option<f64>,
    /// Test-sample count T.
    pub t: usize,
}

/// Mean interval length: `(1/T)·Σ(uₜ − lₜ)`.
pub fn mil(intervals: &[PredictionInterval]) -> Result<f64> {
    if intervals.is_empty() {
        return Err(Error::Metric("MIL of an empty interval set".to_string()));
    }
    Ok(intervals.iter().map(|iv| iv.upper - iv.lower).sum::<f64>() / intervals.len() as f64)
}

/// Interval coverage percentage: `(1/T)·Σ 1{lₜ ≤ yₜ ≤ uₜ}`. Boundary
/// values count as covered.
pub fn icp(intervals: &[PredictionInterval], y_true: &[f64]) -> Result<f64> {
    if intervals.len() != y_true.len() {
        return Err(Error::Shape(format!(
            "{} intervals vs {} targets",
            intervals.len(),
            y_true.len()
        )));
    }
    if intervals.is_empty() {
        return Err(Error::Metric("ICP of an empty interval set".to_string()));
    }
    let covered = intervals
        .iter()
        .zip(y_true)
        .filter(|(iv, y)| iv.covers(**y))
        .count();
    Ok(covered as f64 / intervals.len() as f64)
}

/// Width relative to forecast error: `(1/T)·Σ (uₜ−lₜ)/max(|yₜ−ŷₜ|, ε)`.
/// The floor ε keeps near-perfect forecasts from producing infinities.
pub fn rmil(
    intervals: &[PredictionInterval],
    y_true: &[f64],
    y_hat: &[f64],
    floor: f64,
) -> Result<f64> {
    if floor <= 0.0 {
        return Err(Error::Config("RMIL floor must be positive".to_string()));
    }
    if intervals.len() != y_true.len() || y_true.len() != y_hat.len() {
        return Err(Error::Shape("mismatched RMIL input lengths".to_string()));
    }
    if intervals.is_empty() {
        return Err(Error::Metric("RMIL of an empty interval set".to_string()));
    }
    let sum: f64 = intervals
        .iter()
        .zip(y_true.iter().zip(y_hat))
        .map(|(iv, (y, p))| (iv.upper - iv.lower) / (y - p).abs().max(floor))
        .sum();
    Ok(sum / intervals.len() as f64)
}

/// Default RMIL error floor, vehicles/hour.
pub const RMIL_FLOOR: f64 = 1e-6;

/// Coefficient of determination `1 − Σ(y−ŷ)²/Σ(y−ȳ)²`; None when y is
/// constant.
pub fn r_squared(y_true: &[f64], y_hat: &[f64]) -> Result<Option<f64>> {
    if y_true.len() != y_hat.len() {
        return Err(Error::Shape(format!(
            "{} targets vs {} predictions",
            y_true.len(),
            y_hat.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Metric("R² of an empty set".to_string()));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let ss_tot: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Ok(None);
    }
    let ss_res: f64 = y_true
        .iter()
        .zip(y_hat)
        .map(|(y, p)| (y - p) * (y - p))
        .sum();
    Ok(Some(1.0 - ss_res / ss_tot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn iv(lower: f64, upper: f64) -> PredictionInterval {
        PredictionInterval { point: 0.5 * (lower + upper), lower, upper, alpha: 0.1 }
    }

    #[test]
    fn mil_is_the_mean_width() {
        assert_eq!(mil(&[iv(0.0, 10.0)]).unwrap(), 10.0);
        assert_eq!(mil(&[iv(0.0, 2.0), iv(0.0, 4.0), iv(0.0, 6.0)]).unwrap(), 4.0);
        assert!(mil(&[]).is_err());
    }

    #[test]
    fn icp_counts_boundary_values_as_covered() {
        let intervals = [iv(0.0, 1.0), iv(0.0, 1.0), iv(0.0, 1.0), iv(0.0, 1.0)];
        assert_eq!(icp(&intervals, &[0.5, 0.0, 1.0, 0.2]).unwrap(), 1.0);
        assert_eq!(icp(&intervals, &[0.5, 2.0, 1.0, 0.2]).unwrap(), 0.75);
        assert!(icp(&intervals, &[1.0]).is_err());
        assert!(icp(&[], &[]).is_err());
    }

    #[test]
    fn rmil_relates_width_to_forecast_error() {
        // Width 4, |error| 2 -> ratio 2 per sample.
        let intervals = [iv(-2.0, 2.0), iv(3.0, 7.0)];
        let value = rmil(&intervals, &[2.0, 3.0], &[0.0, 5.0], RMIL_FLOOR).unwrap();
        assert_relative_eq!(value, 2.0, epsilon = 1e-12);
        // Perfect forecast: the floor caps the ratio at width/floor.
        let capped = rmil(&[iv(0.0, 1.0)], &[0.5], &[0.5], 1e-6).unwrap();
        assert_relative_eq!(capped, 1.0 / 1e-6, epsilon = 1e-3);
        assert!(rmil(&intervals, &[1.0, 2.0], &[1.0, 2.0], 0.0).is_err());
        assert!(rmil(&intervals, &[1.0], &[1.0, 2.0], RMIL_FLOOR).is_err());
    }

    #[test]
    fn rmil_matches_a_direct_transcription() {
        let mut rng = crate::seeding::rng_from_seed(61);
        let intervals: Vec<PredictionInterval> = (0..200)
            .map(|_| {
                let lo = rng.gen_range(-10.0..0.0);
                iv(lo, lo + rng.gen_range(0.0..20.0))
            })
            .collect();
        let y: Vec<f64> = (0..200).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let p: Vec<f64> = (0..200).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let oracle: f64 = intervals
            .iter()
            .zip(y.iter().zip(&p))
            .map(|(iv, (yt, yp))| (iv.upper - iv.lower) / (yt - yp).abs().max(RMIL_FLOOR))
            .sum::<f64>()
            / 200.0;
        assert_relative_eq!(
            rmil(&intervals, &y, &p, RMIL_FLOOR).unwrap(),
            oracle,
            epsilon = 1e-12
        );
    }

    #[test]
    fn r_squared_reference_points() {
        let y = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(r_squared(&y, &y).unwrap(), Some(1.0));
        // Predicting the mean gives exactly 0.
        assert_eq!(r_squared(&y, &[2.5; 4]).unwrap(), Some(0.0));
        // Constant targets are undefined.
        assert_eq!(r_squared(&[5.0; 4], &y).unwrap(), None);
        assert!(r_squared(&y, &[1.0]).is_err());
        assert!(r_squared(&[], &[]).is_err());
    }
}
