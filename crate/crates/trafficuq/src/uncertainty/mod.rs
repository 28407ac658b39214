//! Five interval estimators behind a single interface: split conformal
//! prediction, ensemble percentiles, dual quantile regression, MC dropout
//! and the heteroscedastic Gaussian head.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Standardizer;
use crate::error::{Error, Result};
use crate::neural::{mc_dropout_samples, MLPModel};
use crate::regressors::loss::quantile_type1;
use crate::regressors::EnsembleModel;
use crate::seeding::derive_seed;

/// One prediction interval in original units (vehicles/hour).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    /// Point forecast ŷ.
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    /// Significance level α; confidence = 1 − α.
    pub alpha: f64,
}

impl PredictionInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn covers(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }
}

/// Sorted non-negative nonconformity scores from the calibration partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationScores {
    scores: Vec<f64>,
}

impl CalibrationScores {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }
}

/// Nonconformity scores `sᵢ = |yᵢ − ŷᵢ|` over the calibration rows, sorted
/// ascending. The calibration partition must be disjoint from training.
pub fn conformal_calibrate(predictions: &[f64], y: &[f64]) -> Result<CalibrationScores> {
    if predictions.is_empty() {
        return Err(Error::Calibration("empty calibration set".to_string()));
    }
    if predictions.len() != y.len() {
        return Err(Error::Shape(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            y.len()
        )));
    }
    let mut scores: Vec<f64> = predictions
        .iter()
        .zip(y)
        .map(|(p, t)| (t - p).abs())
        .collect();
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::Calibration("non-finite nonconformity score".to_string()));
    }
    scores.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(CalibrationScores { scores })
}

/// Finite-sample conformal quantile `q = s₍ₖ₎` with `k = ⌈(n+1)(1−α)⌉`.
/// Errors when the calibration set is too small for the requested α
/// (k > n would demand an infinite interval).
pub fn conformal_quantile(scores: &CalibrationScores, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let n = scores.len();
    let k = (((n + 1) as f64) * (1.0 - alpha)).ceil() as usize;
    if k > n {
        return Err(Error::Calibration(format!(
            "calibration set of {n} scores cannot support alpha={alpha} (needs rank {k})"
        )));
    }
    Ok(scores.scores[k - 1])
}

/// Symmetric constant-width conformal interval `[ŷ − q, ŷ + q]`.
pub fn conformal_interval(
    point: f64,
    scores: &CalibrationScores,
    alpha: f64,
) -> Result<PredictionInterval> {
    let q = conformal_quantile(scores, alpha)?;
    Ok(PredictionInterval {
        point,
        lower: point - q,
        upper: point + q,
        alpha,
    })
}

/// Interval from an empirical sample of predictions: type-1 α/2 and 1−α/2
/// quantiles. Shared by the ensemble and MC-dropout estimators so both use
/// the same quantile convention.
pub fn interval_from_samples(
    samples: &[f64],
    point: f64,
    alpha: f64,
) -> Result<PredictionInterval> {
    if samples.len() < 2 {
        return Err(Error::Config(
            "need at least 2 samples for an empirical interval".to_string(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(PredictionInterval {
        point,
        lower: quantile_type1(&sorted, alpha / 2.0),
        upper: quantile_type1(&sorted, 1.0 - alpha / 2.0),
        alpha,
    })
}

/// Percentile interval over per-estimator predictions; no calibration step.
pub fn ensemble_interval(
    model: &EnsembleModel,
    row: &[f64],
    alpha: f64,
) -> Result<PredictionInterval> {
    if model.n_estimators() < 2 {
        return Err(Error::Config(
            "ensemble intervals need at least 2 estimators".to_string(),
        ));
    }
    let members = model.predict_per_estimator(row)?;
    interval_from_samples(&members, model.predict_row(row)?, alpha)
}

/// Interval from a (lower, median, upper) quantile-model triple. Crossed
/// boundaries are swapped and reported via the returned flag.
pub fn quantile_interval(
    lower: f64,
    median: f64,
    upper: f64,
    alpha: f64,
) -> (PredictionInterval, bool) {
    let crossed = lower > upper;
    let (lo, hi) = if crossed { (upper, lower) } else { (lower, upper) };
    (
        PredictionInterval {
            point: median,
            lower: lo,
            upper: hi,
            alpha,
        },
        crossed,
    )
}

/// Empirical interval over N stochastic dropout passes; ŷ is the sample
/// mean.
pub fn mcdropout_interval(
    model: &MLPModel,
    row: &[f64],
    alpha: f64,
    passes: usize,
    seed: u64,
) -> Result<PredictionInterval> {
    if passes < 10 {
        return Err(Error::Config(format!(
            "MC dropout needs at least 10 passes, got {passes}"
        )));
    }
    let samples = mc_dropout_samples(model, row, passes, seed)?;
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    interval_from_samples(&samples, mean, alpha)
}

/// `μ ∓ z₁₋α/₂ · σ` Gaussian interval in whatever space (μ, σ) live in.
pub fn gaussian_interval(mu: f64, sigma: f64, alpha: f64) -> Result<PredictionInterval> {
    if !sigma.is_finite() || !mu.is_finite() {
        return Err(Error::Model(format!(
            "non-finite gaussian head output (mu={mu}, sigma={sigma})"
        )));
    }
    let z = Normal::new(0.0, 1.0).unwrap().inverse_cdf(1.0 - alpha / 2.0);
    Ok(PredictionInterval {
        point: mu,
        lower: mu - z * sigma,
        upper: mu + z * sigma,
        alpha,
    })
}

/// A fitted point model usable as the base of conformal prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum PointModel {
    Ensemble(EnsembleModel),
    /// MLP trained in standardized target space, with the scaler needed to
    /// report vehicles/hour.
    Mlp(MLPModel, Standardizer),
}

impl PointModel {
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        match self {
            PointModel::Ensemble(m) => m.predict_row(row),
            PointModel::Mlp(m, scaler) => Ok(scaler.inverse_y_value(m.predict_row(row)?)),
        }
    }
}

/// One of the five interval estimators, bundling its fitted components.
/// Supports arbitrary significance levels α′ except for the quantile
/// variant, which is tied to its trained τ pair.
#[derive(Debug)]
pub enum UqModel {
    Conformal {
        model: PointModel,
        scores: CalibrationScores,
    },
    Ensemble {
        model: EnsembleModel,
    },
    Quantile {
        lower: EnsembleModel,
        median: EnsembleModel,
        upper: EnsembleModel,
        /// Significance level the τ pair was trained for.
        alpha: f64,
        crossings: std::sync::atomic::AtomicUsize,
    },
    McDropout {
        model: MLPModel,
        scaler: Standardizer,
        passes: usize,
        seed: u64,
    },
    Heteroscedastic {
        model: MLPModel,
        scaler: Standardizer,
    },
}

impl UqModel {
    /// Interval for one query row at significance α. `row_id` keys the
    /// dropout sub-seed so repeated calls (e.g. along a calibration-curve
    /// grid) reuse identical stochastic passes.
    pub fn interval(&self, row: &[f64], row_id: u64, alpha: f64) -> Result<PredictionInterval> {
        match self {
            UqModel::Conformal { model, scores } => {
                conformal_interval(model.predict_row(row)?, scores, alpha)
            }
            UqModel::Ensemble { model } => ensemble_interval(model, row, alpha),
            UqModel::Quantile {
                lower,
                median,
                upper,
                alpha: trained_alpha,
                crossings,
            } => {
                if (alpha - trained_alpha).abs() > 1e-9 {
                    return Err(Error::Config(format!(
                        "quantile models were trained for alpha={trained_alpha}, cannot serve alpha={alpha}"
                    )));
                }
                let (interval, crossed) = quantile_interval(
                    lower.predict_row(row)?,
                    median.predict_row(row)?,
                    upper.predict_row(row)?,
                    alpha,
                );
                if crossed {
                    crossings.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                }
                Ok(interval)
            }
            UqModel::McDropout {
                model,
                scaler,
                passes,
                seed,
            } => {
                let interval =
                    mcdropout_interval(model, row, alpha, *passes, derive_seed(*seed, row_id))?;
                Ok(PredictionInterval {
                    point: scaler.inverse_y_value(interval.point),
                    lower: scaler.inverse_y_value(interval.lower),
                    upper: scaler.inverse_y_value(interval.upper),
                    alpha,
                })
            }
            UqModel::Heteroscedastic { model, scaler } => {
                let (mu, sigma) = model.predict_gaussian_row(row)?;
                let interval = gaussian_interval(mu, sigma, alpha)?;
                Ok(PredictionInterval {
                    point: scaler.inverse_y_value(interval.point),
                    lower: scaler.inverse_y_value(interval.lower),
                    upper: scaler.inverse_y_value(interval.upper),
                    alpha,
                })
            }
        }
    }

    /// Intervals for one query row at several significance levels, doing
    /// the per-row work (point prediction, member predictions, dropout
    /// passes) once. Equivalent to calling [`UqModel::interval`] per level.
    pub fn interval_grid(
        &self,
        row: &[f64],
        row_id: u64,
        alphas: &[f64],
    ) -> Result<Vec<PredictionInterval>> {
        match self {
            UqModel::Conformal { model, scores } => {
                let point = model.predict_row(row)?;
                alphas
                    .iter()
                    .map(|&a| conformal_interval(point, scores, a))
                    .collect()
            }
            UqModel::Ensemble { model } => {
                if model.n_estimators() < 2 {
                    return Err(Error::Config(
                        "ensemble intervals need at least 2 estimators".to_string(),
                    ));
                }
                let members = model.predict_per_estimator(row)?;
                let point = model.predict_row(row)?;
                alphas
                    .iter()
                    .map(|&a| interval_from_samples(&members, point, a))
                    .collect()
            }
            UqModel::Quantile { .. } => alphas
                .iter()
                .map(|&a| self.interval(row, row_id, a))
                .collect(),
            UqModel::McDropout {
                model,
                scaler,
                passes,
                seed,
            } => {
                if *passes < 10 {
                    return Err(Error::Config(format!(
                        "MC dropout needs at least 10 passes, got {passes}"
                    )));
                }
                let samples = mc_dropout_samples(model, row, *passes, derive_seed(*seed, row_id))?;
                let mean = samples.iter().sum::<f64>() / samples.len() as f64;
                alphas
                    .iter()
                    .map(|&a| {
                        let iv = interval_from_samples(&samples, mean, a)?;
                        Ok(PredictionInterval {
                            point: scaler.inverse_y_value(iv.point),
                            lower: scaler.inverse_y_value(iv.lower),
                            upper: scaler.inverse_y_value(iv.upper),
                            alpha: a,
                        })
                    })
                    .collect()
            }
            UqModel::Heteroscedastic { model, scaler } => {
                let (mu, sigma) = model.predict_gaussian_row(row)?;
                alphas
                    .iter()
                    .map(|&a| {
                        let iv = gaussian_interval(mu, sigma, a)?;
                        Ok(PredictionInterval {
                            point: scaler.inverse_y_value(iv.point),
                            lower: scaler.inverse_y_value(iv.lower),
                            upper: scaler.inverse_y_value(iv.upper),
                            alpha: a,
                        })
                    })
                    .collect()
            }
        }
    }

    /// Point forecast in original units.
    pub fn point(&self, row: &[f64], row_id: u64) -> Result<f64> {
        match self {
            UqModel::Conformal { model, .. } => model.predict_row(row),
            UqModel::Ensemble { model } => model.predict_row(row),
            UqModel::Quantile { median, .. } => median.predict_row(row),
            UqModel::McDropout {
                model,
                scaler,
                passes,
                seed,
            } => {
                let samples =
                    mc_dropout_samples(model, row, *passes, derive_seed(*seed, row_id))?;
                Ok(scaler.inverse_y_value(samples.iter().sum::<f64>() / samples.len() as f64))
            }
            UqModel::Heteroscedastic { model, scaler } => {
                Ok(scaler.inverse_y_value(model.predict_row(row)?))
            }
        }
    }

    /// Whether the estimator can serve significance levels other than the
    /// one it was built for.
    pub fn supports_arbitrary_alpha(&self) -> bool {
        !matches!(self, UqModel::Quantile { .. })
    }

    pub fn crossing_count(&self) -> usize {
        match self {
            UqModel::Quantile { crossings, .. } => {
                crossings.load(std::sync::atomic::Ordering::Relaxed)
            }
            _ => 0,
        }
    }
}
