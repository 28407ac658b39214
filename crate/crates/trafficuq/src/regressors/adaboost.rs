use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::regressors::tree::{fit_tree_weighted, SplitMode, TreeConfig};
use crate::regressors::{EnsembleKind, EnsembleModel};
use crate::seeding::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
}

impl Default for AdaBoostConfig {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
        }
    }
}

/// AdaBoost.R2 with linear loss.
///
/// Each round draws a weighted bootstrap sample, fits a depth-limited CART
/// tree, computes per-sample losses `Lᵢ = |yᵢ − ŷᵢ| / max|y − ŷ|` and the
/// weighted average loss L̄. Rounds with L̄ ≥ 0.5 are discarded and stop the
/// process; a round with zero maximum error keeps its estimator and stops
/// early. Otherwise `β = L̄/(1−L̄)`, the estimator gets vote
/// `learning_rate·ln(1/β)` and sample weights update as
/// `wᵢ ← wᵢ·β^(learning_rate·(1−Lᵢ))`. The point prediction is the
/// weighted median of the estimator outputs.
pub fn fit_adaboost_r2(
    x: &Matrix,
    y: &[f64],
    config: &AdaBoostConfig,
    seed: u64,
) -> Result<EnsembleModel> {
    if config.n_estimators < 1 {
        return Err(Error::Config("n_estimators must be >= 1".to_string()));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::Config("learning_rate must be positive".to_string()));
    }
    if y.is_empty() {
        return Err(Error::Fit("cannot fit on an empty dataset".to_string()));
    }
    let n = y.len();
    let tree_config = TreeConfig {
        max_depth: Some(config.max_depth),
        min_samples_leaf: 1,
        split_mode: SplitMode::Best,
    };

    let mut sample_weights = vec![1.0 / n as f64; n];
    let mut trees = Vec::new();
    let mut votes = Vec::new();
    let mut counts = vec![0.0f64; n];

    for round in 0..config.n_estimators {
        let round_seed = derive_seed(seed, round as u64);
        weighted_bootstrap(&sample_weights, &mut counts, round_seed);
        let tree = fit_tree_weighted(x, y, &counts, &tree_config, round_seed)?;
        let preds = tree.predict(x)?;

        let errors: Vec<f64> = y.iter().zip(&preds).map(|(yi, pi)| (yi - pi).abs()).collect();
        let max_error = errors.iter().cloned().fold(0.0, f64::max);
        if max_error <= 0.0 {
            // Perfect round; keep it and stop.
            trees.push(tree);
            votes.push(1.0);
            break;
        }
        let losses: Vec<f64> = errors.iter().map(|e| e / max_error).collect();
        let avg_loss: f64 = sample_weights
            .iter()
            .zip(&losses)
            .map(|(w, l)| w * l)
            .sum();
        if avg_loss >= 0.5 {
            if trees.is_empty() {
                trees.push(tree);
                votes.push(1.0);
            }
            break;
        }
        let beta = avg_loss / (1.0 - avg_loss);
        votes.push(config.learning_rate * (1.0 / beta).ln());
        trees.push(tree);

        for (w, l) in sample_weights.iter_mut().zip(&losses) {
            *w *= beta.powf(config.learning_rate * (1.0 - l));
        }
        let total: f64 = sample_weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::Fit("sample weights degenerated".to_string()));
        }
        sample_weights.iter_mut().for_each(|w| *w /= total);
    }

    Ok(EnsembleModel::new(
        EnsembleKind::AdaBoostR2,
        trees,
        votes,
        0.0,
        x.cols(),
        seed,
    ))
}

/// Draws n samples with replacement proportionally to `weights`, writing
/// integer draw counts into `counts`.
fn weighted_bootstrap(weights: &[f64], counts: &mut [f64], seed: u64) {
    let n = weights.len();
    let mut cdf = Vec::with_capacity(n);
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cdf.push(acc);
    }
    counts.iter_mut().for_each(|c| *c = 0.0);
    let mut rng = rng_from_seed(derive_seed(seed, 0xb007));
    for _ in 0..n {
        let u: f64 = rng.gen_range(0.0..acc);
        let i = cdf.partition_point(|&c| c <= u).min(n - 1);
        counts[i] += 1.0;
    }
}
