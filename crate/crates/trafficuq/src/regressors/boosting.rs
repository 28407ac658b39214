use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::regressors::loss::{empirical_quantile, pinball_loss, LossSpec};
use crate::regressors::tree::{fit_tree, SplitMode, TreeConfig};
use crate::regressors::{EnsembleKind, EnsembleModel};
use crate::seeding::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostingConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub loss: LossSpec,
}

impl GradientBoostingConfig {
    pub fn squared() -> Self {
        Self {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            loss: LossSpec::Squared,
        }
    }

    pub fn pinball(tau: f64) -> Self {
        Self {
            loss: LossSpec::Pinball { tau },
            ..Self::squared()
        }
    }
}

/// Stagewise gradient boosting over depth-limited CART trees.
///
/// The baseline is the train mean (squared loss) or the empirical
/// τ-quantile (pinball). Each stage grows a tree on the negative gradient
/// of the loss; for pinball loss the leaf constants are then re-fitted to
/// the τ-quantile of the residuals routed to each leaf, so a stage always
/// moves predictions a `learning_rate` fraction toward the per-leaf
/// minimizer. `n_estimators = 0` yields the constant baseline model.
pub fn fit_gradient_boosting(
    x: &Matrix,
    y: &[f64],
    config: &GradientBoostingConfig,
    seed: u64,
) -> Result<EnsembleModel> {
    config.loss.validate()?;
    if y.is_empty() {
        return Err(Error::Fit("cannot fit on an empty dataset".to_string()));
    }
    if !(config.learning_rate > 0.0) {
        return Err(Error::Config("learning_rate must be positive".to_string()));
    }
    let tree_config = TreeConfig {
        max_depth: Some(config.max_depth),
        min_samples_leaf: 1,
        split_mode: SplitMode::Best,
    };

    let init = match config.loss {
        LossSpec::Squared => y.iter().sum::<f64>() / y.len() as f64,
        LossSpec::Pinball { tau } => empirical_quantile(y, tau),
    };
    let mut current: Vec<f64> = vec![init; y.len()];
    let mut trees = Vec::with_capacity(config.n_estimators);
    let mut train_loss = Vec::with_capacity(config.n_estimators);

    for stage in 0..config.n_estimators {
        let pseudo_residuals: Vec<f64> = match config.loss {
            LossSpec::Squared => y.iter().zip(&current).map(|(yi, fi)| yi - fi).collect(),
            LossSpec::Pinball { tau } => y
                .iter()
                .zip(&current)
                .map(|(yi, fi)| if *yi < *fi { tau - 1.0 } else { tau })
                .collect(),
        };
        let mut tree = fit_tree(
            x,
            &pseudo_residuals,
            &tree_config,
            derive_seed(seed, stage as u64),
        )?;

        if let LossSpec::Pinball { tau } = config.loss {
            // Re-fit leaf constants to the τ-quantile of the residuals in
            // each leaf; the gradient tree only decides the partition.
            let mut by_leaf: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
            for i in 0..y.len() {
                by_leaf
                    .entry(tree.leaf_index(x.row(i)))
                    .or_default()
                    .push(y[i] - current[i]);
            }
            for (leaf, residuals) in by_leaf {
                tree.set_leaf_value(leaf, empirical_quantile(&residuals, tau));
            }
        }

        for (fi, row) in current.iter_mut().zip(x.iter_rows()) {
            *fi += config.learning_rate * tree.predict_row(row);
        }
        train_loss.push(mean_loss(&config.loss, y, &current));
        trees.push(tree);
    }

    let weights = vec![config.learning_rate; trees.len()];
    let mut model = EnsembleModel::new(
        EnsembleKind::GradientBoosting,
        trees,
        weights,
        init,
        x.cols(),
        seed,
    );
    model.train_loss = train_loss;
    model.loss = Some(config.loss);
    Ok(model)
}

fn mean_loss(loss: &LossSpec, y: &[f64], pred: &[f64]) -> f64 {
    let total: f64 = y
        .iter()
        .zip(pred)
        .map(|(yi, pi)| match loss {
            LossSpec::Squared => (yi - pi) * (yi - pi),
            LossSpec::Pinball { tau } => pinball_loss(*tau, *yi, *pi),
        })
        .sum();
    total / y.len() as f64
}
