use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::regressors::tree::{fit_tree_weighted, SplitMode, TreeConfig};
use crate::regressors::{EnsembleKind, EnsembleModel};
use crate::seeding::{derive_seed, rng_from_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    /// Bootstrap-resample each tree's training set. Off for extra trees;
    /// can be turned off for random forests in degenerate test setups.
    pub bootstrap: bool,
    pub tree: TreeConfig,
}

impl ForestConfig {
    pub fn random_forest() -> Self {
        Self {
            n_estimators: 100,
            bootstrap: true,
            tree: TreeConfig::default(),
        }
    }

    pub fn extra_trees() -> Self {
        Self {
            n_estimators: 100,
            bootstrap: false,
            tree: TreeConfig {
                split_mode: SplitMode::RandomThreshold,
                ..TreeConfig::default()
            },
        }
    }
}

fn fit_forest(
    x: &Matrix,
    y: &[f64],
    config: &ForestConfig,
    kind: EnsembleKind,
    split_mode: SplitMode,
    seed: u64,
) -> Result<EnsembleModel> {
    if config.n_estimators < 1 {
        return Err(Error::Config("n_estimators must be >= 1".to_string()));
    }
    let tree_config = TreeConfig {
        split_mode,
        ..config.tree
    };
    let n = y.len();
    let mut counts = vec![1.0f64; n];
    let mut trees = Vec::with_capacity(config.n_estimators);
    for k in 0..config.n_estimators {
        let tree_seed = derive_seed(seed, k as u64);
        if config.bootstrap {
            counts.iter_mut().for_each(|c| *c = 0.0);
            let mut rng = rng_from_seed(derive_seed(tree_seed, u64::MAX));
            for _ in 0..n {
                counts[rng.gen_range(0..n)] += 1.0;
            }
        }
        trees.push(fit_tree_weighted(x, y, &counts, &tree_config, tree_seed)?);
    }
    let weights = vec![1.0; trees.len()];
    Ok(EnsembleModel::new(kind, trees, weights, 0.0, x.cols(), seed))
}

/// Random forest: bootstrap-resampled greedy CART trees, prediction is the
/// unweighted mean over estimators. Deterministic per seed.
pub fn fit_random_forest(
    x: &Matrix,
    y: &[f64],
    config: &ForestConfig,
    seed: u64,
) -> Result<EnsembleModel> {
    fit_forest(x, y, config, EnsembleKind::RandomForest, SplitMode::Best, seed)
}

/// Extra trees: no bootstrap, uniform-random thresholds. Higher
/// per-estimator spread than a random forest on the same data.
pub fn fit_extra_trees(
    x: &Matrix,
    y: &[f64],
    config: &ForestConfig,
    seed: u64,
) -> Result<EnsembleModel> {
    fit_forest(
        x,
        y,
        config,
        EnsembleKind::ExtraTrees,
        SplitMode::RandomThreshold,
        seed,
    )
}
