//! Self-contained reference regressors behind one point-prediction
//! interface: CART trees, random forest, extra trees, gradient boosting
//! with squared or pinball loss, and AdaBoost.R2.

pub mod adaboost;
pub mod boosting;
pub mod forest;
pub mod loss;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
pub use adaboost::{fit_adaboost_r2, AdaBoostConfig};
pub use boosting::{fit_gradient_boosting, GradientBoostingConfig};
pub use forest::{fit_extra_trees, fit_random_forest, ForestConfig};
pub use loss::{pinball_loss, LossSpec};
pub use tree::{fit_tree, RegressionTree, SplitMode, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnsembleKind {
    RandomForest,
    ExtraTrees,
    AdaBoostR2,
    GradientBoosting,
}

/// A fitted tree ensemble. Immutable after fitting and safe to share
/// across threads for prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub kind: EnsembleKind,
    trees: Vec<RegressionTree>,
    /// Per-estimator combination weights: AdaBoost log(1/β) votes,
    /// boosting stage scales (the learning rate), 1.0 for forests.
    weights: Vec<f64>,
    /// Baseline constant for boosting; 0 otherwise.
    init: f64,
    n_features: usize,
    pub seed: u64,
    /// Per-stage training loss, recorded by gradient boosting.
    pub train_loss: Vec<f64>,
    pub loss: Option<LossSpec>,
}

impl EnsembleModel {
    pub(crate) fn new(
        kind: EnsembleKind,
        trees: Vec<RegressionTree>,
        weights: Vec<f64>,
        init: f64,
        n_features: usize,
        seed: u64,
    ) -> Self {
        debug_assert_eq!(trees.len(), weights.len());
        Self {
            kind,
            trees,
            weights,
            init,
            n_features,
            seed,
            train_loss: Vec::new(),
            loss: None,
        }
    }

    pub fn n_estimators(&self) -> usize {
        self.trees.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn check_row(&self, row: &[f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Shape(format!(
                "model fitted on {} features, got {}",
                self.n_features(),
                row.len()
            )));
        }
        Ok(())
    }

    /// Point forecast for one query row.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64> {
        self.check_row(row)?;
        Ok(match self.kind {
            EnsembleKind::RandomForest | EnsembleKind::ExtraTrees => {
                let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
                sum / self.trees.len() as f64
            }
            EnsembleKind::AdaBoostR2 => {
                let preds: Vec<f64> = self.trees.iter().map(|t| t.predict_row(row)).collect();
                loss::weighted_quantile(&preds, &self.weights, 0.5)
            }
            EnsembleKind::GradientBoosting => {
                self.init
                    + self
                        .trees
                        .iter()
                        .zip(&self.weights)
                        .map(|(t, w)| w * t.predict_row(row))
                        .sum::<f64>()
            }
        })
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<f64>> {
        x.iter_rows().map(|r| self.predict_row(r)).collect()
    }

    /// Raw per-estimator predictions for one query; length equals the
    /// estimator count.
    pub fn predict_per_estimator(&self, row: &[f64]) -> Result<Vec<f64>> {
        self.check_row(row)?;
        Ok(self.trees.iter().map(|t| t.predict_row(row)).collect())
    }

    pub fn estimator_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn init_value(&self) -> f64 {
        self.init
    }

    /// Writes the model as a self-describing JSON dump.
    pub fn save_json(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}
