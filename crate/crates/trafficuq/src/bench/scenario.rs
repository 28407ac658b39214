use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forecasting model families of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Random forest regressor.
    Rfr,
    /// Extra trees regressor.
    Etr,
    /// Gradient boosting regressor.
    Gbr,
    /// AdaBoost.R2 regressor.
    Abr,
    /// Multilayer perceptron.
    Mlp,
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::Rfr => "RFR",
            ModelKind::Etr => "ETR",
            ModelKind::Gbr => "GBR",
            ModelKind::Abr => "ABR",
            ModelKind::Mlp => "MLP",
        }
    }
}

/// Uncertainty-estimation techniques of the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UqKind {
    Conformal,
    Ensemble,
    Quantile,
    McDropout,
    Heteroscedastic,
}

impl UqKind {
    pub fn label(&self) -> &'static str {
        match self {
            UqKind::Conformal => "CP",
            UqKind::Ensemble => "E",
            UqKind::Quantile => "Q",
            UqKind::McDropout => "MCD",
            UqKind::Heteroscedastic => "HR",
        }
    }
}

/// Which (model, technique) combinations are legal.
pub fn is_applicable(model: ModelKind, uq: UqKind) -> bool {
    use ModelKind::*;
    use UqKind::*;
    match uq {
        Conformal => true,
        Ensemble => matches!(model, Rfr | Etr | Abr),
        Quantile => matches!(model, Gbr),
        McDropout | Heteroscedastic => matches!(model, Mlp),
    }
}

/// One cell of the benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: usize,
    pub sensor_id: String,
    pub window: usize,
    pub horizon: usize,
    pub use_meteo: bool,
    pub use_calendar: bool,
    pub model: ModelKind,
    pub uq: UqKind,
    pub alpha: f64,
    pub seed: u64,
}

impl Scenario {
    /// Stable human-readable tag, e.g. `4458_w5_h1_m1_c1_CP-RFR`.
    pub fn tag(&self) -> String {
        format!(
            "{}_w{}_h{}_m{}_c{}_{}-{}",
            self.sensor_id,
            self.window,
            self.horizon,
            self.use_meteo as u8,
            self.use_calendar as u8,
            self.uq.label(),
            self.model.label()
        )
    }
}

/// Cartesian product of the configured axes, filtered by the applicability
/// matrix. Explicitly requested illegal (model, uq) pairs are an error;
/// pairs that are merely skipped by the product are not.
pub fn enumerate_scenarios(config: &crate::bench::BenchConfig) -> Result<Vec<Scenario>> {
    config.validate()?;
    let mut combos: Vec<(ModelKind, UqKind)> = Vec::new();
    for &model in &config.models {
        for &uq in &config.uq_methods {
            if is_applicable(model, uq) && !combos.contains(&(model, uq)) {
                combos.push((model, uq));
            }
        }
    }
    for (model, uq) in config.explicit_pairs() {
        if !is_applicable(model, uq) {
            return Err(Error::Config(format!(
                "technique {} is not applicable to model {}",
                uq.label(),
                model.label()
            )));
        }
        if !combos.contains(&(model, uq)) {
            combos.push((model, uq));
        }
    }
    let mut scenarios = Vec::new();
    let mut id = 0;
    for sensor in &config.sensors {
        for &window in &config.omegas {
            for &use_meteo in &config.meteo {
                for &use_calendar in &config.calendar {
                    for &horizon in &config.horizons {
                        for &(model, uq) in &combos {
                            scenarios.push(Scenario {
                                id,
                                sensor_id: sensor.clone(),
                                window,
                                horizon,
                                use_meteo,
                                use_calendar,
                                model,
                                uq,
                                alpha: config.alpha,
                                seed: crate::seeding::derive_seed(config.seed, id as u64),
                            });
                            id += 1;
                        }
                    }
                }
            }
        }
    }
    if scenarios.is_empty() {
        return Err(Error::Config(
            "the configured axes produce no scenarios".to_string(),
        ));
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{BenchConfig, DataSource};

    fn base_config() -> BenchConfig {
        BenchConfig {
            sensors: (0..10).map(|k| format!("S{k:02}")).collect(),
            omegas: vec![1, 5],
            horizons: vec![1, 2, 4, 8],
            meteo: vec![false, true],
            calendar: vec![false, true],
            models: vec![ModelKind::Rfr],
            uq_methods: vec![UqKind::Conformal],
            pairs: Vec::new(),
            alpha: 0.1,
            seed: 7,
            data: DataSource::Synthetic { days: 30, profile: Default::default() },
            holidays_file: None,
            school_periods_file: None,
            n_estimators: 10,
            mc_passes: 20,
            epochs: 2,
            dropout_rate: 0.2,
            mlp_learning_rate: 1e-3,
        }
    }

    #[test]
    fn applicability_matrix_is_exact() {
        use ModelKind::*;
        use UqKind::*;
        let models = [Rfr, Etr, Gbr, Abr, Mlp];
        for model in models {
            assert!(is_applicable(model, Conformal));
        }
        let legal: &[(ModelKind, UqKind)] = &[
            (Rfr, Ensemble),
            (Etr, Ensemble),
            (Abr, Ensemble),
            (Gbr, Quantile),
            (Mlp, McDropout),
            (Mlp, Heteroscedastic),
        ];
        for model in models {
            for uq in [Ensemble, Quantile, McDropout, Heteroscedastic] {
                assert_eq!(
                    is_applicable(model, uq),
                    legal.contains(&(model, uq)),
                    "{model:?}/{uq:?}"
                );
            }
        }
    }

    #[test]
    fn full_grid_has_320_cells_for_one_combo() {
        let scenarios = enumerate_scenarios(&base_config()).unwrap();
        assert_eq!(scenarios.len(), 10 * 2 * 4 * 2 * 2);
        // Ids are sequential and seeds are derived per id.
        for (k, s) in scenarios.iter().enumerate() {
            assert_eq!(s.id, k);
            assert_eq!(s.seed, crate::seeding::derive_seed(7, k as u64));
        }
    }

    #[test]
    fn single_axis_config_yields_one_scenario() {
        let config = BenchConfig {
            sensors: vec!["A".to_string()],
            omegas: vec![5],
            horizons: vec![1],
            meteo: vec![false],
            calendar: vec![false],
            ..base_config()
        };
        let scenarios = enumerate_scenarios(&config).unwrap();
        assert_eq!(scenarios.len(), 1);
        assert_eq!(scenarios[0].tag(), "A_w5_h1_m0_c0_CP-RFR");
    }

    #[test]
    fn product_skips_illegal_pairs_silently() {
        let config = BenchConfig {
            models: vec![ModelKind::Rfr, ModelKind::Gbr, ModelKind::Mlp],
            uq_methods: vec![UqKind::Quantile, UqKind::McDropout],
            ..base_config()
        };
        let scenarios = enumerate_scenarios(&config).unwrap();
        // Only Q-GBR and MCD-MLP are legal out of the 6 product pairs.
        let combos: std::collections::HashSet<(ModelKind, UqKind)> =
            scenarios.iter().map(|s| (s.model, s.uq)).collect();
        assert_eq!(combos.len(), 2);
        assert!(combos.contains(&(ModelKind::Gbr, UqKind::Quantile)));
        assert!(combos.contains(&(ModelKind::Mlp, UqKind::McDropout)));
    }

    #[test]
    fn explicit_illegal_pair_is_a_config_error() {
        let config = BenchConfig {
            pairs: vec![(ModelKind::Rfr, UqKind::Quantile)],
            ..base_config()
        };
        let err = enumerate_scenarios(&config).unwrap_err().to_string();
        assert!(err.contains("Q") && err.contains("RFR"), "{err}");
    }

    #[test]
    fn no_legal_combination_is_an_error() {
        let config = BenchConfig {
            models: vec![ModelKind::Rfr],
            uq_methods: vec![UqKind::Quantile],
            ..base_config()
        };
        assert!(enumerate_scenarios(&config).is_err());
    }
}
