use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::config::{BenchConfig, DataSource};
use crate::bench::scenario::{enumerate_scenarios, ModelKind, Scenario, UqKind};
use crate::bench::svg;
use crate::data::{
    build_windows, fit_standardizer, generate_synthetic, load_csv, stratified_monthly_split,
    CalendarInfo, DatasetConfig, SensorSeries, Standardizer,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::calibration::{calibration_curve, default_confidence_grid, CalibrationCurve};
use crate::metrics::{self, miscalibration_area, MetricReport, RMIL_FLOOR};
use crate::neural::{fit_mlp, MLPConfig, OutputHead};
use crate::regressors::{
    fit_adaboost_r2, fit_extra_trees, fit_gradient_boosting, fit_random_forest, AdaBoostConfig,
    EnsembleModel, ForestConfig, GradientBoostingConfig,
};
use crate::seeding::derive_seed;
use crate::uncertainty::{conformal_calibrate, PointModel, PredictionInterval, UqModel};

/// Output controls for one benchmark run.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    pub write_intervals: bool,
    pub write_plots: bool,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            jobs: 0,
            write_intervals: true,
            write_plots: true,
        }
    }
}

/// Per-scenario entry of the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario: Scenario,
    pub tag: String,
    /// Present on success.
    pub metrics: Option<MetricReport>,
    /// Present on failure.
    pub error: Option<String>,
    pub quantile_crossings: usize,
    /// Wall-clock time; informational only, not part of the deterministic
    /// metric outputs.
    pub runtime_ms: u64,
}

/// Summary of one benchmark run, written as `manifest.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub alpha: f64,
    pub scenarios: Vec<ScenarioRecord>,
    pub failed: usize,
    pub total_runtime_ms: u64,
}

/// Everything one scenario produces before serialization.
struct ScenarioOutcome {
    metrics: MetricReport,
    crossings: usize,
    timestamps: Vec<NaiveDateTime>,
    y_true: Vec<f64>,
    intervals: Vec<PredictionInterval>,
    curve: Option<CalibrationCurve>,
}

/// Runs the full scenario grid and writes `metrics.csv`, `manifest.json`,
/// per-scenario interval dumps and SVG plots under `options.out_dir`.
///
/// Scenario failures are recorded in the manifest and do not abort the
/// run. Results are merged in enumeration order, so output files are
/// identical regardless of `options.jobs`.
pub fn run_benchmark(config: &BenchConfig, options: &RunOptions) -> Result<RunManifest> {
    let started = Instant::now();
    let scenarios = enumerate_scenarios(config)?;

    let mut calendar = CalendarInfo::default();
    if let Some(path) = &config.holidays_file {
        calendar.load_holidays(path)?;
    }
    if let Some(path) = &config.school_periods_file {
        calendar.load_school_periods(path)?;
    }

    let mut data: BTreeMap<String, SensorSeries> = BTreeMap::new();
    for (idx, sensor) in config.sensors.iter().enumerate() {
        let series = match &config.data {
            DataSource::Synthetic { days, profile } => generate_synthetic(
                profile,
                sensor,
                *days,
                derive_seed(config.seed, 0xda7a_0000 + idx as u64),
            )?,
            DataSource::Csv { dir } => load_csv(&dir.join(format!("{sensor}.csv")), sensor)?,
        };
        data.insert(sensor.clone(), series);
    }

    let execute = || -> Vec<(std::result::Result<ScenarioOutcome, String>, u64)> {
        scenarios
            .par_iter()
            .map(|scenario| {
                let t0 = Instant::now();
                let outcome = run_scenario(scenario, &data[&scenario.sensor_id], &calendar, config)
                    .map_err(|e| e.to_string());
                (outcome, t0.elapsed().as_millis() as u64)
            })
            .collect()
    };
    let results = if options.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(options.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(execute)
    } else {
        execute()
    };

    std::fs::create_dir_all(&options.out_dir)?;
    let intervals_dir = options.out_dir.join("intervals");
    let plots_dir = options.out_dir.join("plots");
    if options.write_intervals {
        std::fs::create_dir_all(&intervals_dir)?;
    }
    if options.write_plots {
        std::fs::create_dir_all(&plots_dir)?;
    }

    let mut records = Vec::with_capacity(scenarios.len());
    let mut metrics_writer = csv::Writer::from_path(options.out_dir.join("metrics.csv"))?;
    metrics_writer.write_record([
        "scenario_id",
        "tag",
        "sensor",
        "window",
        "horizon",
        "meteo",
        "calendar",
        "model",
        "uq",
        "alpha",
        "t",
        "r2",
        "mil",
        "icp",
        "rmil",
        "miscalibration_area",
        "quantile_crossings",
    ])?;
    let fmt = |v: f64| format!("{v:.12e}");
    let fmt_opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();

    let mut icp_by_method: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (scenario, (outcome, runtime_ms)) in scenarios.iter().zip(results) {
        let tag = scenario.tag();
        let method = format!("{}-{}", scenario.uq.label(), scenario.model.label());
        match outcome {
            Ok(outcome) => {
                let m = &outcome.metrics;
                metrics_writer.write_record([
                    scenario.id.to_string(),
                    tag.clone(),
                    scenario.sensor_id.clone(),
                    scenario.window.to_string(),
                    scenario.horizon.to_string(),
                    (scenario.use_meteo as u8).to_string(),
                    (scenario.use_calendar as u8).to_string(),
                    scenario.model.label().to_string(),
                    scenario.uq.label().to_string(),
                    fmt(scenario.alpha),
                    m.t.to_string(),
                    fmt_opt(m.r2),
                    fmt(m.mil),
                    fmt(m.icp),
                    fmt_opt(m.rmil),
                    fmt_opt(m.miscalibration_area),
                    outcome.crossings.to_string(),
                ])?;
                icp_by_method.entry(method.clone()).or_default().push(m.icp);

                if options.write_intervals {
                    write_interval_dump(
                        &intervals_dir.join(format!("{:04}_{tag}.csv", scenario.id)),
                        scenario,
                        &method,
                        &outcome,
                    )?;
                }
                if options.write_plots {
                    write_scenario_plots(&plots_dir, scenario, &tag, &method, &outcome)?;
                }
                records.push(ScenarioRecord {
                    scenario: scenario.clone(),
                    tag,
                    metrics: Some(outcome.metrics),
                    error: None,
                    quantile_crossings: outcome.crossings,
                    runtime_ms,
                });
            }
            Err(message) => {
                records.push(ScenarioRecord {
                    scenario: scenario.clone(),
                    tag,
                    metrics: None,
                    error: Some(message),
                    quantile_crossings: 0,
                    runtime_ms,
                });
            }
        }
    }
    metrics_writer.flush()?;

    if options.write_plots && !icp_by_method.is_empty() {
        let groups: Vec<(String, Vec<f64>)> = icp_by_method.into_iter().collect();
        std::fs::write(
            plots_dir.join("icp_by_method.svg"),
            svg::box_plot("ICP by method", "ICP", &groups),
        )?;
    }

    let failed = records.iter().filter(|r| r.error.is_some()).count();
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: config.digest(),
        seed: config.seed,
        alpha: config.alpha,
        scenarios: records,
        failed,
        total_runtime_ms: started.elapsed().as_millis() as u64,
    };
    let file = std::fs::File::create(options.out_dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &manifest)?;
    Ok(manifest)
}

fn write_interval_dump(
    path: &std::path::Path,
    scenario: &Scenario,
    method: &str,
    outcome: &ScenarioOutcome,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "timestamp",
        "y_true",
        "y_hat",
        "lower",
        "upper",
        "alpha",
        "method",
        "scenario_id",
    ])?;
    for ((ts, y), iv) in outcome
        .timestamps
        .iter()
        .zip(&outcome.y_true)
        .zip(&outcome.intervals)
    {
        w.write_record([
            ts.format("%Y-%m-%dT%H:%M:%S").to_string(),
            format!("{y:.12e}"),
            format!("{:.12e}", iv.point),
            format!("{:.12e}", iv.lower),
            format!("{:.12e}", iv.upper),
            format!("{:.12e}", iv.alpha),
            method.to_string(),
            scenario.id.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_scenario_plots(
    plots_dir: &std::path::Path,
    scenario: &Scenario,
    tag: &str,
    method: &str,
    outcome: &ScenarioOutcome,
) -> Result<()> {
    // One day of test intervals as a band chart.
    let n = outcome.intervals.len().min(96);
    let y_hat: Vec<f64> = outcome.intervals[..n].iter().map(|iv| iv.point).collect();
    let lower: Vec<f64> = outcome.intervals[..n].iter().map(|iv| iv.lower).collect();
    let upper: Vec<f64> = outcome.intervals[..n].iter().map(|iv| iv.upper).collect();
    std::fs::write(
        plots_dir.join(format!("band_{:04}_{tag}.svg", scenario.id)),
        svg::band_chart(
            &format!("{method} intervals, {tag}"),
            &outcome.y_true[..n],
            &y_hat,
            &lower,
            &upper,
        ),
    )?;
    if let Some(curve) = &outcome.curve {
        std::fs::write(
            plots_dir.join(format!("calibration_{:04}_{tag}.svg", scenario.id)),
            svg::calibration_chart(
                &format!("{method} calibration, {tag}"),
                &curve.confidence,
                &curve.coverage,
            ),
        )?;
    }
    Ok(())
}

/// Builds, splits, fits, calibrates and evaluates one scenario.
fn run_scenario(
    scenario: &Scenario,
    series: &SensorSeries,
    calendar: &CalendarInfo,
    config: &BenchConfig,
) -> Result<ScenarioOutcome> {
    let dataset_config = DatasetConfig {
        window: scenario.window,
        horizon: scenario.horizon,
        use_meteo: scenario.use_meteo,
        use_calendar: scenario.use_calendar,
        alpha: scenario.alpha,
    };
    let dataset = build_windows(series, calendar, &dataset_config)?;
    let splits = stratified_monthly_split(&dataset)?;
    // Leakage guard: every row lives in exactly one partition, and only
    // train/calibration indices are handed to fitting code below.
    splits.assert_disjoint();

    let scaler = fit_standardizer(&dataset.x, &dataset.y, &splits.train);
    let x = scaler.transform_x(&dataset.x);

    let model = fit_uq_model(scenario, config, &x, &dataset.y, &splits, &scaler)?;

    let y_test: Vec<f64> = splits.test.iter().map(|&i| dataset.y[i]).collect();
    let timestamps: Vec<NaiveDateTime> = splits
        .test
        .iter()
        .map(|&i| dataset.sample_timestamps[i])
        .collect();
    let mut intervals = Vec::with_capacity(splits.test.len());
    for &i in &splits.test {
        intervals.push(model.interval(x.row(i), i as u64, scenario.alpha)?);
    }
    let y_hat: Vec<f64> = intervals.iter().map(|iv| iv.point).collect();

    let (area, curve) = if model.supports_arbitrary_alpha() {
        let grid = default_confidence_grid();
        let alphas: Vec<f64> = grid.iter().map(|c| 1.0 - c).collect();
        let mut per_level: Vec<Vec<PredictionInterval>> =
            vec![Vec::with_capacity(splits.test.len()); alphas.len()];
        for &i in &splits.test {
            for (k, iv) in model
                .interval_grid(x.row(i), i as u64, &alphas)?
                .into_iter()
                .enumerate()
            {
                per_level[k].push(iv);
            }
        }
        let mut level = 0;
        let curve = calibration_curve(&grid, &y_test, |_| {
            let out = std::mem::take(&mut per_level[level]);
            level += 1;
            Ok(out)
        })?;
        (Some(miscalibration_area(&curve)), Some(curve))
    } else {
        (None, None)
    };

    let metrics = MetricReport {
        r2: metrics::r_squared(&y_test, &y_hat)?,
        mil: metrics::mil(&intervals)?,
        icp: metrics::icp(&intervals, &y_test)?,
        rmil: Some(metrics::rmil(&intervals, &y_test, &y_hat, RMIL_FLOOR)?),
        miscalibration_area: area,
        t: y_test.len(),
    };
    Ok(ScenarioOutcome {
        metrics,
        crossings: model.crossing_count(),
        timestamps,
        y_true: y_test,
        intervals,
        curve,
    })
}

fn forest_config(config: &BenchConfig, base: ForestConfig) -> ForestConfig {
    ForestConfig {
        n_estimators: config.n_estimators,
        ..base
    }
}

fn fit_tree_ensemble(
    kind: ModelKind,
    config: &BenchConfig,
    x: &Matrix,
    y: &[f64],
    seed: u64,
) -> Result<EnsembleModel> {
    match kind {
        ModelKind::Rfr => fit_random_forest(
            x,
            y,
            &forest_config(config, ForestConfig::random_forest()),
            seed,
        ),
        ModelKind::Etr => {
            fit_extra_trees(x, y, &forest_config(config, ForestConfig::extra_trees()), seed)
        }
        ModelKind::Gbr => fit_gradient_boosting(
            x,
            y,
            &GradientBoostingConfig {
                n_estimators: config.n_estimators,
                ..GradientBoostingConfig::squared()
            },
            seed,
        ),
        ModelKind::Abr => fit_adaboost_r2(
            x,
            y,
            &AdaBoostConfig {
                n_estimators: config.n_estimators,
                ..AdaBoostConfig::default()
            },
            seed,
        ),
        ModelKind::Mlp => Err(Error::Config(
            "MLP is not a tree ensemble".to_string(),
        )),
    }
}

fn mlp_config(config: &BenchConfig, head: OutputHead, seed: u64) -> MLPConfig {
    MLPConfig {
        epochs: config.epochs,
        learning_rate: config.mlp_learning_rate,
        dropout_rate: config.dropout_rate,
        output_head: head,
        seed,
        ..MLPConfig::default()
    }
}

/// Fits the scenario's (model, technique) pair on the train partition and,
/// for conformal prediction, computes nonconformity scores on the
/// calibration partition.
fn fit_uq_model(
    scenario: &Scenario,
    config: &BenchConfig,
    x: &Matrix,
    y: &[f64],
    splits: &crate::data::DatasetSplits,
    scaler: &Standardizer,
) -> Result<UqModel> {
    let x_train = x.select_rows(&splits.train);
    let y_train: Vec<f64> = splits.train.iter().map(|&i| y[i]).collect();
    let seed = scenario.seed;

    match scenario.uq {
        UqKind::Conformal => {
            let point_model = match scenario.model {
                ModelKind::Mlp => {
                    let mlp = fit_mlp(
                        &x_train,
                        &scaler.transform_y(&y_train),
                        &mlp_config(config, OutputHead::Scalar, derive_seed(seed, 0x171f)),
                    )?;
                    PointModel::Mlp(mlp, scaler.clone())
                }
                kind => PointModel::Ensemble(fit_tree_ensemble(kind, config, &x_train, &y_train, seed)?),
            };
            let mut cal_preds = Vec::with_capacity(splits.calibration.len());
            let mut cal_y = Vec::with_capacity(splits.calibration.len());
            for &i in &splits.calibration {
                cal_preds.push(point_model.predict_row(x.row(i))?);
                cal_y.push(y[i]);
            }
            let scores = conformal_calibrate(&cal_preds, &cal_y)?;
            Ok(UqModel::Conformal {
                model: point_model,
                scores,
            })
        }
        UqKind::Ensemble => Ok(UqModel::Ensemble {
            model: fit_tree_ensemble(scenario.model, config, &x_train, &y_train, seed)?,
        }),
        UqKind::Quantile => {
            if scenario.model != ModelKind::Gbr {
                return Err(Error::Config(format!(
                    "quantile intervals require GBR, got {}",
                    scenario.model.label()
                )));
            }
            let fit_tau = |tau: f64, stream: u64| {
                fit_gradient_boosting(
                    &x_train,
                    &y_train,
                    &GradientBoostingConfig {
                        n_estimators: config.n_estimators,
                        ..GradientBoostingConfig::pinball(tau)
                    },
                    derive_seed(seed, stream),
                )
            };
            Ok(UqModel::Quantile {
                lower: fit_tau(scenario.alpha / 2.0, 1)?,
                median: fit_tau(0.5, 2)?,
                upper: fit_tau(1.0 - scenario.alpha / 2.0, 3)?,
                alpha: scenario.alpha,
                crossings: std::sync::atomic::AtomicUsize::new(0),
            })
        }
        UqKind::McDropout => {
            if scenario.model != ModelKind::Mlp {
                return Err(Error::Config(format!(
                    "MC dropout requires MLP, got {}",
                    scenario.model.label()
                )));
            }
            let mlp = fit_mlp(
                &x_train,
                &scaler.transform_y(&y_train),
                &mlp_config(config, OutputHead::Scalar, derive_seed(seed, 0x171f)),
            )?;
            Ok(UqModel::McDropout {
                model: mlp,
                scaler: scaler.clone(),
                passes: config.mc_passes,
                seed: derive_seed(seed, 0xd409),
            })
        }
        UqKind::Heteroscedastic => {
            if scenario.model != ModelKind::Mlp {
                return Err(Error::Config(format!(
                    "heteroscedastic intervals require MLP, got {}",
                    scenario.model.label()
                )));
            }
            let mlp = fit_mlp(
                &x_train,
                &scaler.transform_y(&y_train),
                &mlp_config(config, OutputHead::Gaussian, derive_seed(seed, 0x171f)),
            )?;
            Ok(UqModel::Heteroscedastic {
                model: mlp,
                scaler: scaler.clone(),
            })
        }
    }
}
