//! Benchmark CLI: synthetic data generation, dataset construction, the
//! scenario-grid runner, report pivots and a coverage-drift monitor.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trafficuq::bench::{emit_report, run_benchmark, BenchConfig, RunManifest, RunOptions};
use trafficuq::data::{
    build_windows, generate_synthetic, load_csv, write_csv, CalendarInfo, DatasetConfig,
    SyntheticConfig,
};
use trafficuq::error::{Error, Result};
use trafficuq::metrics::CoverageDriftMonitor;
use trafficuq::uncertainty::PredictionInterval;

#[derive(Parser)]
#[command(
    name = "trafficuq",
    version,
    about = "Calibrated prediction intervals for traffic-flow forecasts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic sensor series as CSV.
    Generate {
        /// Key-value profile file; defaults apply when omitted.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value = "synthetic")]
        sensor: String,
        #[arg(long, default_value_t = 365)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a windowed supervised dataset from a sensor CSV and dump it
    /// as JSON.
    Build {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "sensor")]
        sensor: String,
        /// Lag window ω.
        #[arg(long, default_value_t = 5)]
        window: usize,
        /// Horizon h in 15-minute steps.
        #[arg(long, default_value_t = 1)]
        horizon: usize,
        /// Include the 4 weather columns.
        #[arg(long)]
        meteo: bool,
        /// Include the 3 calendar columns.
        #[arg(long)]
        calendar: bool,
        #[arg(long)]
        holidays: Option<PathBuf>,
        #[arg(long)]
        school_periods: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the benchmark grid described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config significance level.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// Skip per-scenario interval dumps.
        #[arg(long)]
        no_intervals: bool,
        /// Skip SVG plots.
        #[arg(long)]
        no_plots: bool,
    },
    /// Emit pivot tables and summaries from a run manifest.
    Report {
        /// Path to a manifest.json produced by `run`.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay an interval dump through the coverage-drift monitor.
    Monitor {
        /// Interval dump CSV produced by `run`.
        #[arg(long)]
        intervals: PathBuf,
        #[arg(long, default_value_t = 500)]
        window: usize,
        /// Expected miss rate; defaults to the dump's own alpha column.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 4.0)]
        kappa: f64,
    },
}

fn cmd_generate(
    profile: Option<PathBuf>,
    sensor: &str,
    days: usize,
    seed: u64,
    out: &PathBuf,
) -> Result<()> {
    let profile = match profile {
        Some(path) => SyntheticConfig::from_key_value_file(&path)?,
        None => SyntheticConfig::default(),
    };
    let series = generate_synthetic(&profile, sensor, days, seed)?;
    write_csv(&series, out)?;
    println!("wrote {} samples to {}", series.len(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_build(
    input: &PathBuf,
    sensor: &str,
    window: usize,
    horizon: usize,
    meteo: bool,
    use_calendar: bool,
    holidays: Option<PathBuf>,
    school_periods: Option<PathBuf>,
    out: &PathBuf,
) -> Result<()> {
    let series = load_csv(input, sensor)?;
    let mut calendar = CalendarInfo::default();
    if let Some(path) = holidays {
        calendar.load_holidays(&path)?;
    }
    if let Some(path) = school_periods {
        calendar.load_school_periods(&path)?;
    }
    let config = DatasetConfig {
        window,
        horizon,
        use_meteo: meteo,
        use_calendar,
        alpha: 0.1,
    };
    let dataset = build_windows(&series, &calendar, &config)?;
    let file = std::fs::File::create(out)?;
    serde_json::to_writer(std::io::BufWriter::new(file), &dataset)?;
    println!(
        "wrote {} samples x {} features to {}",
        dataset.len(),
        dataset.x.cols(),
        out.display()
    );
    Ok(())
}

fn cmd_run(
    config_path: &PathBuf,
    seed: Option<u64>,
    alpha: Option<f64>,
    out: PathBuf,
    jobs: usize,
    no_intervals: bool,
    no_plots: bool,
) -> Result<RunManifest> {
    let mut config = BenchConfig::load(config_path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(alpha) = alpha {
        config.alpha = alpha;
        config.validate()?;
    }
    let options = RunOptions {
        out_dir: out,
        jobs,
        write_intervals: !no_intervals,
        write_plots: !no_plots,
    };
    let manifest = run_benchmark(&config, &options)?;
    println!(
        "{} scenarios, {} failed, {} ms, outputs in {}",
        manifest.scenarios.len(),
        manifest.failed,
        manifest.total_runtime_ms,
        options.out_dir.display()
    );
    Ok(manifest)
}

fn cmd_report(manifest_path: &PathBuf, out: &PathBuf) -> Result<()> {
    let file = std::fs::File::open(manifest_path)?;
    let manifest: RunManifest = serde_json::from_reader(std::io::BufReader::new(file))?;
    emit_report(&manifest, out)?;
    println!("report written to {}", out.display());
    Ok(())
}

fn cmd_monitor(
    intervals: &PathBuf,
    window: usize,
    alpha: Option<f64>,
    kappa: f64,
) -> Result<()> {
    let mut reader = csv::Reader::from_path(intervals)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing `{name}` column")))
    };
    let (y_col, lo_col, hi_col, hat_col, a_col) = (
        col("y_true")?,
        col("lower")?,
        col("upper")?,
        col("y_hat")?,
        col("alpha")?,
    );
    let mut stream: Vec<(PredictionInterval, f64)> = Vec::new();
    let mut dump_alpha = None;
    for record in reader.records() {
        let record = record?;
        let get = |c: usize| -> Result<f64> {
            record
                .get(c)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Data(format!("bad numeric cell in {}", intervals.display())))
        };
        let a = get(a_col)?;
        dump_alpha.get_or_insert(a);
        stream.push((
            PredictionInterval {
                point: get(hat_col)?,
                lower: get(lo_col)?,
                upper: get(hi_col)?,
                alpha: a,
            },
            get(y_col)?,
        ));
    }
    let alpha = alpha
        .or(dump_alpha)
        .ok_or_else(|| Error::Data("empty interval dump".to_string()))?;
    let mut monitor = CoverageDriftMonitor::new(window, alpha, kappa)?;
    println!(
        "{} observations, window {window}, alarm threshold {:.4}",
        stream.len(),
        monitor.threshold()
    );
    let alarms = monitor.run(stream.iter().map(|(iv, y)| (iv, *y)));
    for alarm in &alarms {
        println!(
            "alarm at sample {}: miss rate {:.4} > {:.4}",
            alarm.window_end, alarm.miss_rate, alarm.threshold
        );
    }
    if alarms.is_empty() {
        println!("no drift alarms");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<ExitCode> = match cli.command {
        Command::Generate {
            profile,
            sensor,
            days,
            seed,
            out,
        } => cmd_generate(profile, &sensor, days, seed, &out).map(|()| ExitCode::SUCCESS),
        Command::Build {
            input,
            sensor,
            window,
            horizon,
            meteo,
            calendar,
            holidays,
            school_periods,
            out,
        } => cmd_build(
            &input,
            &sensor,
            window,
            horizon,
            meteo,
            calendar,
            holidays,
            school_periods,
            &out,
        )
        .map(|()| ExitCode::SUCCESS),
        Command::Run {
            config,
            seed,
            alpha,
            out,
            jobs,
            no_intervals,
            no_plots,
        } => cmd_run(&config, seed, alpha, out, jobs, no_intervals, no_plots).map(|manifest| {
            if manifest.failed > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }),
        Command::Report { manifest, out } => {
            cmd_report(&manifest, &out).map(|()| ExitCode::SUCCESS)
        }
        Command::Monitor {
            intervals,
            window,
            alpha,
            kappa,
        } => cmd_monitor(&intervals, window, alpha, kappa).map(|()| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}
