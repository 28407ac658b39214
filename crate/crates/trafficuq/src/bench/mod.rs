//! Configuration-driven benchmark: scenario grid enumeration, deterministic
//! execution, metric reports and SVG plots.

pub mod config;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod svg;

pub use config::{BenchConfig, DataSource};
pub use report::emit_report;
pub use runner::{run_benchmark, RunManifest, RunOptions, ScenarioRecord};
pub use scenario::{enumerate_scenarios, is_applicable, ModelKind, Scenario, UqKind};
