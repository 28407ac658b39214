//! Ingestion and supervised dataset construction: CSV/synthetic sensor
//! series, lag windowing, month-stratified splits and standardization.

pub mod series;
pub mod split;
pub mod standardize;
pub mod synthetic;
pub mod windows;

pub use series::{load_csv, write_csv, CalendarInfo, SensorSeries, WeatherSample};
pub use split::{stratified_monthly_split, DatasetSplits};
pub use standardize::{fit_standardizer, Standardizer};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use windows::{build_windows, DatasetConfig, WindowedDataset};
