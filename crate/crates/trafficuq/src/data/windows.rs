use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::series::{CalendarInfo, SensorSeries, STEP_SECONDS};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Axes of one dataset construction: lag window ω, horizon h, and the two
/// feature-availability flags, plus the significance level α used downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    /// Number of lagged flow readings ω fed to the model.
    pub window: usize,
    /// Forecasting horizon h, in 15-minute steps.
    pub horizon: usize,
    /// m flag: include the 4 weather columns.
    pub use_meteo: bool,
    /// c flag: include the 3 calendar columns.
    pub use_calendar: bool,
    /// Significance level α in (0, 1); confidence = 1 − α.
    pub alpha: f64,
}

impl DatasetConfig {
    pub fn new(window: usize, horizon: usize, use_meteo: bool, use_calendar: bool) -> Self {
        Self {
            window,
            horizon,
            use_meteo,
            use_calendar,
            alpha: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window ω must be >= 1".to_string()));
        }
        if self.horizon < 1 {
            return Err(Error::Config("horizon h must be >= 1".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config("alpha must be in (0, 1)".to_string()));
        }
        Ok(())
    }

    /// ω + 4·m + 3·c.
    pub fn feature_count(&self) -> usize {
        self.window
            + if self.use_meteo { 4 } else { 0 }
            + if self.use_calendar { 3 } else { 0 }
    }
}

/// Supervised design matrix and target built from one sensor series.
///
/// Row layout: lagged flows `t₀ … t₋(ω−1)` (most recent first), then the 4
/// weather columns when m=1, then the 3 calendar columns when c=1. The
/// target is the flow h steps after the most recent lag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WindowedDataset {
    pub x: Matrix,
    pub y: Vec<f64>,
    /// Timestamp of the target instant for each row.
    pub sample_timestamps: Vec<NaiveDateTime>,
    pub config: DatasetConfig,
}

impl WindowedDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Builds the supervised dataset. Rows whose lag window or target would
/// cross a gap in the underlying series are omitted.
pub fn build_windows(
    series: &SensorSeries,
    calendar: &CalendarInfo,
    config: &DatasetConfig,
) -> Result<WindowedDataset> {
    config.validate()?;
    let omega = config.window;
    let h = config.horizon;
    if series.len() < omega + h {
        return Err(Error::Data(format!(
            "series of length {} too short for ω={omega}, h={h}",
            series.len()
        )));
    }
    if config.use_meteo && series.weather.is_none() {
        return Err(Error::Config(format!(
            "sensor {}: meteo features requested but the series has no weather channels",
            series.sensor_id
        )));
    }

    let cols = config.feature_count();
    let span_seconds = ((omega - 1 + h) as i64) * STEP_SECONDS;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    let mut sample_timestamps = Vec::new();

    for t in (omega - 1)..series.len().saturating_sub(h) {
        let first = t + 1 - omega;
        let target = t + h;
        // Contiguity: constant 900 s spacing over the whole window + horizon.
        if (series.timestamps[target] - series.timestamps[first]).num_seconds() != span_seconds {
            continue;
        }
        let mut row = Vec::with_capacity(cols);
        for lag in 0..omega {
            row.push(series.flow[t - lag]);
        }
        if config.use_meteo {
            row.extend_from_slice(&series.weather.as_ref().unwrap()[t].as_array());
        }
        if config.use_calendar {
            row.extend_from_slice(&calendar.features(series.timestamps[t]));
        }
        rows.push(row);
        y.push(series.flow[target]);
        sample_timestamps.push(series.timestamps[target]);
    }

    Ok(WindowedDataset {
        x: Matrix::from_rows(&rows),
        y,
        sample_timestamps,
        config: *config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::series::SensorSeries;
    use chrono::NaiveDate;

    fn series_from_flow(flow: Vec<f64>) -> SensorSeries {
        let base = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
        SensorSeries {
            sensor_id: "s".to_string(),
            timestamps: (0..flow.len())
                .map(|k| base + chrono::Duration::seconds(k as i64 * STEP_SECONDS))
                .collect(),
            flow,
            weather: None,
            dropped_rows: 0,
        }
    }

    #[test]
    fn windows_match_hand_enumeration() {
        // flow = v0..v9, ω=5, h=2: first row (v4,v3,v2,v1,v0) → v6; 4 rows.
        let series = series_from_flow((0..10).map(f64::from).collect());
        let config = DatasetConfig::new(5, 2, false, false);
        let ds = build_windows(&series, &CalendarInfo::default(), &config).unwrap();
        assert_eq!(ds.len(), 4);
        assert_eq!(ds.x.row(0), &[4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(ds.y[0], 6.0);
        assert_eq!(ds.x.row(3), &[7.0, 6.0, 5.0, 4.0, 3.0]);
        assert_eq!(ds.y[3], 9.0);
    }

    #[test]
    fn minimal_window_on_three_samples() {
        let series = series_from_flow(vec![10.0, 20.0, 30.0]);
        let config = DatasetConfig::new(1, 1, false, false);
        let ds = build_windows(&series, &CalendarInfo::default(), &config).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!((ds.x.row(0), ds.y[0]), ([10.0].as_slice(), 20.0));
        assert_eq!((ds.x.row(1), ds.y[1]), ([20.0].as_slice(), 30.0));
    }

    #[test]
    fn column_count_follows_the_formula() {
        let config = DatasetConfig::new(5, 8, true, true);
        assert_eq!(config.feature_count(), 12);
        assert_eq!(DatasetConfig::new(1, 1, false, true).feature_count(), 4);
        assert_eq!(DatasetConfig::new(5, 1, true, false).feature_count(), 9);
    }

    #[test]
    fn rows_crossing_gaps_are_dropped() {
        let mut series = series_from_flow((0..20).map(f64::from).collect());
        // Remove sample 10: any window or target spanning it must vanish.
        series.timestamps.remove(10);
        series.flow.remove(10);
        let config = DatasetConfig::new(3, 2, false, false);
        let ds = build_windows(&series, &CalendarInfo::default(), &config).unwrap();
        let span = ((config.window - 1 + config.horizon) as i64) * STEP_SECONDS;
        // Alignment invariant: target timestamp minus oldest lag = span.
        for (row, ts) in ds.x.iter_rows().zip(&ds.sample_timestamps) {
            // Most recent lag is row[0]; its value is also its index here.
            let t_idx = row[0] as usize;
            let t_ts = series.timestamps[series.flow.iter().position(|f| *f == t_idx as f64).unwrap()];
            assert_eq!((*ts - t_ts).num_seconds(), config.horizon as i64 * STEP_SECONDS);
            let _ = span;
        }
        // 20 samples, one removed: contiguous blocks 0..=9 and 11..=19.
        // Each block of length L yields L - (ω-1+h) = L - 4 rows.
        assert_eq!(ds.len(), (10 - 4) + (9 - 4));
        // No row may use flow value 10 as a lag or target.
        for (row, y) in ds.x.iter_rows().zip(&ds.y) {
            assert!(row.iter().all(|v| *v != 10.0) && *y != 10.0);
        }
    }

    #[test]
    fn meteo_without_weather_is_a_config_error() {
        let series = series_from_flow(vec![1.0; 10]);
        let config = DatasetConfig::new(2, 1, true, false);
        assert!(matches!(
            build_windows(&series, &CalendarInfo::default(), &config).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn too_short_series_is_a_data_error() {
        let series = series_from_flow(vec![1.0, 2.0, 3.0]);
        let config = DatasetConfig::new(3, 1, false, false);
        assert!(build_windows(&series, &CalendarInfo::default(), &config).is_err());
    }

    #[test]
    fn calendar_columns_sit_after_the_lags() {
        let mut calendar = CalendarInfo::default();
        calendar.holiday_dates.insert(NaiveDate::from_ymd_opt(2019, 1, 1).unwrap());
        let series = series_from_flow((0..8).map(f64::from).collect());
        let config = DatasetConfig::new(2, 1, false, true);
        let ds = build_windows(&series, &CalendarInfo::default(), &config).unwrap();
        assert_eq!(ds.x.cols(), 5);
        let ds_holiday = build_windows(&series, &calendar, &config).unwrap();
        // 2019-01-01 is a Tuesday (1) and a holiday in this calendar.
        assert_eq!(&ds_holiday.x.row(0)[2..], &[1.0, 1.0, 0.0]);
        assert_eq!(&ds.x.row(0)[2..], &[1.0, 0.0, 0.0]);
    }
}
