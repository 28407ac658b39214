use std::collections::BTreeSet;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling period of the flow readings, in seconds.
pub const STEP_SECONDS: i64 = 900;
/// Readings per day at 15-minute spacing.
pub const SAMPLES_PER_DAY: usize = 96;

/// Per-timestamp weather channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherSample {
    /// Temperature in °C.
    pub temperature: f64,
    /// Cloud cover fraction in [0, 1].
    pub cloud_cover: f64,
    /// Relative humidity fraction in [0, 1].
    pub humidity: f64,
    /// Precipitation intensity in mm/h.
    pub precipitation: f64,
}

impl WeatherSample {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.temperature,
            self.cloud_cover,
            self.humidity,
            self.precipitation,
        ]
    }
}

/// Timestamped 15-minute vehicle-flow readings for one sensor.
///
/// Timestamps are strictly increasing; consecutive timestamps either differ
/// by exactly [`STEP_SECONDS`] (same contiguous block) or by more (a gap).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensorSeries {
    pub sensor_id: String,
    pub timestamps: Vec<NaiveDateTime>,
    /// Vehicle flow in vehicles/hour, non-negative.
    pub flow: Vec<f64>,
    pub weather: Option<Vec<WeatherSample>>,
    /// Rows discarded during ingestion because of unparsable values.
    pub dropped_rows: usize,
}

impl SensorSeries {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Checks the structural invariants: ordering, step spacing within
    /// blocks, non-negative flow, matching weather length.
    pub fn validate(&self) -> Result<()> {
        if self.flow.len() != self.timestamps.len() {
            return Err(Error::Data(format!(
                "sensor {}: {} timestamps but {} flow values",
                self.sensor_id,
                self.timestamps.len(),
                self.flow.len()
            )));
        }
        for pair in self.timestamps.windows(2) {
            let dt = (pair[1] - pair[0]).num_seconds();
            if dt <= 0 {
                return Err(Error::Data(format!(
                    "sensor {}: non-increasing timestamp {}",
                    self.sensor_id, pair[1]
                )));
            }
            if dt % STEP_SECONDS != 0 {
                return Err(Error::Data(format!(
                    "sensor {}: timestamp {} is off the {}s grid",
                    self.sensor_id, pair[1], STEP_SECONDS
                )));
            }
        }
        if let Some(f) = self.flow.iter().find(|f| !f.is_finite() || **f < 0.0) {
            return Err(Error::Data(format!(
                "sensor {}: invalid flow value {f}",
                self.sensor_id
            )));
        }
        if let Some(w) = &self.weather {
            if w.len() != self.timestamps.len() {
                return Err(Error::Data(format!(
                    "sensor {}: weather length {} != series length {}",
                    self.sensor_id,
                    w.len(),
                    self.timestamps.len()
                )));
            }
        }
        Ok(())
    }
}

/// Holiday dates and school periods used to derive calendar features.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CalendarInfo {
    pub holiday_dates: BTreeSet<NaiveDate>,
    /// Inclusive date ranges during which school is in session.
    pub school_periods: Vec<(NaiveDate, NaiveDate)>,
}

impl CalendarInfo {
    pub fn is_holiday(&self, date: NaiveDate) -> bool {
        self.holiday_dates.contains(&date)
    }

    pub fn is_school_period(&self, date: NaiveDate) -> bool {
        self.school_periods
            .iter()
            .any(|(start, end)| *start <= date && date <= *end)
    }

    /// Calendar features for one timestamp: (day_of_week 0-6 with Monday=0,
    /// is_holiday, is_school_period).
    pub fn features(&self, ts: NaiveDateTime) -> [f64; 3] {
        let date = ts.date();
        [
            date.weekday().num_days_from_monday() as f64,
            if self.is_holiday(date) { 1.0 } else { 0.0 },
            if self.is_school_period(date) { 1.0 } else { 0.0 },
        ]
    }

    /// Reads a holiday file: one ISO date per line, blank lines ignored.
    pub fn load_holidays(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let date = NaiveDate::parse_from_str(line, "%Y-%m-%d").map_err(|e| {
                Error::Schema(format!(
                    "{}:{}: bad holiday date {line:?}: {e}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            self.holiday_dates.insert(date);
        }
        Ok(())
    }

    /// Reads a school-period file: `start,end` ISO date pairs per line.
    pub fn load_school_periods(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once(',').ok_or_else(|| {
                Error::Schema(format!(
                    "{}:{}: expected `start,end`, got {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let parse = |s: &str| {
                NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| {
                    Error::Schema(format!(
                        "{}:{}: bad date {s:?}: {e}",
                        path.display(),
                        lineno + 1
                    ))
                })
            };
            let (start, end) = (parse(a)?, parse(b)?);
            if end < start {
                return Err(Error::Schema(format!(
                    "{}:{}: period ends before it starts",
                    path.display(),
                    lineno + 1
                )));
            }
            self.school_periods.push((start, end));
        }
        Ok(())
    }
}

const TS_FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"];

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TS_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s.trim(), f).ok())
}

/// Loads a sensor CSV with header
/// `timestamp,flow[,temperature,cloud_cover,humidity,precipitation]`.
///
/// Rows with unparsable cells are dropped and counted in
/// [`SensorSeries::dropped_rows`]; records are sorted chronologically.
/// Duplicate timestamps are a data error.
pub fn load_csv(path: &Path, sensor_id: &str) -> Result<SensorSeries> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h.trim() == name);

    let ts_col = col("timestamp")
        .ok_or_else(|| Error::Schema(format!("{}: missing `timestamp` column", path.display())))?;
    let flow_col = col("flow")
        .ok_or_else(|| Error::Schema(format!("{}: missing `flow` column", path.display())))?;
    let weather_cols: Option<[usize; 4]> = match (
        col("temperature"),
        col("cloud_cover"),
        col("humidity"),
        col("precipitation"),
    ) {
        (Some(t), Some(c), Some(h), Some(p)) => Some([t, c, h, p]),
        _ => None,
    };

    let mut records: Vec<(NaiveDateTime, f64, Option<WeatherSample>)> = Vec::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let parsed = (|| {
            let ts = parse_timestamp(record.get(ts_col)?)?;
            let flow: f64 = record.get(flow_col)?.trim().parse().ok()?;
            if !flow.is_finite() || flow < 0.0 {
                return None;
            }
            let weather = match weather_cols {
                Some(cols) => {
                    let mut vals = [0.0; 4];
                    for (v, &c) in vals.iter_mut().zip(cols.iter()) {
                        *v = record.get(c)?.trim().parse().ok()?;
                    }
                    Some(WeatherSample {
                        temperature: vals[0],
                        cloud_cover: vals[1],
                        humidity: vals[2],
                        precipitation: vals[3],
                    })
                }
                None => None,
            };
            Some((ts, flow, weather))
        })();
        match parsed {
            Some(row) => records.push(row),
            None => dropped += 1,
        }
    }

    records.sort_by_key(|(ts, _, _)| *ts);
    for pair in records.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::Data(format!(
                "{}: duplicate timestamp {}",
                path.display(),
                pair[0].0
            )));
        }
    }

    let timestamps: Vec<_> = records.iter().map(|(ts, _, _)| *ts).collect();
    let flow: Vec<_> = records.iter().map(|(_, f, _)| *f).collect();
    let weather = if weather_cols.is_some() {
        Some(records.iter().map(|(_, _, w)| w.unwrap()).collect())
    } else {
        None
    };

    let series = SensorSeries {
        sensor_id: sensor_id.to_string(),
        timestamps,
        flow,
        weather,
        dropped_rows: dropped,
    };
    series.validate()?;
    Ok(series)
}

/// Writes a series back to the input CSV schema.
pub fn write_csv(series: &SensorSeries, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    if series.weather.is_some() {
        w.write_record([
            "timestamp",
            "flow",
            "temperature",
            "cloud_cover",
            "humidity",
            "precipitation",
        ])?;
    } else {
        w.write_record(["timestamp", "flow"])?;
    }
    for i in 0..series.len() {
        let ts = series.timestamps[i].format("%Y-%m-%dT%H:%M:%S").to_string();
        let flow = format!("{:.3}", series.flow[i]);
        match &series.weather {
            Some(weather) => {
                let ws = weather[i];
                w.write_record([
                    ts,
                    flow,
                    format!("{:.3}", ws.temperature),
                    format!("{:.4}", ws.cloud_cover),
                    format!("{:.4}", ws.humidity),
                    format!("{:.4}", ws.precipitation),
                ])?;
            }
            None => w.write_record([ts, flow])?,
        }
    }
    w.flush()?;
    Ok(())
}
