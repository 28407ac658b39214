use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::series::{SensorSeries, WeatherSample, SAMPLES_PER_DAY, STEP_SECONDS};
use crate::error::{Error, Result};
use crate::seeding::rng_from_seed;

/// Deterministic daily-profile surrogate for an urban flow sensor.
///
/// The mean flow is a base level plus two Gaussian-shaped peaks (morning and
/// evening), attenuated on weekends. Observations add zero-mean Gaussian
/// noise with marginal standard deviation `σ(t) = noise_base +
/// noise_scale · level(t)` and lag-1 autocorrelation `noise_ar`, so that
/// recent readings stay informative about the near future and that
/// informativeness decays with the forecasting horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub base_level: f64,
    pub morning_peak_amplitude: f64,
    /// Hour of day of the morning peak center, fractional.
    pub morning_peak_hour: f64,
    pub evening_peak_amplitude: f64,
    pub evening_peak_hour: f64,
    /// Standard deviation of the peak shape, in hours.
    pub peak_width_hours: f64,
    /// Multiplier applied to the whole profile on Saturdays and Sundays.
    pub weekend_attenuation: f64,
    /// σ₀ term of the noise model, vehicles/hour.
    pub noise_base: f64,
    /// κ term of the noise model: σ(t) = σ₀ + κ·level(t).
    pub noise_scale: f64,
    /// Lag-1 autocorrelation of the noise process, in [0, 1).
    pub noise_ar: f64,
    /// Whether to emit synthetic weather channels.
    pub with_weather: bool,
    pub start_date: NaiveDate,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            base_level: 200.0,
            morning_peak_amplitude: 600.0,
            morning_peak_hour: 8.0,
            evening_peak_amplitude: 700.0,
            evening_peak_hour: 18.5,
            peak_width_hours: 2.5,
            weekend_attenuation: 0.6,
            noise_base: 20.0,
            noise_scale: 0.1,
            noise_ar: 0.9,
            with_weather: true,
            start_date: NaiveDate::from_ymd_opt(2019, 1, 1).unwrap(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.morning_peak_amplitude <= 0.0 || self.evening_peak_amplitude <= 0.0 {
            return Err(Error::Config(
                "peak amplitudes must be positive".to_string(),
            ));
        }
        if self.noise_base < 0.0 || self.noise_scale < 0.0 {
            return Err(Error::Config(
                "noise parameters must be non-negative".to_string(),
            ));
        }
        if self.peak_width_hours <= 0.0 {
            return Err(Error::Config("peak width must be positive".to_string()));
        }
        if !(0.0..1.0).contains(&self.noise_ar) {
            return Err(Error::Config("noise_ar must be in [0, 1)".to_string()));
        }
        if !(0.0..=1.0).contains(&self.weekend_attenuation) {
            return Err(Error::Config(
                "weekend_attenuation must be in [0, 1]".to_string(),
            ));
        }
        Ok(())
    }

    /// Noiseless profile value at `ts`, vehicles/hour.
    pub fn level_at(&self, ts: NaiveDateTime) -> f64 {
        let hour = ts.hour() as f64 + ts.minute() as f64 / 60.0;
        let bump = |center: f64, amp: f64| {
            // Wrap distance around midnight so late-evening peaks stay smooth.
            let mut d = (hour - center).abs();
            d = d.min(24.0 - d);
            amp * (-d * d / (2.0 * self.peak_width_hours * self.peak_width_hours)).exp()
        };
        let mut level = self.base_level
            + bump(self.morning_peak_hour, self.morning_peak_amplitude)
            + bump(self.evening_peak_hour, self.evening_peak_amplitude);
        let wd = ts.date().weekday();
        if wd == Weekday::Sat || wd == Weekday::Sun {
            level *= self.weekend_attenuation;
        }
        level
    }

    /// Marginal noise standard deviation σ(t) = σ₀ + κ·level(t).
    pub fn noise_sigma_at(&self, ts: NaiveDateTime) -> f64 {
        self.noise_base + self.noise_scale * self.level_at(ts)
    }

    /// Parses a flat key-value text file (`key = value` per line, `#`
    /// comments) on top of the defaults.
    pub fn from_key_value_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!(
                    "{}:{}: expected `key = value`, got {line:?}",
                    path.display(),
                    lineno + 1
                ))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |e: String| {
                Error::Config(format!("{}:{}: {key}: {e}", path.display(), lineno + 1))
            };
            let parse_f64 = |v: &str| v.parse::<f64>().map_err(|e| bad(e.to_string()));
            match key {
                "base_level" => cfg.base_level = parse_f64(value)?,
                "morning_peak_amplitude" => cfg.morning_peak_amplitude = parse_f64(value)?,
                "morning_peak_hour" => cfg.morning_peak_hour = parse_f64(value)?,
                "evening_peak_amplitude" => cfg.evening_peak_amplitude = parse_f64(value)?,
                "evening_peak_hour" => cfg.evening_peak_hour = parse_f64(value)?,
                "peak_width_hours" => cfg.peak_width_hours = parse_f64(value)?,
                "weekend_attenuation" => cfg.weekend_attenuation = parse_f64(value)?,
                "noise_base" => cfg.noise_base = parse_f64(value)?,
                "noise_scale" => cfg.noise_scale = parse_f64(value)?,
                "noise_ar" => cfg.noise_ar = parse_f64(value)?,
                "with_weather" => {
                    cfg.with_weather = value.parse::<bool>().map_err(|e| bad(e.to_string()))?
                }
                "start_date" => {
                    cfg.start_date = NaiveDate::parse_from_str(value, "%Y-%m-%d")
                        .map_err(|e| bad(e.to_string()))?
                }
                other => {
                    return Err(Error::Config(format!(
                        "{}:{}: unknown key {other:?}",
                        path.display(),
                        lineno + 1
                    )))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Generates `days` of 15-minute synthetic readings. Deterministic for a
/// fixed seed; flow is clamped at 0.
pub fn generate_synthetic(
    profile: &SyntheticConfig,
    sensor_id: &str,
    days: usize,
    seed: u64,
) -> Result<SensorSeries> {
    profile.validate()?;
    if days < 1 {
        return Err(Error::Config("days must be >= 1".to_string()));
    }
    let n = days * SAMPLES_PER_DAY;
    let start = profile.start_date.and_hms_opt(0, 0, 0).unwrap();
    let mut rng = rng_from_seed(seed);

    let mut timestamps = Vec::with_capacity(n);
    let mut flow = Vec::with_capacity(n);
    let mut weather = profile.with_weather.then(|| Vec::with_capacity(n));

    let rho = profile.noise_ar;
    let innovation_scale = (1.0 - rho * rho).sqrt();
    let mut noise = 0.0f64;
    for k in 0..n {
        let ts = start + chrono::Duration::seconds(k as i64 * STEP_SECONDS);
        let level = profile.level_at(ts);
        let sigma = profile.noise_sigma_at(ts);
        let z: f64 = StandardNormal.sample(&mut rng);
        noise = if k == 0 {
            sigma * z
        } else {
            rho * noise + innovation_scale * sigma * z
        };
        timestamps.push(ts);
        flow.push((level + noise).max(0.0));
        if let Some(w) = weather.as_mut() {
            w.push(synthetic_weather(ts, k, days, &mut rng));
        }
    }

    let series = SensorSeries {
        sensor_id: sensor_id.to_string(),
        timestamps,
        flow,
        weather,
        dropped_rows: 0,
    };
    series.validate()?;
    Ok(series)
}

/// Plausible weather channels: seasonal + diurnal temperature, bounded
/// cloud/humidity, sparse precipitation. Decorative only; the flow channel
/// does not depend on them, so the generator's noise model stays exact.
fn synthetic_weather(
    ts: NaiveDateTime,
    k: usize,
    days: usize,
    rng: &mut impl Rng,
) -> WeatherSample {
    let day_frac = (k % SAMPLES_PER_DAY) as f64 / SAMPLES_PER_DAY as f64;
    let year_frac = ts.date().ordinal() as f64 / 365.25;
    let _ = days;
    let temperature = 14.0
        + 8.0 * (std::f64::consts::TAU * (year_frac - 0.55)).cos()
        + 4.0 * (std::f64::consts::TAU * (day_frac - 0.6)).sin()
        + rng.gen_range(-1.0..1.0);
    let cloud_cover: f64 = rng.gen_range(0.0..1.0);
    let humidity = (0.5 + 0.3 * cloud_cover + rng.gen_range(-0.15..0.15)).clamp(0.0, 1.0);
    let precipitation = if cloud_cover > 0.85 {
        rng.gen_range(0.0..4.0)
    } else {
        0.0
    };
    WeatherSample {
        temperature,
        cloud_cover,
        humidity,
        precipitation,
    }
}
