use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::uncertainty::PredictionInterval;

/// Raised when the sliding-window miss rate exceeds the calibrated level by
/// more than κ standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftAlarm {
    /// Index of the observation closing the offending window.
    pub window_end: usize,
    pub miss_rate: f64,
    pub threshold: f64,
}

/// Sliding-window monitor over a stream of (interval, observation) pairs.
///
/// The miss rate m̂ over the last W observations is compared against
/// `α + κ·√(α(1−α)/W)`; an alarm fires on each upward crossing.
/// Single-consumer stateful fold: one instance per stream.
#[derive(Debug)]
pub struct CoverageDriftMonitor {
    window: usize,
    alpha: f64,
    threshold: f64,
    misses: VecDeque<bool>,
    miss_count: usize,
    index: usize,
    in_alarm: bool,
}

impl CoverageDriftMonitor {
    pub fn new(window: usize, alpha: f64, kappa: f64) -> Result<Self> {
        if window < 30 {
            return Err(Error::Config(format!(
                "drift window must be >= 30, got {window}"
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Config("alpha must be in (0, 1)".to_string()));
        }
        if kappa <= 0.0 {
            return Err(Error::Config("kappa must be positive".to_string()));
        }
        let threshold = alpha + kappa * (alpha * (1.0 - alpha) / window as f64).sqrt();
        Ok(Self {
            window,
            alpha,
            threshold,
            misses: VecDeque::with_capacity(window),
            miss_count: 0,
            index: 0,
            in_alarm: false,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Feeds one observation; returns an alarm on upward threshold
    /// crossings once the window is full.
    pub fn observe(&mut self, interval: &PredictionInterval, y: f64) -> Option<DriftAlarm> {
        let miss = !interval.covers(y);
        self.misses.push_back(miss);
        self.miss_count += miss as usize;
        if self.misses.len() > self.window {
            let old = self.misses.pop_front().unwrap();
            self.miss_count -= old as usize;
        }
        let current_index = self.index;
        self.index += 1;

        if self.misses.len() < self.window {
            return None;
        }
        let miss_rate = self.miss_count as f64 / self.window as f64;
        let alarming = miss_rate > self.threshold;
        let event = alarming && !self.in_alarm;
        self.in_alarm = alarming;
        event.then_some(DriftAlarm {
            window_end: current_index,
            miss_rate,
            threshold: self.threshold,
        })
    }

    /// Folds a whole stream and collects the alarm events.
    pub fn run<'a, I>(&mut self, stream: I) -> Vec<DriftAlarm>
    where
        I: IntoIterator<Item = (&'a PredictionInterval, f64)>,
    {
        stream
            .into_iter()
            .filter_map(|(iv, y)| self.observe(iv, y))
            .collect()
    }
}
