use chrono::Datelike;
use serde::{Deserialize, Serialize};

use crate::data::windows::WindowedDataset;
use crate::error::{Error, Result};

/// Disjoint row-index sets for train, calibration and test.
///
/// The split is month-local by target day-of-month: days 1-14 train,
/// 15-21 calibration, 22-end test. Every month with enough data therefore
/// contributes to all three partitions, and techniques without a
/// calibration step simply never see the calibration rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplits {
    pub fn assert_disjoint(&self) {
        let mut seen = std::collections::HashSet::new();
        for idx in self
            .train
            .iter()
            .chain(self.calibration.iter())
            .chain(self.test.iter())
        {
            assert!(seen.insert(*idx), "row {idx} appears in two partitions");
        }
    }
}

pub fn stratified_monthly_split(dataset: &WindowedDataset) -> Result<DatasetSplits> {
    let mut train = Vec::new();
    let mut calibration = Vec::new();
    let mut test = Vec::new();
    for (i, ts) in dataset.sample_timestamps.iter().enumerate() {
        match ts.day() {
            1..=14 => train.push(i),
            15..=21 => calibration.push(i),
            _ => test.push(i),
        }
    }
    for (name, part) in [
        ("train", &train),
        ("calibration", &calibration),
        ("test", &test),
    ] {
        if part.is_empty() {
            return Err(Error::Split(format!(
                "{name} partition is empty over the whole dataset"
            )));
        }
    }
    Ok(DatasetSplits {
        train,
        calibration,
        test,
    })
}
