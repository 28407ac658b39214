use std::collections::BTreeMap;
use std::path::Path;

use crate::bench::runner::RunManifest;
use crate::bench::svg;
use crate::error::{Error, Result};

/// Writes pivot tables, a per-method calibration summary and an ICP box
/// plot derived from a run manifest.
///
/// Failed scenarios produce a partial-report warning on stderr; the report
/// is still written from the scenarios that completed.
pub fn emit_report(manifest: &RunManifest, out_dir: &Path) -> Result<()> {
    if manifest.scenarios.is_empty() {
        return Err(Error::Report("manifest contains no scenarios".to_string()));
    }
    if manifest.failed > 0 {
        eprintln!(
            "warning: partial report, {} of {} scenarios failed",
            manifest.failed,
            manifest.scenarios.len()
        );
    }
    let done: Vec<_> = manifest
        .scenarios
        .iter()
        .filter(|r| r.metrics.is_some())
        .collect();
    if done.is_empty() {
        return Err(Error::Report("no completed scenarios to report".to_string()));
    }
    std::fs::create_dir_all(out_dir)?;

    // One pivot per (technique, model): rows sensor × metric, columns
    // window × feature-set × horizon.
    let mut by_method: BTreeMap<String, Vec<&crate::bench::runner::ScenarioRecord>> =
        BTreeMap::new();
    for record in &done {
        let key = format!(
            "{}-{}",
            record.scenario.uq.label(),
            record.scenario.model.label()
        );
        by_method.entry(key).or_default().push(record);
    }

    for (method, records) in &by_method {
        let mut columns: Vec<(usize, bool, bool, usize)> = records
            .iter()
            .map(|r| {
                (
                    r.scenario.window,
                    r.scenario.use_meteo,
                    r.scenario.use_calendar,
                    r.scenario.horizon,
                )
            })
            .collect();
        columns.sort_unstable();
        columns.dedup();
        let mut sensors: Vec<&str> = records
            .iter()
            .map(|r| r.scenario.sensor_id.as_str())
            .collect();
        sensors.sort_unstable();
        sensors.dedup();

        let mut cells: BTreeMap<(&str, usize, bool, bool, usize), &crate::metrics::MetricReport> =
            BTreeMap::new();
        for r in records {
            let s = &r.scenario;
            cells.insert(
                (
                    s.sensor_id.as_str(),
                    s.window,
                    s.use_meteo,
                    s.use_calendar,
                    s.horizon,
                ),
                r.metrics.as_ref().unwrap(),
            );
        }

        let mut w = csv::Writer::from_path(out_dir.join(format!("pivot_{method}.csv")))?;
        let mut header = vec!["sensor".to_string(), "metric".to_string()];
        header.extend(columns.iter().map(|(w_, m, c, h)| {
            format!("w{w_}_m{}c{}_h{h}", *m as u8, *c as u8)
        }));
        w.write_record(&header)?;
        for sensor in &sensors {
            for metric in ["R2", "ICP", "MIL"] {
                let mut row = vec![sensor.to_string(), metric.to_string()];
                for &(win, m, c, h) in &columns {
                    let cell = cells.get(&(*sensor, win, m, c, h)).map(|report| match metric {
                        "R2" => report.r2,
                        "ICP" => Some(report.icp),
                        _ => Some(report.mil),
                    });
                    row.push(match cell.flatten() {
                        Some(v) => format!("{v:.6}"),
                        None => String::new(),
                    });
                }
                w.write_record(&row)?;
            }
        }
        w.flush()?;
    }

    // Calibration comparison across techniques (conformal vs the rest).
    let mut w = csv::Writer::from_path(out_dir.join("calibration_summary.csv"))?;
    w.write_record([
        "method",
        "scenarios",
        "mean_icp",
        "mean_mil",
        "mean_rmil",
        "mean_miscalibration_area",
    ])?;
    for (method, records) in &by_method {
        let n = records.len() as f64;
        let mean = |f: &dyn Fn(&crate::metrics::MetricReport) -> Option<f64>| {
            let vals: Vec<f64> = records
                .iter()
                .filter_map(|r| f(r.metrics.as_ref().unwrap()))
                .collect();
            if vals.is_empty() {
                String::new()
            } else {
                format!("{:.6}", vals.iter().sum::<f64>() / vals.len() as f64)
            }
        };
        w.write_record([
            method.clone(),
            format!("{}", n as usize),
            mean(&|m| Some(m.icp)),
            mean(&|m| Some(m.mil)),
            mean(&|m| m.rmil),
            mean(&|m| m.miscalibration_area),
        ])?;
    }
    w.flush()?;

    let groups: Vec<(String, Vec<f64>)> = by_method
        .iter()
        .map(|(method, records)| {
            (
                method.clone(),
                records
                    .iter()
                    .map(|r| r.metrics.as_ref().unwrap().icp)
                    .collect(),
            )
        })
        .collect();
    std::fs::write(
        out_dir.join("icp_by_method.svg"),
        svg::box_plot("ICP by method", "ICP", &groups),
    )?;
    Ok(())
}
