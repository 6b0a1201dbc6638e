use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::scan::{PointRecord, ScanResult};
use crate::error::{Error, Result};
use crate::fit::GateTemplateParams;
use crate::mitigation::Calibration;

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "nuosc";

pub const CSV_HEADER: [&str; 10] = [
    "scenario",
    "axis_name",
    "axis_value",
    "flavor",
    "p_exact",
    "p_sampled",
    "p_noisy",
    "p_mitigated",
    "p_oracle",
    "stat_err",
];

#[derive(Serialize)]
struct Report<'a> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    scenario: &'static str,
    axis_name: &'static str,
    config: &'a RunConfig,
    gate: Option<GateTemplateParams>,
    calibration: Option<Calibration>,
    points: &'a [PointRecord],
}

/// Shortest round-trip decimal form.
fn number(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_default()
}

fn optional(x: Option<f64>) -> String {
    x.map(number).unwrap_or_default()
}

pub fn csv_string(result: &ScanResult) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    let scenario = result.config.scenario.name();
    let axis = result.config.scan.axis.name();
    for point in &result.points {
        for f in &point.flavors {
            w.write_record([
                scenario.to_string(),
                axis.to_string(),
                number(point.axis_value),
                f.flavor.name().to_string(),
                number(f.p_exact),
                number(f.p_sampled),
                optional(f.p_noisy),
                optional(f.p_mitigated),
                number(f.p_oracle),
                number(f.stat_err),
            ])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid("csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV fields are UTF-8"))
}

pub fn json_string(result: &ScanResult) -> Result<String> {
    let report = Report {
        schema_version: SCHEMA_VERSION,
        tool: TOOL_NAME,
        version: env!("CARGO_PKG_VERSION"),
        scenario: result.config.scenario.name(),
        axis_name: result.config.scan.axis.name(),
        config: &result.config,
        gate: result.gate,
        calibration: result.calibration,
        points: &result.points,
    };
    let mut s = serde_json::to_string_pretty(&report)?;
    s.push('\n');
    Ok(s)
}

/// Plots p_exact and p_sampled against the scan axis for every flavor.
pub fn gnuplot_script(result: &ScanResult, csv_name: &str) -> String {
    let n = result.config.scenario.n_outcomes();
    let axis = result.config.scan.axis.name();
    let mut s = format!(
        "set datafile separator ','\nset key outside\nset xlabel '{axis}'\nset ylabel 'probability'\nset yrange [0:1]\nplot \\\n"
    );
    let flavors = &result.points[0].flavors;
    let lines: Vec<String> = flavors
        .iter()
        .take(n)
        .flat_map(|f| {
            let name = f.flavor.name();
            [
                format!("  '{csv_name}' using (strcol(4) eq '{name}' ? $3 : 1/0):5 with lines title '{name} exact'"),
                format!("  '{csv_name}' using (strcol(4) eq '{name}' ? $3 : 1/0):6 with points title '{name} sampled'"),
            ]
        })
        .collect();
    s.push_str(&lines.join(", \\\n"));
    s.push('\n');
    s
}

/// Paths written by [`write_report`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportPaths {
    pub csv: PathBuf,
    pub json: PathBuf,
    pub gnuplot: Option<PathBuf>,
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `<stem>.csv` and `<stem>.json` (and `<stem>.gp` if asked) into
/// `dir`, creating it when missing.
pub fn write_report(result: &ScanResult, dir: &Path, gnuplot: bool) -> Result<ReportPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = result.config.stem();
    let csv = dir.join(format!("{stem}.csv"));
    let json = dir.join(format!("{stem}.json"));
    write(&csv, &csv_string(result)?)?;
    write(&json, &json_string(result)?)?;
    let gp = if gnuplot {
        let path = dir.join(format!("{stem}.gp"));
        write(&path, &gnuplot_script(result, &format!("{stem}.csv")))?;
        Some(path)
    } else {
        None
    };
    Ok(ReportPaths { csv, json, gnuplot: gp })
}
