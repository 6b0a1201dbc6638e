//! Config-driven scans over L, E or L/E with CSV, JSON and OpenQASM output.

mod config;
mod qasm;
mod report;
mod scan;

pub use config::{
    load_config, resolve_seed, Axis, LvConfig, OutputConfig, PhysicsConfig, RunConfig, ScanConfig,
    Scenario, Spacing, DEFAULT_SHOTS, SEED_ENV_VAR,
};
pub use qasm::{export_qasm, lower};
pub use report::{
    csv_string, gnuplot_script, json_string, write_report, ReportPaths, CSV_HEADER, SCHEMA_VERSION,
    TOOL_NAME,
};
pub use scan::{
    derive_seed, first_point_circuit, point_coordinates, run_calibration, run_scan, systematic_error, FlavorRecord,
    PointRecord, ScanResult,
};
