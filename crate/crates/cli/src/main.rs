use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::Matrix4;
use nuosc::fit::{fit, FitOptions, GateTemplateParams, TargetUnitary};
use nuosc::harness::{
    export_qasm, first_point_circuit, load_config, resolve_seed, run_calibration, run_scan,
    write_report, RunConfig, SEED_ENV_VAR,
};

/// Few-qubit circuit simulation of neutrino flavor oscillations.
#[derive(Parser)]
#[command(name = "nuosc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Overrides the config seed and NUOSC_SEED.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Overrides the config shot count.
    #[arg(long, global = true)]
    shots: Option<u64>,

    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    /// Disables readout mitigation even if the config enables it.
    #[arg(long, global = true)]
    no_mitigation: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Runs a scan and writes <stem>.csv and <stem>.json.
    Run {
        config: PathBuf,
        /// Also writes a gnuplot script <stem>.gp.
        #[arg(long)]
        gnuplot_script: bool,
    },
    /// Fits the six-angle gate template to a real mixing matrix.
    FitPmns {
        /// JSON array of rows; the built-in printed matrix when absent.
        #[arg(long)]
        target: Option<PathBuf>,
        /// Starts from a named angle set instead of random restarts.
        #[arg(long)]
        seed_params: Option<SeedParams>,
    },
    /// Estimates readout flip rates from a zero-baseline run.
    Calibrate { config: PathBuf },
    /// Writes the first scan point's circuit as OpenQASM 2.0.
    ExportQasm { config: PathBuf },
    /// Runs the acceptance checks.
    Selftest,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeedParams {
    /// The rounded reference angles.
    Printed,
}

fn load(cli: &Cli, path: &Path) -> Result<RunConfig> {
    let mut config = load_config(path)?;
    let env = std::env::var(SEED_ENV_VAR).ok();
    config.seed = resolve_seed(config.seed, env.as_deref(), cli.seed)?;
    if let Some(shots) = cli.shots {
        config.shots = shots;
    }
    if let Some(dir) = &cli.out_dir {
        config.output.dir = dir.clone();
    }
    if cli.no_mitigation {
        config.mitigation = false;
    }
    config
        .validate()
        .with_context(|| format!("after command-line overrides of {}", path.display()))?;
    Ok(config)
}

/// A square JSON matrix embedded in the 4×4 operator with the unused states
/// on the identity.
fn read_target(path: &Path) -> Result<TargetUnitary> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let rows: Vec<Vec<f64>> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let n = rows.len();
    if !(2..=4).contains(&n) || rows.iter().any(|r| r.len() != n) {
        bail!("{}: target must be a square matrix of size 2 to 4", path.display());
    }
    let m = Matrix4::from_fn(|r, c| match (r < n && c < n, r == c) {
        (true, _) => rows[r][c],
        (false, true) => 1.0,
        (false, false) => 0.0,
    });
    Ok(TargetUnitary::new(m)?)
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run { config, gnuplot_script } => {
            let config = load(cli, config)?;
            let result = run_scan(&config)?;
            let paths = write_report(&result, &config.output.dir, *gnuplot_script)?;
            println!("{}", paths.csv.display());
            println!("{}", paths.json.display());
            if let Some(gp) = paths.gnuplot {
                println!("{}", gp.display());
            }
        }
        Command::FitPmns { target, seed_params } => {
            let target = match target {
                Some(path) => read_target(path)?,
                None => TargetUnitary::printed_pmns(),
            };
            let seed = seed_params.map(|SeedParams::Printed| GateTemplateParams::PRINTED);
            let mut options = FitOptions::default();
            if let Some(s) = cli.seed {
                options.seed = s;
            }
            let r = fit(&target, seed.as_ref(), &options)?;
            println!("{}", serde_json::to_string_pretty(&r)?);
            if !r.converged {
                eprintln!("fit did not converge (max element error {:.3e})", r.max_error);
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Calibrate { config } => {
            let config = load(cli, config)?;
            let cal = run_calibration(&config)?;
            println!("{}", serde_json::to_string_pretty(&cal)?);
        }
        Command::ExportQasm { config } => {
            let config = load(cli, config)?;
            let text = export_qasm(&first_point_circuit(&config)?)?;
            if cli.out_dir.is_some() {
                let dir = &config.output.dir;
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
                let path = dir.join(format!("{}.qasm", config.stem()));
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                println!("{}", path.display());
            } else {
                print!("{text}");
            }
        }
        Command::Selftest => {
            let outcomes = nuosc::acceptance::run_all();
            for o in &outcomes {
                println!("{o}");
            }
            if outcomes.iter().any(|o| !o.passed) {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
