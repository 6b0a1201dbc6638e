use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::GateTemplateParams;
use crate::flavor::Flavor;
use crate::mitigation::{NoiseModel, ReadoutNoise};

pub const DEFAULT_SHOTS: u64 = 1024;
pub const SEED_ENV_VAR: &str = "NUOSC_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    TwoFlavor,
    ThreeFlavor,
    Sterile,
    Decoherence,
    Matter,
    Nsi,
    Lv,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::TwoFlavor => "two_flavor",
            Scenario::ThreeFlavor => "three_flavor",
            Scenario::Sterile => "sterile",
            Scenario::Decoherence => "decoherence",
            Scenario::Matter => "matter",
            Scenario::Nsi => "nsi",
            Scenario::Lv => "lv",
        }
    }

    /// Measured flavor outcomes: 2 on the one-qubit register, else 4.
    pub fn n_outcomes(self) -> usize {
        if self == Scenario::TwoFlavor {
            2
        } else {
            4
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "l")]
    Baseline,
    #[serde(rename = "e")]
    Energy,
    #[serde(rename = "l_over_e")]
    LOverE,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Baseline => "L_km",
            Axis::Energy => "E_GeV",
            Axis::LOverE => "L_over_E_km_per_GeV",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub n_points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl ScanConfig {
    pub fn values(&self) -> Vec<f64> {
        let n = self.n_points;
        (0..n)
            .map(|i| {
                if n == 1 {
                    return self.min;
                }
                let t = i as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * t,
                    Spacing::Log => self.min * (self.max / self.min).powf(t),
                }
            })
            .collect()
    }
}

/// Real symmetric Lorentz-violating coefficient matrices, row-major.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LvConfig {
    pub a3: Option<Vec<Vec<f64>>>,
    pub c4: Option<Vec<Vec<f64>>>,
    pub a5: Option<Vec<Vec<f64>>>,
    pub c6: Option<Vec<Vec<f64>>>,
}

/// Physics inputs. Fields a scenario does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub initial: Flavor,
    /// Two-flavor mixing angle (rad) and splitting (eV²).
    pub theta: Option<f64>,
    pub dm2: Option<f64>,
    pub dm2_21: f64,
    pub dm2_31: f64,
    pub dm2_41: f64,
    /// GeV; fixed unless the scan runs over E.
    pub energy: f64,
    /// km; fixed when the scan runs over E.
    pub baseline: f64,
    /// Explicit real mixing matrix, rows flavor and columns mass state.
    pub mixing: Option<Vec<Vec<f64>>>,
    /// (θ14, θ24, θ34) for the default four-flavor mixing.
    pub sterile_angles: [f64; 3],
    /// 1/km.
    pub gamma: f64,
    pub n_steps: usize,
    /// cm⁻³.
    pub electron_density: f64,
    pub nsi_epsilon_ee: f64,
    pub lv: LvConfig,
    /// Precomputed gate angles; fitted from the mixing matrix when absent.
    pub gate_params: Option<GateTemplateParams>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            initial: Flavor::Mu,
            theta: None,
            dm2: None,
            dm2_21: 7.5e-5,
            dm2_31: 2.5e-3,
            dm2_41: 1.0,
            energy: 1.0,
            baseline: 1.0,
            mixing: None,
            sterile_angles: [0.1, 0.1, 0.0],
            gamma: 0.0,
            n_steps: 16,
            electron_density: 0.0,
            nsi_epsilon_ee: 0.0,
            lv: LvConfig::default(),
            gate_params: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem; the scenario name when absent.
    pub stem: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            stem: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub physics: PhysicsConfig,
    pub scan: ScanConfig,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub noise: Option<ReadoutNoise>,
    #[serde(default)]
    pub noise_model: NoiseModel,
    #[serde(default)]
    pub mitigation: bool,
    /// Adds the √50·10⁻³ gate-error term to reported errors.
    #[serde(default)]
    pub systematics: bool,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_shots() -> u64 {
    DEFAULT_SHOTS
}

fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::invalid(field, reason)
}

fn check_square(field: &str, m: &[Vec<f64>], n: usize) -> Result<()> {
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(invalid(field, format!("must be a {n}×{n} matrix")));
    }
    if m.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid(field, "entries must be finite"));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn stem(&self) -> String {
        self.output
            .stem
            .clone()
            .unwrap_or_else(|| self.scenario.name().to_string())
    }

    pub fn n_flavors(&self) -> usize {
        match self.scenario {
            Scenario::TwoFlavor => 2,
            Scenario::Sterile => 4,
            _ => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(invalid("shots", "must be at least 1"));
        }
        let s = &self.scan;
        if s.n_points == 0 {
            return Err(invalid("scan.n_points", "must be at least 1"));
        }
        if !s.min.is_finite() || !s.max.is_finite() || s.min > s.max {
            return Err(invalid("scan", "min and max must be finite with min <= max"));
        }
        if s.min < 0.0 {
            return Err(invalid("scan.min", "must be non-negative"));
        }
        if s.spacing == Spacing::Log && s.min <= 0.0 {
            return Err(invalid("scan.min", "must be positive for log spacing"));
        }
        if s.axis == Axis::Energy && s.min <= 0.0 {
            return Err(invalid("scan.min", "energies must be positive"));
        }

        let p = &self.physics;
        if !(p.energy > 0.0) {
            return Err(invalid("physics.energy", "must be positive"));
        }
        if !(p.baseline >= 0.0) {
            return Err(invalid("physics.baseline", "must be non-negative"));
        }
        if p.initial.index() >= self.n_flavors() {
            return Err(invalid(
                "physics.initial",
                format!("flavor {} is not available in {}", p.initial, self.scenario),
            ));
        }
        if let Some(m) = &p.mixing {
            check_square("physics.mixing", m, self.n_flavors())?;
        }
        match self.scenario {
            Scenario::TwoFlavor => {
                if p.theta.is_none() {
                    return Err(invalid("physics.theta", "required for two_flavor"));
                }
                if p.dm2.is_none() {
                    return Err(invalid("physics.dm2", "required for two_flavor"));
                }
                if self.noise.is_some() || self.mitigation {
                    return Err(invalid(
                        "noise",
                        "readout noise and mitigation need the two-qubit register",
                    ));
                }
            }
            Scenario::Decoherence => {
                if !(p.gamma >= 0.0) || !p.gamma.is_finite() {
                    return Err(invalid("physics.gamma", "must be finite and non-negative"));
                }
                if p.n_steps == 0 {
                    return Err(invalid("physics.n_steps", "must be at least 1"));
                }
            }
            Scenario::Matter | Scenario::Nsi => {
                if !(p.electron_density >= 0.0) {
                    return Err(invalid("physics.electron_density", "must be non-negative"));
                }
            }
            Scenario::Lv => {
                for (name, m) in [
                    ("physics.lv.a3", &p.lv.a3),
                    ("physics.lv.c4", &p.lv.c4),
                    ("physics.lv.a5", &p.lv.a5),
                    ("physics.lv.c6", &p.lv.c6),
                ] {
                    if let Some(m) = m {
                        check_square(name, m, 3)?;
                        let asymmetric = (0..3)
                            .flat_map(|r| (0..r).map(move |c| (r, c)))
                            .any(|(r, c)| (m[r][c] - m[c][r]).abs() > 1e-12);
                        if asymmetric {
                            return Err(invalid(name, "must be symmetric"));
                        }
                    }
                }
            }
            Scenario::ThreeFlavor | Scenario::Sterile => {}
        }
        if let Some(noise) = &self.noise {
            noise.validate()?;
        }
        Ok(())
    }
}

/// Reads and validates a JSON run config. Unknown keys are rejected.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    config.validate().map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(config)
}

/// Seed precedence: command line, then the environment, then the config.
pub fn resolve_seed(config_seed: u64, env: Option<&str>, cli: Option<u64>) -> Result<u64> {
    if let Some(s) = cli {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| invalid(SEED_ENV_VAR, format!("`{v}` is not an unsigned integer"))),
        None => Ok(config_seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "scenario": "two_flavor",
        "physics": {"theta": 0.6, "dm2": 7.5e-5, "initial": "e"},
        "scan": {"axis": "e", "min": 0.002, "max": 0.008, "n_points": 4}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(c.shots, 1024);
        assert_eq!(c.seed, 0);
        assert!(!c.mitigation);
        assert_eq!(c.scan.spacing, Spacing::Linear);
        assert_eq!(c.stem(), "two_flavor");
    }

    #[test]
    fn zero_shots_names_the_field() {
        let text = MINIMAL.replacen("\"scenario\"", "\"shots\": 0, \"scenario\"", 1);
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("shots"), "{err}");
    }

    #[test]
    fn unknown_key_is_named() {
        let text = MINIMAL.replacen("\"scenario\"", "\"shotz\": 5, \"scenario\"", 1);
        let err = RunConfig::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("shotz"), "{err}");
        let nested = MINIMAL.replace("\"initial\"", "\"energyy\": 1, \"initial\"");
        assert!(RunConfig::from_json(&nested).unwrap_err().to_string().contains("energyy"));
    }

    #[test]
    fn load_reports_path_and_position() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{\n  \"scenario\": \"three_flavor\",\n  \"scan\": }").unwrap();
        let err = load_config(&path).unwrap_err().to_string();
        assert!(err.contains("bad.json") && err.contains("line 3"), "{err}");
        assert!(matches!(load_config(&dir.path().join("missing.json")), Err(Error::Io { .. })));
    }

    #[test]
    fn scenario_checks() {
        let no_theta = MINIMAL.replace("\"theta\": 0.6, ", "");
        assert!(RunConfig::from_json(&no_theta).unwrap_err().to_string().contains("theta"));
        let tau = MINIMAL.replace("\"initial\": \"e\"", "\"initial\": \"tau\"");
        assert!(RunConfig::from_json(&tau).is_err());
        let log = r#"{"scenario": "three_flavor", "scan": {"axis": "l_over_e", "min": 0, "max": 10, "n_points": 3, "spacing": "log"}}"#;
        assert!(RunConfig::from_json(log).unwrap_err().to_string().contains("log"));
    }

    #[test]
    fn scan_values() {
        let s = ScanConfig { axis: Axis::LOverE, min: 0.0, max: 1200.0, n_points: 4, spacing: Spacing::Linear };
        assert_eq!(s.values(), vec![0.0, 400.0, 800.0, 1200.0]);
        let s = ScanConfig { axis: Axis::Energy, min: 1.0, max: 100.0, n_points: 3, spacing: Spacing::Log };
        let v = s.values();
        assert!((v[1] - 10.0).abs() < 1e-12 && v[2] == 100.0);
        let single = ScanConfig { n_points: 1, ..s };
        assert_eq!(single.values(), vec![1.0]);
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(3, None, None).unwrap(), 3);
        assert_eq!(resolve_seed(3, Some("9"), None).unwrap(), 9);
        assert_eq!(resolve_seed(3, Some("9"), Some(11)).unwrap(), 11);
        assert!(resolve_seed(3, Some("x"), None).is_err());
    }
}
