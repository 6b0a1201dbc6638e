use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::config::{Axis, RunConfig, Scenario};
use crate::circuits::{
    build_decoherence_circuit, build_sterile_circuit, build_three_flavor_circuit,
    build_two_flavor_circuit, exact_probabilities, DecoherenceParams, SterileParams,
    ThreeFlavorParams, TwoFlavorParams,
};
use crate::error::{Error, Result};
use crate::fit::{fit_mixing_gate, GateTemplateParams};
use crate::flavor::Flavor;
use crate::mitigation::{
    apply_noise_channel, build_mitigation_matrix_with, calibrate_from_zero_baseline, mitigate,
    Calibration, MitigationMatrix,
};
use crate::oracle::{
    build_lv_hamiltonian, build_matter_hamiltonian, decohered_probability, effective_vacuum,
    n_flavor_probability, probability_from_hamiltonian, sterile_mixing, two_flavor_probability,
    Hamiltonian, LvParams, MatterParams, MixingMatrix,
};
use crate::quantum::{run_shots, Circuit, CountsHistogram, StateVector};

/// Gate-error term added in quadrature when systematics are enabled:
/// √50 gates at 10⁻³ each.
pub fn systematic_error() -> f64 {
    50f64.sqrt() * 1e-3
}

/// Per-point seed, decorrelated from its neighbours by SplitMix64.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const CALIBRATION_INDEX: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlavorRecord {
    pub flavor: Flavor,
    pub p_exact: f64,
    pub p_sampled: f64,
    pub p_noisy: Option<f64>,
    pub p_mitigated: Option<f64>,
    /// Unclamped M⁻¹·p value.
    pub p_mitigated_raw: Option<f64>,
    pub p_oracle: f64,
    pub stat_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub axis_value: f64,
    pub baseline: f64,
    pub energy: f64,
    pub counts: CountsHistogram,
    pub noisy_counts: Option<CountsHistogram>,
    pub mitigation_clamped: Option<bool>,
    pub flavors: Vec<FlavorRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub config: RunConfig,
    /// Gate angles of the flavor-basis change, when fixed for the scan.
    pub gate: Option<GateTemplateParams>,
    pub calibration: Option<Calibration>,
    pub points: Vec<PointRecord>,
}

enum Model {
    TwoFlavor { theta: f64, dm2: f64 },
    Vacuum { mixing: MixingMatrix, dm2: Vec<f64>, gate: GateTemplateParams },
    Decoherence { mixing: MixingMatrix, dm2: Vec<f64>, gate: GateTemplateParams, gamma: f64, n_steps: usize },
    Hamiltonian { mixing: MixingMatrix, dm2: Vec<f64>, extra: Extra },
}

enum Extra {
    Matter(MatterParams),
    Lv(LvParams),
}

fn real_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |r, c| rows[r][c])
}

fn complex_matrix(rows: &Option<Vec<Vec<f64>>>) -> DMatrix<C64> {
    match rows {
        Some(m) => real_matrix(m).map(|x| C64::new(x, 0.0)),
        None => DMatrix::zeros(3, 3),
    }
}

impl Model {
    fn resolve(config: &RunConfig) -> Result<Self> {
        let p = &config.physics;
        let mixing = || -> Result<MixingMatrix> {
            match (&p.mixing, config.scenario) {
                (Some(m), _) => MixingMatrix::from_real(&real_matrix(m)),
                (None, Scenario::Sterile) => {
                    let [t14, t24, t34] = p.sterile_angles;
                    Ok(sterile_mixing(t14, t24, t34))
                }
                (None, _) => Ok(MixingMatrix::pmns()),
            }
        };
        let gate = |m: &MixingMatrix| -> Result<GateTemplateParams> {
            match p.gate_params {
                Some(g) => Ok(g),
                None => fit_mixing_gate(m),
            }
        };
        let dm2_3 = vec![p.dm2_21, p.dm2_31];
        Ok(match config.scenario {
            Scenario::TwoFlavor => Model::TwoFlavor {
                theta: p.theta.unwrap_or_default(),
                dm2: p.dm2.unwrap_or_default(),
            },
            Scenario::ThreeFlavor => {
                let mixing = mixing()?;
                let gate = gate(&mixing)?;
                Model::Vacuum { mixing, dm2: dm2_3, gate }
            }
            Scenario::Sterile => {
                let mixing = mixing()?;
                let gate = gate(&mixing)?;
                Model::Vacuum { mixing, dm2: vec![p.dm2_21, p.dm2_31, p.dm2_41], gate }
            }
            Scenario::Decoherence => {
                let mixing = mixing()?;
                let gate = gate(&mixing)?;
                Model::Decoherence { mixing, dm2: dm2_3, gate, gamma: p.gamma, n_steps: p.n_steps }
            }
            Scenario::Matter | Scenario::Nsi => {
                let eps = if config.scenario == Scenario::Nsi { p.nsi_epsilon_ee } else { 0.0 };
                Model::Hamiltonian {
                    mixing: mixing()?,
                    dm2: dm2_3,
                    extra: Extra::Matter(MatterParams::new(p.electron_density, eps)?),
                }
            }
            Scenario::Lv => Model::Hamiltonian {
                mixing: mixing()?,
                dm2: dm2_3,
                extra: Extra::Lv(LvParams {
                    a3: complex_matrix(&p.lv.a3),
                    c4: complex_matrix(&p.lv.c4),
                    a5: complex_matrix(&p.lv.a5),
                    c6: complex_matrix(&p.lv.c6),
                }),
            },
        })
    }

    fn fixed_gate(&self) -> Option<GateTemplateParams> {
        match self {
            Model::Vacuum { gate, .. } | Model::Decoherence { gate, .. } => Some(*gate),
            _ => None,
        }
    }

    fn hamiltonian(&self, energy: f64) -> Result<Hamiltonian> {
        let Model::Hamiltonian { mixing, dm2, extra } = self else {
            unreachable!("only called for Hamiltonian models");
        };
        match extra {
            Extra::Matter(m) => build_matter_hamiltonian(mixing, dm2, energy, m),
            Extra::Lv(lv) => build_lv_hamiltonian(&Hamiltonian::vacuum(mixing, dm2, energy)?, lv, energy),
        }
    }
}

/// Circuit and oracle row for one (L, E) point.
struct PointSetup {
    circuit: Circuit,
    oracle: Vec<f64>,
}

struct Runner<'a> {
    config: &'a RunConfig,
    model: Model,
    /// Effective splittings and gate angles per energy, keyed by bit pattern.
    effective: HashMap<u64, (Vec<f64>, GateTemplateParams)>,
}

impl<'a> Runner<'a> {
    fn effective(&mut self, energy: f64) -> Result<(Vec<f64>, GateTemplateParams)> {
        if let Some(hit) = self.effective.get(&energy.to_bits()) {
            return Ok(hit.clone());
        }
        let h = self.model.hamiltonian(energy)?;
        let eff = effective_vacuum(&h, energy)?;
        let gate = fit_mixing_gate(&eff.mixing)?;
        self.effective.insert(energy.to_bits(), (eff.dm2.clone(), gate));
        Ok((eff.dm2, gate))
    }

    fn setup(&mut self, baseline: f64, energy: f64) -> Result<PointSetup> {
        let initial = self.config.physics.initial;
        let a = initial.index();
        match &self.model {
            Model::TwoFlavor { theta, dm2 } => {
                let (theta, dm2) = (*theta, *dm2);
                let circuit = build_two_flavor_circuit(&TwoFlavorParams { theta, dm2, energy, baseline }, initial)?;
                let oracle = Flavor::first(2)
                    .iter()
                    .map(|&f| two_flavor_probability(theta, dm2, baseline, energy, initial, f))
                    .collect::<Result<_>>()?;
                Ok(PointSetup { circuit, oracle })
            }
            Model::Vacuum { mixing, dm2, gate } => {
                let circuit = if dm2.len() == 2 {
                    build_three_flavor_circuit(
                        &ThreeFlavorParams { gate: *gate, dm2_21: dm2[0], dm2_31: dm2[1], energy, baseline },
                        initial,
                    )?
                } else {
                    build_sterile_circuit(
                        &SterileParams {
                            gate: *gate,
                            dm2_21: dm2[0],
                            dm2_31: dm2[1],
                            dm2_41: dm2[2],
                            energy,
                            baseline,
                        },
                        initial,
                    )?
                };
                let p = n_flavor_probability(mixing, dm2, baseline, energy)?;
                Ok(PointSetup { circuit, oracle: pad_row(&p, a) })
            }
            Model::Decoherence { mixing, dm2, gate, gamma, n_steps } => {
                let circuit = build_decoherence_circuit(
                    &DecoherenceParams {
                        gate: *gate,
                        dm2_21: dm2[0],
                        dm2_31: dm2[1],
                        energy,
                        baseline,
                        gamma: *gamma,
                        n_steps: *n_steps,
                    },
                    initial,
                )?;
                let d = (-gamma * baseline).exp();
                let damping = DMatrix::from_fn(3, 3, |i, j| if (i == 1) != (j == 1) { d } else { 1.0 });
                let p = decohered_probability(mixing, dm2, baseline, energy, &damping)?;
                Ok(PointSetup { circuit, oracle: pad_row(&p, a) })
            }
            Model::Hamiltonian { .. } => {
                let oracle = probability_from_hamiltonian(&self.model.hamiltonian(energy)?, baseline)?;
                let (dm2, gate) = self.effective(energy)?;
                let circuit = build_three_flavor_circuit(
                    &ThreeFlavorParams { gate, dm2_21: dm2[0], dm2_31: dm2[1], energy, baseline },
                    initial,
                )?;
                Ok(PointSetup { circuit, oracle: pad_row(&oracle, a) })
            }
        }
    }
}

fn pad_row(p: &DMatrix<f64>, initial: usize) -> Vec<f64> {
    (0..4).map(|b| if b < p.ncols() { p[(initial, b)] } else { 0.0 }).collect()
}

fn sample(circuit: &Circuit, shots: u64, seed: u64, n_bits: usize) -> Result<CountsHistogram> {
    let counts = run_shots(circuit, &StateVector::zero(circuit.n_qubits())?, shots, seed)?;
    Ok(if counts.n_bits() > n_bits { counts.marginal_low(n_bits) } else { counts })
}

/// Baseline and energy at a scan value.
pub fn point_coordinates(config: &RunConfig, value: f64) -> (f64, f64) {
    let p = &config.physics;
    match config.scan.axis {
        Axis::Baseline => (value, p.energy),
        Axis::Energy => (p.baseline, value),
        Axis::LOverE => (value * p.energy, p.energy),
    }
}

/// Circuit of the first scan point, as exported to OpenQASM.
pub fn first_point_circuit(config: &RunConfig) -> Result<Circuit> {
    config.validate()?;
    let mut runner = Runner { config, model: Model::resolve(config)?, effective: HashMap::new() };
    let (l, e) = point_coordinates(config, config.scan.values()[0]);
    Ok(runner.setup(l, e)?.circuit)
}

fn calibrate(runner: &mut Runner, energy: f64) -> Result<(Calibration, MitigationMatrix)> {
    let config = runner.config;
    let setup = runner.setup(0.0, energy)?;
    let seed = derive_seed(config.seed, CALIBRATION_INDEX);
    let mut counts = sample(&setup.circuit, config.shots, seed, 2)?;
    if let Some(noise) = &config.noise {
        counts = apply_noise_channel(&counts, noise, seed)?;
    }
    let cal = calibrate_from_zero_baseline(&counts, config.physics.initial)?;
    let m = build_mitigation_matrix_with(&cal.noise()?, config.noise_model)?;
    Ok((cal, m))
}

/// Zero-baseline calibration run at the first scan energy, through the
/// configured noise channel.
pub fn run_calibration(config: &RunConfig) -> Result<Calibration> {
    config.validate()?;
    if config.scenario.n_outcomes() != 4 {
        return Err(Error::invalid("scenario", "calibration needs the two-qubit register"));
    }
    let mut runner = Runner { config, model: Model::resolve(config)?, effective: HashMap::new() };
    let energy = point_coordinates(config, config.scan.values()[0]).1;
    Ok(calibrate(&mut runner, energy)?.0)
}

/// Runs every scan point: exact circuit probabilities, sampled shots, the
/// noise channel and mitigation when configured, and the oracle.
pub fn run_scan(config: &RunConfig) -> Result<ScanResult> {
    config.validate()?;
    let mut runner = Runner { config, model: Model::resolve(config)?, effective: HashMap::new() };
    let values = config.scan.values();
    let n_out = config.scenario.n_outcomes();
    let n_bits = if n_out == 2 { 1 } else { 2 };

    let (calibration, mitigation) = if config.mitigation {
        let energy = point_coordinates(config, values[0]).1;
        let (c, m) = calibrate(&mut runner, energy)?;
        (Some(c), Some(m))
    } else {
        (None, None)
    };

    let sys = if config.systematics { systematic_error() } else { 0.0 };
    let mut points = Vec::with_capacity(values.len());
    for (i, &value) in values.iter().enumerate() {
        let (baseline, energy) = point_coordinates(config, value);
        let setup = runner.setup(baseline, energy)?;
        let seed = derive_seed(config.seed, i as u64);
        let exact = exact_probabilities(&setup.circuit, n_bits)?;
        let counts = sample(&setup.circuit, config.shots, seed, n_bits)?;
        let sampled = counts.frequencies();
        let noisy_counts = match &config.noise {
            Some(noise) => Some(apply_noise_channel(&counts, noise, seed)?),
            None => None,
        };
        let noisy = noisy_counts.as_ref().map(|c| c.frequencies());
        let mitigated = match &mitigation {
            Some(m) => Some(mitigate(noisy_counts.as_ref().unwrap_or(&counts), m)?),
            None => None,
        };
        let flavors = (0..n_out)
            .map(|k| {
                let ps = sampled[k];
                let stat = (ps * (1.0 - ps) / config.shots as f64).sqrt();
                FlavorRecord {
                    flavor: Flavor::ALL[k],
                    p_exact: exact[k],
                    p_sampled: ps,
                    p_noisy: noisy.as_ref().map(|n| n[k]),
                    p_mitigated: mitigated.map(|m| m.probabilities[k]),
                    p_mitigated_raw: mitigated.map(|m| m.raw[k]),
                    p_oracle: setup.oracle[k],
                    stat_err: stat.hypot(sys),
                }
            })
            .collect();
        points.push(PointRecord {
            axis_value: value,
            baseline,
            energy,
            counts,
            noisy_counts,
            mitigation_clamped: mitigated.map(|m| m.clamped),
            flavors,
        });
    }
    Ok(ScanResult {
        config: config.clone(),
        gate: runner.model.fixed_gate(),
        calibration,
        points,
    })
}

impl ScanResult {
    pub fn max_oracle_deviation(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|p| p.flavors.iter())
            .map(|f| (f.p_exact - f.p_oracle).abs())
            .fold(0.0, f64::max)
    }
}
