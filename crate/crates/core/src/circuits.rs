//! Circuit builders for flavor oscillation experiments.
//!
//! Every multi-flavor circuit has the same shape: X gates preparing the
//! initial flavor, the inverse mixing gate taking flavor to mass states,
//! diagonal phase evolution, the forward mixing gate, and measurement of
//! both neutrino qubits (A = qubit 1 into slot 1, B = qubit 0 into slot 0).

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{invert_params, inverse_template_ops, template_ops, GateTemplateParams};
use crate::flavor::Flavor;
use crate::quantum::{density_from_state, run_density, run_statevector, Circuit, GateOp, StateVector};
use crate::units::phase_of;

pub const QUBIT_A: usize = 1;
pub const QUBIT_B: usize = 0;
pub const ANCILLA: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoFlavorParams {
    pub theta: f64,
    pub dm2: f64,
    pub energy: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThreeFlavorParams {
    pub gate: GateTemplateParams,
    pub dm2_21: f64,
    pub dm2_31: f64,
    pub energy: f64,
    pub baseline: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SterileParams {
    pub gate: GateTemplateParams,
    pub dm2_21: f64,
    pub dm2_31: f64,
    pub dm2_41: f64,
    pub energy: f64,
    pub baseline: f64,
}

/// Three-flavor evolution with the ν2 coherences damped at rate `gamma`
/// (1/km) through `n_steps` ancilla interactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceParams {
    pub gate: GateTemplateParams,
    pub dm2_21: f64,
    pub dm2_31: f64,
    pub energy: f64,
    pub baseline: f64,
    pub gamma: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

fn check_baseline(baseline: f64) -> Result<()> {
    if !(baseline >= 0.0) || !baseline.is_finite() {
        return Err(Error::NegativeBaseline(baseline));
    }
    Ok(())
}

/// The six-angle mixing gate, or its exact operator inverse.
pub fn pmns3_gate(params: &GateTemplateParams, direction: Direction) -> Vec<GateOp> {
    match direction {
        Direction::Forward => template_ops(params),
        Direction::Inverse => inverse_template_ops(&invert_params(params)),
    }
}

/// X gates taking |00⟩ to the computational state of `flavor`.
pub fn prepare_flavor(flavor: Flavor, n_flavors: usize) -> Result<Vec<GateOp>> {
    if flavor.index() >= n_flavors {
        return Err(Error::FlavorUnavailable {
            flavor: flavor.symbol(),
            context: match n_flavors {
                2 => "two-flavor circuits",
                3 => "three-flavor circuits",
                _ => "this circuit",
            },
        });
    }
    let n_qubits = if n_flavors <= 2 { 1 } else { 2 };
    Ok((0..n_qubits)
        .filter(|q| flavor.index() >> q & 1 == 1)
        .map(GateOp::x)
        .collect())
}

/// X for μ, U3(−2θ), S(φ), U3(2θ), measure.
pub fn build_two_flavor_circuit(p: &TwoFlavorParams, initial: Flavor) -> Result<Circuit> {
    check_baseline(p.baseline)?;
    let phi = phase_of(p.dm2, p.baseline, p.energy)?;
    let mut c = Circuit::new(1, 1)?;
    c.extend(prepare_flavor(initial, 2)?)?;
    c.extend([
        GateOp::ry(0, -2.0 * p.theta),
        GateOp::phase(0, phi),
        GateOp::ry(0, 2.0 * p.theta),
        GateOp::measure(0, 0),
    ])?;
    Ok(c)
}

/// S_A(φ₃₁) and S_B(φ₂₁); |11⟩ picks up φ₂₁ + φ₃₁.
pub fn three_flavor_evolution(dm2_21: f64, dm2_31: f64, baseline: f64, energy: f64) -> Result<Vec<GateOp>> {
    check_baseline(baseline)?;
    Ok(vec![
        GateOp::phase(QUBIT_A, phase_of(dm2_31, baseline, energy)?),
        GateOp::phase(QUBIT_B, phase_of(dm2_21, baseline, energy)?),
    ])
}

fn sandwich(
    n_qubits: usize,
    gate: &GateTemplateParams,
    initial: Flavor,
    n_flavors: usize,
    evolution: Vec<GateOp>,
) -> Result<Circuit> {
    let mut c = Circuit::new(n_qubits, n_qubits)?;
    c.extend(prepare_flavor(initial, n_flavors)?)?;
    c.extend(pmns3_gate(gate, Direction::Inverse))?;
    c.extend(evolution)?;
    c.extend(pmns3_gate(gate, Direction::Forward))?;
    c.extend([GateOp::measure(QUBIT_B, 0), GateOp::measure(QUBIT_A, 1)])?;
    Ok(c)
}

pub fn build_three_flavor_circuit(p: &ThreeFlavorParams, initial: Flavor) -> Result<Circuit> {
    let evolution = three_flavor_evolution(p.dm2_21, p.dm2_31, p.baseline, p.energy)?;
    sandwich(2, &p.gate, initial, 3, evolution)
}

/// Phases of the sterile evolution gates: `a` on S_A, `b` on S_B and `xor`
/// on the CNOT-conjugated S_B, which acts on |01⟩ and |10⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SterilePhases {
    pub a: f64,
    pub b: f64,
    pub xor: f64,
}

/// Solves b + xor = Φ₂₁, a + xor = Φ₃₁, a + b = Φ₄₁.
pub fn solve_sterile_phases(phi21: f64, phi31: f64, phi41: f64) -> SterilePhases {
    // Columns (a, b, xor); rows |01⟩, |10⟩, |11⟩.
    let m = Matrix3::new(
        0.0, 1.0, 1.0, //
        1.0, 0.0, 1.0, //
        1.0, 1.0, 0.0,
    );
    let x = m
        .lu()
        .solve(&Vector3::new(phi21, phi31, phi41))
        .expect("phase system is nonsingular");
    SterilePhases {
        a: x[0],
        b: x[1],
        xor: x[2],
    }
}

/// S_A(a), S_B(b), CNOT_AB, S_B(xor), CNOT_AB: basis phases
/// diag(1, e^{iΦ₂₁}, e^{iΦ₃₁}, e^{iΦ₄₁}).
pub fn build_sterile_evolution(p: &SterileParams) -> Result<Vec<GateOp>> {
    check_baseline(p.baseline)?;
    let s = solve_sterile_phases(
        phase_of(p.dm2_21, p.baseline, p.energy)?,
        phase_of(p.dm2_31, p.baseline, p.energy)?,
        phase_of(p.dm2_41, p.baseline, p.energy)?,
    );
    Ok(vec![
        GateOp::phase(QUBIT_A, s.a),
        GateOp::phase(QUBIT_B, s.b),
        GateOp::cnot(QUBIT_A, QUBIT_B),
        GateOp::phase(QUBIT_B, s.xor),
        GateOp::cnot(QUBIT_A, QUBIT_B),
    ])
}

pub fn build_sterile_circuit(p: &SterileParams, initial: Flavor) -> Result<Circuit> {
    sandwich(2, &p.gate, initial, 4, build_sterile_evolution(p)?)
}

/// Ancilla rotation ε with cos(ε/2) = exp(−γ·dL).
pub fn decoherence_angle(gamma: f64, step_baseline: f64) -> f64 {
    2.0 * (-gamma * step_baseline).exp().clamp(-1.0, 1.0).acos()
}

fn check_decoherence(p: &DecoherenceParams) -> Result<()> {
    if p.n_steps == 0 {
        return Err(Error::invalid("n_steps", "must be at least 1"));
    }
    if !(p.gamma >= 0.0) || !p.gamma.is_finite() {
        return Err(Error::invalid("gamma", "must be finite and non-negative"));
    }
    check_baseline(p.baseline)
}

fn decoherence_steps(p: &DecoherenceParams, ancilla_slot: usize) -> Result<Vec<GateOp>> {
    check_decoherence(p)?;
    let dl = p.baseline / p.n_steps as f64;
    let epsilon = decoherence_angle(p.gamma, dl);
    let step = three_flavor_evolution(p.dm2_21, p.dm2_31, dl, p.energy)?;
    let mut ops = Vec::with_capacity(p.n_steps * 5);
    for _ in 0..p.n_steps {
        ops.extend(step.iter().copied());
        ops.push(GateOp::ControlledU3 {
            control: QUBIT_B,
            target: ANCILLA,
            theta: epsilon,
            phi: 0.0,
            lambda: 0.0,
        });
        ops.push(GateOp::measure(ANCILLA, ancilla_slot));
        ops.push(GateOp::reset(ANCILLA));
    }
    Ok(ops)
}

/// `n_steps` repetitions of evolution over L/n_steps followed by the
/// ancilla interaction, measurement into slot 0 and reset. Acts on mass
/// states of qubits A and B with the ancilla as qubit 2.
pub fn build_decoherence_block(p: &DecoherenceParams) -> Result<Circuit> {
    let mut c = Circuit::new(3, 1)?;
    c.extend(decoherence_steps(p, 0)?)?;
    Ok(c)
}

/// Full decoherence experiment; the last ancilla outcome lands in slot 2.
pub fn build_decoherence_circuit(p: &DecoherenceParams, initial: Flavor) -> Result<Circuit> {
    let mut c = Circuit::new(3, 3)?;
    c.extend(prepare_flavor(initial, 3)?)?;
    c.extend(pmns3_gate(&p.gate, Direction::Inverse))?;
    c.extend(decoherence_steps(p, 2)?)?;
    c.extend(pmns3_gate(&p.gate, Direction::Forward))?;
    c.extend([GateOp::measure(QUBIT_B, 0), GateOp::measure(QUBIT_A, 1)])?;
    Ok(c)
}

/// Exact outcome distribution of the lowest `n_qubits` qubits at the end of
/// the circuit, started from |0…0⟩.
///
/// Circuits whose only non-unitary ops are trailing measurements run as a
/// statevector; anything else runs in density mode.
pub fn exact_probabilities(circuit: &Circuit, n_qubits: usize) -> Result<Vec<f64>> {
    let n = circuit.n_qubits();
    if n_qubits == 0 || n_qubits > n {
        return Err(Error::QubitOutOfRange {
            index: n_qubits,
            n_qubits: n,
        });
    }
    let split = circuit.first_non_unitary().unwrap_or(circuit.len());
    let trailing_measures = circuit.ops()[split..]
        .iter()
        .all(|op| matches!(op, GateOp::Measure { .. }));
    let full = if trailing_measures {
        let mut unitary = Circuit::new(n, 0)?;
        unitary.extend(circuit.ops()[..split].iter().copied())?;
        run_statevector(&unitary, &StateVector::zero(n)?)?.probabilities()
    } else {
        let rho = run_density(circuit, &density_from_state(&StateVector::zero(n)?))?;
        rho.probabilities()
    };
    let mask = (1usize << n_qubits) - 1;
    let mut out = vec![0.0; 1 << n_qubits];
    for (k, p) in full.into_iter().enumerate() {
        out[k & mask] += p;
    }
    Ok(out)
}
