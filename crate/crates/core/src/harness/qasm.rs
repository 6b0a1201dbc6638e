use std::fmt::Write;

use crate::error::{Error, Result};
use crate::quantum::{Circuit, GateOp};

/// Angle with 12 significant digits, trailing zeros trimmed.
fn angle(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = 11 - x.abs().log10().floor() as i32;
    let s = format!("{:.*}", digits.max(0) as usize, x);
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".to_string()
    } else {
        s
    }
}

fn u1(out: &mut String, phi: f64, q: usize) {
    let _ = writeln!(out, "u1({}) q[{q}];", angle(phi));
}

fn u3(out: &mut String, theta: f64, phi: f64, lambda: f64, q: usize) {
    let _ = writeln!(out, "u3({},{},{}) q[{q}];", angle(theta), angle(phi), angle(lambda));
}

fn cx(out: &mut String, c: usize, t: usize) {
    let _ = writeln!(out, "cx q[{c}],q[{t}];");
}

/// Ops in the `qelib1.inc` gate set. Controlled U3 and controlled phase are
/// decomposed into u1, u3 and cx; the decompositions agree with the
/// original gates up to global phase.
pub fn lower(op: &GateOp) -> Vec<GateOp> {
    match *op {
        GateOp::ControlledU3 { control, target, theta, phi, lambda } => vec![
            GateOp::phase(control, (lambda + phi) / 2.0),
            GateOp::phase(target, (lambda - phi) / 2.0),
            GateOp::cnot(control, target),
            GateOp::u3(target, -theta / 2.0, 0.0, -(phi + lambda) / 2.0),
            GateOp::cnot(control, target),
            GateOp::u3(target, theta / 2.0, phi, 0.0),
        ],
        GateOp::ControlledPhase { control, target, phi } => vec![
            GateOp::phase(control, phi / 2.0),
            GateOp::cnot(control, target),
            GateOp::phase(target, -phi / 2.0),
            GateOp::cnot(control, target),
            GateOp::phase(target, phi / 2.0),
        ],
        other => vec![other],
    }
}

/// OpenQASM 2.0 text for the circuit.
pub fn export_qasm(circuit: &Circuit) -> Result<String> {
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(out, "qreg q[{}];", circuit.n_qubits());
    if circuit.n_slots() > 0 {
        let _ = writeln!(out, "creg c[{}];", circuit.n_slots());
    }
    for op in circuit.ops().iter().flat_map(lower) {
        match op {
            GateOp::U3 { qubit, theta, phi, lambda } => u3(&mut out, theta, phi, lambda, qubit),
            GateOp::Phase { qubit, phi } => u1(&mut out, phi, qubit),
            GateOp::PauliX { qubit } => {
                let _ = writeln!(out, "x q[{qubit}];");
            }
            GateOp::Cnot { control, target } => cx(&mut out, control, target),
            GateOp::Measure { qubit, slot } => {
                let _ = writeln!(out, "measure q[{qubit}] -> c[{slot}];");
            }
            GateOp::Reset { qubit } => {
                let _ = writeln!(out, "reset q[{qubit}];");
            }
            other => return Err(Error::NotExportable(other.name().to_string())),
        }
    }
    Ok(out)
}
