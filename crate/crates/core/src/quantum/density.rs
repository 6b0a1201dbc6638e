//! Density-matrix evolution.
//!
//! Measurements act as non-selective projective channels ρ → Σₖ PₖρPₖ and
//! resets as measure-then-reinitialize, so a circuit evolves deterministically
//! with no sampling.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::circuit::Circuit;
use super::gate::GateOp;
use super::state::{check_qubit_count, StateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    rho: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn from_matrix(rho: DMatrix<C64>) -> Result<Self> {
        let dim = rho.nrows();
        if dim != rho.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch {
                expected: dim.next_power_of_two().max(2),
                found: rho.ncols(),
            });
        }
        let n_qubits = dim.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        Ok(Self { n_qubits, rho })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.rho
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.rho[(row, col)]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    /// tr(ρ²)
    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    /// max |ρ − ρ†|
    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Diagonal of ρ: outcome probabilities of a full register readout.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.rho.nrows()).map(|i| self.rho[(i, i)].re).collect()
    }

    pub fn apply_unitary(&mut self, op: &GateOp) -> Result<()> {
        let g = op.matrix(self.n_qubits)?;
        self.rho = &g * &self.rho * g.adjoint();
        Ok(())
    }

    /// Non-selective Z measurement of one qubit: zeroes every coherence
    /// between states that differ in that bit.
    pub fn dephase(&mut self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let bit = 1usize << qubit;
        let dim = self.rho.nrows();
        for r in 0..dim {
            for c in 0..dim {
                if (r ^ c) & bit != 0 {
                    self.rho[(r, c)] = C64::new(0.0, 0.0);
                }
            }
        }
        Ok(())
    }

    /// ρ → P₀ρP₀ + X P₁ρP₁ X on one qubit.
    pub fn reset(&mut self, qubit: usize) -> Result<()> {
        self.dephase(qubit)?;
        let bit = 1usize << qubit;
        let dim = self.rho.nrows();
        let mut out = DMatrix::zeros(dim, dim);
        for r in 0..dim {
            for c in 0..dim {
                out[(r & !bit, c & !bit)] += self.rho[(r, c)];
            }
        }
        self.rho = out;
        Ok(())
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        match *op {
            GateOp::Measure { qubit, .. } => self.dephase(qubit),
            GateOp::Reset { qubit } => self.reset(qubit),
            _ => self.apply_unitary(op),
        }
    }
}

/// ρ = |ψ⟩⟨ψ|
pub fn density_from_state(state: &StateVector) -> DensityMatrix {
    let v = nalgebra::DVector::from_column_slice(state.amplitudes());
    DensityMatrix {
        n_qubits: state.n_qubits(),
        rho: &v * v.adjoint(),
    }
}

/// Reduced density matrix over `keep`.
///
/// Kept qubits are renumbered in ascending order: the smallest kept index
/// becomes qubit 0 of the result.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    for &q in &kept {
        if q >= rho.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: rho.n_qubits,
            });
        }
    }
    let traced: Vec<usize> = (0..rho.n_qubits).filter(|q| !kept.contains(q)).collect();
    let n_kept = kept.len();
    let sub = 1usize << n_kept;

    let embed = |kept_index: usize, traced_index: usize| -> usize {
        let mut full = 0;
        for (k, &q) in kept.iter().enumerate() {
            if kept_index & (1 << k) != 0 {
                full |= 1 << q;
            }
        }
        for (k, &q) in traced.iter().enumerate() {
            if traced_index & (1 << k) != 0 {
                full |= 1 << q;
            }
        }
        full
    };

    let mut out = DMatrix::zeros(sub, sub);
    for r in 0..sub {
        for c in 0..sub {
            out[(r, c)] = (0..1usize << traced.len())
                .map(|t| rho.rho[(embed(r, t), embed(c, t))])
                .sum();
        }
    }
    Ok(DensityMatrix {
        n_qubits: n_kept,
        rho: out,
    })
}

/// Exact channel evolution of ρ through a circuit.
pub fn run_density(circuit: &Circuit, initial: &DensityMatrix) -> Result<DensityMatrix> {
    if initial.n_qubits != circuit.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            found: initial.n_qubits,
        });
    }
    let mut rho = initial.clone();
    for op in circuit.ops() {
        rho.apply(op)?;
    }
    Ok(rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{apply_gate, run_statevector};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pure_state_examples() {
        let rho = density_from_state(&StateVector::zero(1).unwrap());
        assert_eq!(rho.get(0, 0), c(1.0));
        assert_eq!(rho.get(1, 1), c(0.0));

        let plus = StateVector::from_amplitudes(vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)]).unwrap();
        let rho = density_from_state(&plus);
        for z in rho.matrix().iter() {
            assert!((z - c(0.5)).norm() < 1e-15);
        }
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!((rho.trace() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        // q1 = 0, q0 = 1: |0⟩⊗|1⟩ with the first factor the most significant
        let product = density_from_state(&StateVector::basis(2, 0b01).unwrap());
        let first = partial_trace(&product, &[1]).unwrap();
        assert_eq!(first.matrix(), &DMatrix::from_diagonal(&nalgebra::dvector![c(1.0), c(0.0)]));

        let bell = StateVector::from_amplitudes(vec![
            c(FRAC_1_SQRT_2),
            c(0.0),
            c(0.0),
            c(FRAC_1_SQRT_2),
        ])
        .unwrap();
        let reduced = partial_trace(&density_from_state(&bell), &[1]).unwrap();
        let half = DMatrix::from_diagonal(&nalgebra::dvector![c(0.5), c(0.5)]);
        assert!(max_diff(reduced.matrix(), &half) < 1e-15);

        assert!(matches!(partial_trace(&reduced, &[]), Err(Error::EmptyKeepSet)));
        assert!(partial_trace(&reduced, &[1]).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace_and_order() {
        let mut s = StateVector::zero(3).unwrap();
        for op in [
            GateOp::ry(0, 0.4),
            GateOp::ry(1, 1.1),
            GateOp::ry(2, 2.0),
            GateOp::cnot(2, 0),
            GateOp::phase(1, 0.3),
        ] {
            s.apply(&op).unwrap();
        }
        let rho = density_from_state(&s);
        let r02 = partial_trace(&rho, &[2, 0]).unwrap();
        assert!((r02.trace() - c(1.0)).norm() < 1e-12);
        // Diagonal of the reduced state is the marginal distribution of (q2, q0).
        let p = s.probabilities();
        for kept in 0..4 {
            let (b0, b2) = (kept & 1, (kept >> 1) & 1);
            let marginal: f64 = (0..8)
                .filter(|i| i & 1 == b0 && (i >> 2) & 1 == b2)
                .map(|i| p[i])
                .sum();
            assert!((r02.get(kept, kept).re - marginal).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_channel_dephases() {
        let plus = apply_gate(&StateVector::zero(1).unwrap(), &GateOp::ry(0, PI / 2.0)).unwrap();
        let mut circuit = Circuit::new(1, 1).unwrap();
        circuit.push(GateOp::measure(0, 0)).unwrap();
        let out = run_density(&circuit, &density_from_state(&plus)).unwrap();
        let half = DMatrix::from_diagonal(&nalgebra::dvector![c(0.5), c(0.5)]);
        assert!(max_diff(out.matrix(), &half) < 1e-15);
    }

    #[test]
    fn reset_channel_returns_to_zero() {
        let s = apply_gate(&StateVector::zero(2).unwrap(), &GateOp::ry(1, 2.0)).unwrap();
        let s = apply_gate(&s, &GateOp::ry(0, 0.7)).unwrap();
        let mut rho = density_from_state(&s);
        rho.reset(1).unwrap();
        let reduced = partial_trace(&rho, &[1]).unwrap();
        assert!((reduced.get(0, 0).re - 1.0).abs() < 1e-14);
        // The untouched qubit keeps its pure state.
        let other = partial_trace(&rho, &[0]).unwrap();
        assert!((other.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unitary_circuit_agrees_with_statevector() {
        let mut circuit = Circuit::new(3, 0).unwrap();
        circuit
            .extend([
                GateOp::u3(0, 0.3, 0.2, 0.1),
                GateOp::cnot(0, 1),
                GateOp::ControlledU3 {
                    control: 1,
                    target: 2,
                    theta: 1.2,
                    phi: -0.5,
                    lambda: 0.8,
                },
                GateOp::phase(2, 0.9),
                GateOp::ControlledPhase {
                    control: 2,
                    target: 0,
                    phi: 1.7,
                },
            ])
            .unwrap();
        let init = StateVector::zero(3).unwrap();
        let via_state = density_from_state(&run_statevector(&circuit, &init).unwrap());
        let via_rho = run_density(&circuit, &density_from_state(&init)).unwrap();
        assert!(max_diff(via_state.matrix(), via_rho.matrix()) < 1e-12);
        assert!(via_rho.hermiticity_defect() < 1e-12);
    }
}
