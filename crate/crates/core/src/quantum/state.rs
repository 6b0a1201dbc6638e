use num_complex::Complex64 as C64;
use rand::Rng;

use super::gate::{GateOp, Mat2};
use super::MAX_QUBITS;
use crate::error::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-10;

/// Pure state of a register of up to three qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<C64>,
}

pub(crate) fn check_qubit_count(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::UnsupportedQubitCount(n_qubits));
    }
    Ok(())
}

impl StateVector {
    /// |0…0⟩
    pub fn zero(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state with the given index.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::invalid(
                "index",
                format!("{index} is not a basis state of {n_qubits} qubits"),
            ));
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::BadAmplitudeCount { len });
        }
        let n_qubits = len.trailing_zeros() as usize;
        check_qubit_count(n_qubits)?;
        let state = Self {
            n_qubits,
            amplitudes,
        };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Born-rule probabilities of every basis state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Equality up to a global phase: |⟨ψ|φ⟩| ≈ 1.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> bool {
        self.n_qubits == other.n_qubits && (1.0 - self.inner(other).norm()).abs() < tol
    }

    /// In-place application of a unitary op.
    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n_qubits)?;
        let (control, target, m) = op.kernel()?;
        self.apply_kernel(control, target, &m);
        Ok(())
    }

    pub(crate) fn apply_kernel(&mut self, control: Option<usize>, target: usize, m: &Mat2) {
        let tbit = 1usize << target;
        let cmask = control.map_or(0, |c| 1usize << c);
        for i in 0..self.amplitudes.len() {
            if i & tbit != 0 || i & cmask != cmask {
                continue;
            }
            let j = i | tbit;
            let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
            self.amplitudes[i] = m[0][0] * a + m[0][1] * b;
            self.amplitudes[j] = m[1][0] * a + m[1][1] * b;
        }
    }

    /// Probability that `qubit` reads 1.
    pub fn probability_of_one(&self, qubit: usize) -> f64 {
        let bit = 1usize << qubit;
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projective Z measurement with collapse; returns the observed bit.
    pub fn measure<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<u8> {
        if qubit >= self.n_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                n_qubits: self.n_qubits,
            });
        }
        let p1 = self.probability_of_one(qubit).clamp(0.0, 1.0);
        let u: f64 = rng.gen();
        let outcome = u8::from(u < p1);
        self.project(qubit, outcome, if outcome == 1 { p1 } else { 1.0 - p1 });
        Ok(outcome)
    }

    fn project(&mut self, qubit: usize, outcome: u8, probability: f64) {
        let bit = 1usize << qubit;
        let scale = 1.0 / probability.sqrt();
        for (i, a) in self.amplitudes.iter_mut().enumerate() {
            if u8::from(i & bit != 0) == outcome {
                *a *= scale;
            } else {
                *a = C64::new(0.0, 0.0);
            }
        }
    }

    /// Measure, then flip back to |0⟩ if the qubit read 1.
    pub fn reset<R: Rng + ?Sized>(&mut self, qubit: usize, rng: &mut R) -> Result<()> {
        if self.measure(qubit, rng)? == 1 {
            self.apply(&GateOp::x(qubit))?;
        }
        Ok(())
    }
}

/// Functional form of [`StateVector::apply`].
pub fn apply_gate(state: &StateVector, op: &GateOp) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(op)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn close(a: C64, re: f64, im: f64) -> bool {
        (a - C64::new(re, im)).norm() < 1e-12
    }

    #[test]
    fn u3_examples() {
        let zero = StateVector::zero(1).unwrap();
        let same = apply_gate(&zero, &GateOp::ry(0, 0.0)).unwrap();
        assert_eq!(same, zero);

        let one = apply_gate(&zero, &GateOp::ry(0, PI)).unwrap();
        assert!(one.amplitudes()[0].norm() < 1e-15);
        assert!(close(one.amplitudes()[1], 1.0, 0.0));

        let third = apply_gate(&zero, &GateOp::ry(0, PI / 3.0)).unwrap();
        assert!(close(third.amplitudes()[0], 0.866_025_403_784_438_6, 0.0));
        assert!(close(third.amplitudes()[1], 0.5, 0.0));
    }

    #[test]
    fn phase_pi_negates_one() {
        let one = StateVector::basis(1, 1).unwrap();
        let out = apply_gate(&one, &GateOp::phase(0, PI)).unwrap();
        assert!(close(out.amplitudes()[1], -1.0, 0.0));
    }

    #[test]
    fn cnot_truth_table() {
        // |10⟩: first (most significant) qubit set
        let s = StateVector::basis(2, 0b10).unwrap();
        let out = apply_gate(&s, &GateOp::cnot(1, 0)).unwrap();
        assert!(close(out.amplitudes()[0b11], 1.0, 0.0));
        let s = StateVector::basis(2, 0b01).unwrap();
        let out = apply_gate(&s, &GateOp::cnot(1, 0)).unwrap();
        assert!(close(out.amplitudes()[0b01], 1.0, 0.0));
    }

    #[test]
    fn kernel_path_matches_embedded_matrix() {
        let ops = [
            GateOp::u3(2, 0.3, 1.2, -0.4),
            GateOp::cnot(0, 2),
            GateOp::ControlledU3 {
                control: 1,
                target: 0,
                theta: 2.1,
                phi: 0.2,
                lambda: 0.9,
            },
        ];
        let amps: Vec<C64> = (0..8)
            .map(|k| C64::new((k as f64).cos(), (k as f64 * 0.7).sin()))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let state =
            StateVector::from_amplitudes(amps.iter().map(|a| a / norm).collect()).unwrap();
        for op in ops {
            let direct = apply_gate(&state, &op).unwrap();
            let m = op.matrix(3).unwrap();
            let v = nalgebra::DVector::from_column_slice(state.amplitudes());
            let via_matrix = m * v;
            for (a, b) in direct.amplitudes().iter().zip(via_matrix.iter()) {
                assert!((a - b).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn measurement_collapses() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut s = apply_gate(&StateVector::zero(1).unwrap(), &GateOp::ry(0, PI / 2.0)).unwrap();
        let bit = s.measure(0, &mut rng).unwrap();
        assert!((s.probabilities()[bit as usize] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reset_returns_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let mut s =
                apply_gate(&StateVector::zero(2).unwrap(), &GateOp::ry(1, 1.3)).unwrap();
            s.reset(1, &mut rng).unwrap();
            assert!(s.probability_of_one(1) < 1e-15);
            assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(StateVector::zero(4).is_err());
        assert!(StateVector::zero(0).is_err());
        assert!(matches!(
            StateVector::from_amplitudes(vec![C64::new(1.0, 0.0); 3]),
            Err(Error::BadAmplitudeCount { len: 3 })
        ));
        assert!(matches!(
            StateVector::from_amplitudes(vec![C64::new(1.0, 0.0); 2]),
            Err(Error::NotNormalized(_))
        ));
        let mut s = StateVector::zero(1).unwrap();
        assert!(s.apply(&GateOp::measure(0, 0)).is_err());
        assert!(s.apply(&GateOp::x(1)).is_err());
    }

    fn random_state(n: usize, raw: &[(f64, f64)]) -> StateVector {
        let amps: Vec<C64> = raw[..1 << n].iter().map(|&(r, i)| C64::new(r, i)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        StateVector::from_amplitudes(amps.into_iter().map(|a| a / norm).collect()).unwrap()
    }

    proptest! {
        #[test]
        fn unitary_ops_preserve_norm(
            raw in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 8)
                .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)),
            theta in -7.0f64..7.0, phi in -7.0f64..7.0, lambda in -7.0f64..7.0,
            q in 0usize..3, c in 0usize..3,
        ) {
            let mut s = random_state(3, &raw);
            let mut ops = vec![GateOp::u3(q, theta, phi, lambda), GateOp::phase(q, phi), GateOp::x(q)];
            if c != q {
                ops.push(GateOp::cnot(c, q));
                ops.push(GateOp::ControlledU3 { control: c, target: q, theta, phi, lambda });
                ops.push(GateOp::ControlledPhase { control: c, target: q, phi: lambda });
            }
            for op in ops {
                s.apply(&op).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
            }
        }
    }
}
