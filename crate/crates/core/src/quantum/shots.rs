use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::circuit::Circuit;
use super::gate::GateOp;
use super::state::StateVector;
use crate::error::{Error, Result};

/// RNG for one shot.
///
/// ChaCha8 keyed by `seed_from_u64(seed)`, with the shot index selecting the
/// ChaCha stream. Each shot draws from its own stream, so results do not
/// depend on how shots are scheduled, and distinct seeds never share streams.
pub fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// Shot tallies keyed by classical bit strings, highest slot first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountsHistogram {
    n_bits: usize,
    counts: BTreeMap<String, u64>,
    total_shots: u64,
}

impl CountsHistogram {
    pub fn new(n_bits: usize) -> Self {
        Self {
            n_bits,
            counts: BTreeMap::new(),
            total_shots: 0,
        }
    }

    /// Builds a histogram from per-outcome counts indexed by basis value.
    pub fn from_outcome_counts(n_bits: usize, counts: &[u64]) -> Self {
        let mut hist = Self::new(n_bits);
        for (outcome, &n) in counts.iter().enumerate() {
            hist.add(outcome, n);
        }
        hist
    }

    pub fn label(n_bits: usize, outcome: usize) -> String {
        (0..n_bits)
            .rev()
            .map(|b| if outcome >> b & 1 == 1 { '1' } else { '0' })
            .collect()
    }

    pub fn add(&mut self, outcome: usize, n: u64) {
        if n == 0 {
            return;
        }
        *self
            .counts
            .entry(Self::label(self.n_bits, outcome))
            .or_insert(0) += n;
        self.total_shots += n;
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn total_shots(&self) -> u64 {
        self.total_shots
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    pub fn get(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    /// Counts indexed by outcome value, length 2^n_bits.
    pub fn outcome_counts(&self) -> Vec<u64> {
        let mut out = vec![0; 1 << self.n_bits];
        for (label, &n) in &self.counts {
            let idx = usize::from_str_radix(label, 2).unwrap_or(0);
            out[idx] += n;
        }
        out
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total_shots.max(1) as f64;
        self.outcome_counts()
            .into_iter()
            .map(|n| n as f64 / total)
            .collect()
    }

    /// Histogram over the lowest `n_bits` slots only.
    pub fn marginal_low(&self, n_bits: usize) -> Self {
        let mask = (1usize << n_bits) - 1;
        let mut out = Self::new(n_bits);
        for (idx, n) in self.outcome_counts().into_iter().enumerate() {
            out.add(idx & mask, n);
        }
        out
    }

    pub fn merge(&mut self, other: &CountsHistogram) {
        for (label, &n) in &other.counts {
            *self.counts.entry(label.clone()).or_insert(0) += n;
        }
        self.total_shots += other.total_shots;
    }
}

/// Exact final state of a measurement-free circuit.
pub fn run_statevector(circuit: &Circuit, initial: &StateVector) -> Result<StateVector> {
    check_register(circuit, initial)?;
    if let Some(op) = circuit.ops().iter().find(|o| !o.is_unitary()) {
        return Err(Error::MeasurementInUnitaryRun(op.name()));
    }
    let mut state = initial.clone();
    for op in circuit.ops() {
        state.apply(op)?;
    }
    Ok(state)
}

fn check_register(circuit: &Circuit, initial: &StateVector) -> Result<()> {
    if circuit.n_qubits() != initial.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits(),
            found: initial.n_qubits(),
        });
    }
    Ok(())
}

/// Samples `n_shots` executions of the circuit with Born-rule collapse at
/// every measurement and reset.
pub fn run_shots(
    circuit: &Circuit,
    initial: &StateVector,
    n_shots: u64,
    seed: u64,
) -> Result<CountsHistogram> {
    check_register(circuit, initial)?;
    if n_shots == 0 {
        return Err(Error::ZeroShots);
    }
    if let Some(slot) = circuit.unmeasured_slot() {
        return Err(Error::UnmeasuredSlot(slot));
    }

    // The unitary prefix is deterministic, so evolve it once.
    let split = circuit.first_non_unitary().unwrap_or(circuit.len());
    let (prefix, suffix) = circuit.ops().split_at(split);
    let mut shared = initial.clone();
    for op in prefix {
        shared.apply(op)?;
    }

    let mut outcomes = vec![0u64; 1 << circuit.n_slots()];
    for shot in 0..n_shots {
        let mut rng = shot_rng(seed, shot);
        let mut state = shared.clone();
        let mut bits = 0usize;
        for op in suffix {
            match *op {
                GateOp::Measure { qubit, slot } => {
                    let b = state.measure(qubit, &mut rng)?;
                    bits = (bits & !(1 << slot)) | (usize::from(b) << slot);
                }
                GateOp::Reset { qubit } => state.reset(qubit, &mut rng)?,
                _ => state.apply(op)?,
            }
        }
        outcomes[bits] += 1;
    }
    Ok(CountsHistogram::from_outcome_counts(
        circuit.n_slots(),
        &outcomes,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn measured(n_qubits: usize, gates: &[GateOp]) -> Circuit {
        let mut c = Circuit::new(n_qubits, n_qubits).unwrap();
        c.extend(gates.iter().copied()).unwrap();
        for q in 0..n_qubits {
            c.push(GateOp::measure(q, q)).unwrap();
        }
        c
    }

    #[test]
    fn deterministic_outcome() {
        let c = measured(1, &[]);
        let h = run_shots(&c, &StateVector::zero(1).unwrap(), 1024, 0).unwrap();
        assert_eq!(h.get("0"), 1024);
        assert_eq!(h.total_shots(), 1024);
    }

    #[test]
    fn uniform_superposition_within_four_sigma() {
        let n = 100_000u64;
        let c = measured(1, &[GateOp::ry(0, PI / 2.0)]);
        let h = run_shots(&c, &StateVector::zero(1).unwrap(), n, 11).unwrap();
        let sigma = (0.25 / n as f64).sqrt();
        for label in ["0", "1"] {
            let f = h.get(label) as f64 / n as f64;
            assert!((f - 0.5).abs() < 4.0 * sigma, "{label}: {f}");
        }
    }

    #[test]
    fn same_seed_same_histogram() {
        let c = measured(2, &[GateOp::ry(0, 1.0), GateOp::cnot(0, 1), GateOp::ry(1, 0.4)]);
        let init = StateVector::zero(2).unwrap();
        let a = run_shots(&c, &init, 5000, 42).unwrap();
        let b = run_shots(&c, &init, 5000, 42).unwrap();
        let other = run_shots(&c, &init, 5000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, other);
    }

    #[test]
    fn labels_put_highest_slot_first() {
        let c = measured(2, &[GateOp::x(1)]);
        let h = run_shots(&c, &StateVector::zero(2).unwrap(), 10, 0).unwrap();
        assert_eq!(h.get("10"), 10);
        assert_eq!(h.outcome_counts(), vec![0, 0, 10, 0]);
    }

    #[test]
    fn error_paths() {
        let c = measured(1, &[]);
        let init = StateVector::zero(1).unwrap();
        assert!(matches!(run_shots(&c, &init, 0, 0), Err(Error::ZeroShots)));

        let mut c = Circuit::new(1, 2).unwrap();
        c.push(GateOp::measure(0, 0)).unwrap();
        assert!(matches!(
            run_shots(&c, &init, 10, 0),
            Err(Error::UnmeasuredSlot(1))
        ));
        assert!(matches!(
            run_statevector(&c, &init),
            Err(Error::MeasurementInUnitaryRun("Measure"))
        ));
    }

    #[test]
    fn mid_circuit_reset_is_simulated_per_shot() {
        // Measure q0 after H-like rotation, reset it, measure again: always 0.
        let mut c = Circuit::new(1, 2).unwrap();
        c.extend([
            GateOp::ry(0, PI / 2.0),
            GateOp::measure(0, 1),
            GateOp::reset(0),
            GateOp::measure(0, 0),
        ])
        .unwrap();
        let h = run_shots(&c, &StateVector::zero(1).unwrap(), 2000, 5).unwrap();
        assert_eq!(h.get("01") + h.get("11"), 0);
        assert!(h.get("00") > 800 && h.get("10") > 800);
    }

    #[test]
    fn marginal_and_merge() {
        let mut h = CountsHistogram::from_outcome_counts(3, &[1, 2, 3, 4, 5, 6, 7, 8]);
        let m = h.marginal_low(2);
        assert_eq!(m.outcome_counts(), vec![6, 8, 10, 12]);
        assert_eq!(m.total_shots(), 36);
        let copy = h.clone();
        h.merge(&copy);
        assert_eq!(h.total_shots(), 72);
        assert_eq!(h.get("111"), 16);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let c = Circuit::new(2, 0).unwrap();
        let init = StateVector::basis(2, 3).unwrap();
        assert_eq!(run_statevector(&c, &init).unwrap(), init);
    }
}
