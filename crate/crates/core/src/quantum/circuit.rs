use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::gate::GateOp;
use super::state::check_qubit_count;
use crate::error::{Error, Result};

/// Ordered list of ops on a fixed register, validated as it is built.
///
/// A classical slot belongs to the first qubit measured into it; measuring
/// the same qubit into it again overwrites the bit (used for the repeated
/// ancilla readout of the decoherence block). A reset must directly follow
/// a measurement of the same qubit, or come before any other use of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_slots: usize,
    ops: Vec<GateOp>,
    slot_owner: Vec<Option<usize>>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_slots: usize) -> Result<Self> {
        check_qubit_count(n_qubits)?;
        Ok(Self {
            n_qubits,
            n_slots,
            ops: Vec::new(),
            slot_owner: vec![None; n_slots],
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn push(&mut self, op: GateOp) -> Result<&mut Self> {
        op.validate(self.n_qubits)?;
        match op {
            GateOp::Measure { qubit, slot } => {
                if slot >= self.n_slots {
                    return Err(Error::SlotOutOfRange {
                        slot,
                        n_slots: self.n_slots,
                    });
                }
                match self.slot_owner[slot] {
                    Some(owner) if owner != qubit => {
                        return Err(Error::SlotConflict {
                            slot,
                            first: owner,
                            second: qubit,
                        })
                    }
                    _ => self.slot_owner[slot] = Some(qubit),
                }
            }
            GateOp::Reset { qubit } => {
                let previous = self.ops.iter().rev().find(|o| o.qubits().contains(&qubit));
                match previous {
                    None | Some(GateOp::Measure { .. }) => {}
                    Some(_) => return Err(Error::MisplacedReset(qubit)),
                }
            }
            _ => {}
        }
        self.ops.push(op);
        Ok(self)
    }

    pub fn extend<I: IntoIterator<Item = GateOp>>(&mut self, ops: I) -> Result<&mut Self> {
        for op in ops {
            self.push(op)?;
        }
        Ok(self)
    }

    pub fn is_unitary(&self) -> bool {
        self.ops.iter().all(GateOp::is_unitary)
    }

    /// First classical slot that no measurement writes.
    pub fn unmeasured_slot(&self) -> Option<usize> {
        self.slot_owner.iter().position(Option::is_none)
    }

    /// Index of the first measurement or reset, if any.
    pub fn first_non_unitary(&self) -> Option<usize> {
        self.ops.iter().position(|o| !o.is_unitary())
    }

    /// Product of all op matrices (last op leftmost).
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        let dim = 1 << self.n_qubits;
        let mut acc = DMatrix::<C64>::identity(dim, dim);
        for op in &self.ops {
            acc = op.matrix(self.n_qubits)? * acc;
        }
        Ok(acc)
    }
}
