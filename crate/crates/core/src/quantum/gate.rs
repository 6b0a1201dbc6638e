use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// 2×2 complex matrix in row-major order.
pub type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// One operation of a circuit.
///
/// Angles are in radians. Qubit `i` is bit `i` of the basis index, so for a
/// two-qubit neutrino register the label |AB⟩ has A = qubit 1 and
/// B = qubit 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    U3 {
        qubit: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
    /// diag(1, e^{iφ})
    Phase { qubit: usize, phi: f64 },
    PauliX { qubit: usize },
    Cnot { control: usize, target: usize },
    ControlledU3 {
        control: usize,
        target: usize,
        theta: f64,
        phi: f64,
        lambda: f64,
    },
    ControlledPhase {
        control: usize,
        target: usize,
        phi: f64,
    },
    Measure { qubit: usize, slot: usize },
    Reset { qubit: usize },
}

/// U3(θ, φ, λ) as an explicit matrix.
pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [
        [C64::new(c, 0.0), -C64::from_polar(s, lambda)],
        [C64::from_polar(s, phi), C64::from_polar(c, phi + lambda)],
    ]
}

pub fn phase_matrix(phi: f64) -> Mat2 {
    [[ONE, ZERO], [ZERO, C64::from_polar(1.0, phi)]]
}

pub fn pauli_x_matrix() -> Mat2 {
    [[ZERO, ONE], [ONE, ZERO]]
}

impl GateOp {
    pub fn u3(qubit: usize, theta: f64, phi: f64, lambda: f64) -> Self {
        GateOp::U3 {
            qubit,
            theta,
            phi,
            lambda,
        }
    }

    /// Real rotation U3(θ, 0, 0).
    pub fn ry(qubit: usize, theta: f64) -> Self {
        Self::u3(qubit, theta, 0.0, 0.0)
    }

    pub fn phase(qubit: usize, phi: f64) -> Self {
        GateOp::Phase { qubit, phi }
    }

    pub fn x(qubit: usize) -> Self {
        GateOp::PauliX { qubit }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    pub fn measure(qubit: usize, slot: usize) -> Self {
        GateOp::Measure { qubit, slot }
    }

    pub fn reset(qubit: usize) -> Self {
        GateOp::Reset { qubit }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GateOp::U3 { .. } => "U3",
            GateOp::Phase { .. } => "Phase",
            GateOp::PauliX { .. } => "X",
            GateOp::Cnot { .. } => "CNOT",
            GateOp::ControlledU3 { .. } => "CU3",
            GateOp::ControlledPhase { .. } => "CPhase",
            GateOp::Measure { .. } => "Measure",
            GateOp::Reset { .. } => "Reset",
        }
    }

    pub fn is_unitary(&self) -> bool {
        !matches!(self, GateOp::Measure { .. } | GateOp::Reset { .. })
    }

    /// Every qubit the op touches, control first.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            GateOp::U3 { qubit, .. }
            | GateOp::Phase { qubit, .. }
            | GateOp::PauliX { qubit }
            | GateOp::Measure { qubit, .. }
            | GateOp::Reset { qubit } => vec![qubit],
            GateOp::Cnot { control, target }
            | GateOp::ControlledU3 {
                control, target, ..
            }
            | GateOp::ControlledPhase {
                control, target, ..
            } => vec![control, target],
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qubits = self.qubits();
        for &q in &qubits {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::ControlIsTarget(qubits[0]));
        }
        Ok(())
    }

    /// Decompose a unitary op into (optional control, target, 2×2 block).
    pub(crate) fn kernel(&self) -> Result<(Option<usize>, usize, Mat2)> {
        Ok(match *self {
            GateOp::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => (None, qubit, u3_matrix(theta, phi, lambda)),
            GateOp::Phase { qubit, phi } => (None, qubit, phase_matrix(phi)),
            GateOp::PauliX { qubit } => (None, qubit, pauli_x_matrix()),
            GateOp::Cnot { control, target } => (Some(control), target, pauli_x_matrix()),
            GateOp::ControlledU3 {
                control,
                target,
                theta,
                phi,
                lambda,
            } => (Some(control), target, u3_matrix(theta, phi, lambda)),
            GateOp::ControlledPhase {
                control,
                target,
                phi,
            } => (Some(control), target, phase_matrix(phi)),
            GateOp::Measure { .. } | GateOp::Reset { .. } => {
                return Err(Error::NonUnitaryOp(self.name()))
            }
        })
    }

    /// The exact operator inverse of a unitary op.
    pub fn inverse(&self) -> Result<GateOp> {
        Ok(match *self {
            GateOp::U3 {
                qubit,
                theta,
                phi,
                lambda,
            } => GateOp::U3 {
                qubit,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            GateOp::Phase { qubit, phi } => GateOp::Phase { qubit, phi: -phi },
            GateOp::ControlledU3 {
                control,
                target,
                theta,
                phi,
                lambda,
            } => GateOp::ControlledU3 {
                control,
                target,
                theta: -theta,
                phi: -lambda,
                lambda: -phi,
            },
            GateOp::ControlledPhase {
                control,
                target,
                phi,
            } => GateOp::ControlledPhase {
                control,
                target,
                phi: -phi,
            },
            op @ (GateOp::PauliX { .. } | GateOp::Cnot { .. }) => op,
            GateOp::Measure { .. } | GateOp::Reset { .. } => {
                return Err(Error::NonUnitaryOp(self.name()))
            }
        })
    }

    /// Full 2ⁿ×2ⁿ matrix of the op on an n-qubit register.
    pub fn matrix(&self, n_qubits: usize) -> Result<DMatrix<C64>> {
        self.validate(n_qubits)?;
        let (control, target, m) = self.kernel()?;
        let dim = 1usize << n_qubits;
        let tbit = 1usize << target;
        let mut out = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let active = control.is_none_or(|c| col & (1 << c) != 0);
            if !active {
                out[(col, col)] = ONE;
                continue;
            }
            let t = usize::from(col & tbit != 0);
            let base = col & !tbit;
            out[(base, col)] = m[0][t];
            out[(base | tbit, col)] = m[1][t];
        }
        Ok(out)
    }
}
