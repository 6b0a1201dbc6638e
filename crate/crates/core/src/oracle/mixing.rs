use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::eigen::nearest_orthogonal;
use crate::error::{Error, Result};

const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Lepton mixing matrix, rows indexed by flavor and columns by mass state.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix(DMatrix<C64>);

/// Three-flavor mixing matrix as printed (six decimals), used as the fit
/// target for the PMNS gate. Orthogonal only to about 1e-6.
pub const PRINTED_PMNS: [[f64; 3]; 3] = [
    [0.821427, 0.550313, 0.149708],
    [-0.481513, 0.528538, 0.699138],
    [0.305618, -0.646377, 0.699138],
];

pub(crate) fn unitarity_defect(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    (m.adjoint() * m - id)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

impl MixingMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let n = m.nrows();
        if n != m.ncols() || !(2..=4).contains(&n) {
            return Err(Error::DimensionMismatch {
                expected: n.clamp(2, 4),
                found: m.ncols(),
            });
        }
        let deviation = unitarity_defect(&m);
        if deviation > UNITARITY_TOLERANCE {
            return Err(Error::MatrixProperty {
                property: "unitary",
                deviation,
                tolerance: UNITARITY_TOLERANCE,
            });
        }
        Ok(Self(m))
    }

    pub fn from_real(m: &DMatrix<f64>) -> Result<Self> {
        Self::new(m.map(|x| C64::new(x, 0.0)))
    }

    /// [[cos θ, sin θ], [−sin θ, cos θ]]
    pub fn two_flavor(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(c, 0.0),
                C64::new(s, 0.0),
                C64::new(-s, 0.0),
                C64::new(c, 0.0),
            ],
        ))
    }

    /// The printed three-flavor matrix projected onto the nearest orthogonal
    /// matrix (moves entries by at most 4.4e-7).
    pub fn pmns() -> Self {
        let printed = DMatrix::from_fn(3, 3, |r, c| PRINTED_PMNS[r][c]);
        let q = nearest_orthogonal(&printed).expect("printed PMNS matrix is well conditioned");
        Self::from_real(&q).expect("projection is orthogonal")
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn get(&self, flavor: usize, mass: usize) -> C64 {
        self.0[(flavor, mass)]
    }

    /// Real part, if the matrix is real to within `tol`.
    pub fn as_real(&self, tol: f64) -> Option<DMatrix<f64>> {
        if self.0.iter().all(|z| z.im.abs() <= tol) {
            Some(self.0.map(|z| z.re))
        } else {
            None
        }
    }

    /// Embeds an n×n real mixing matrix into the 4×4 two-qubit operator with
    /// the unused states on the identity.
    pub fn embed_real4(&self) -> Option<nalgebra::Matrix4<f64>> {
        let real = self.as_real(1e-12)?;
        let n = real.nrows();
        Some(nalgebra::Matrix4::from_fn(|r, c| {
            if r < n && c < n {
                real[(r, c)]
            } else if r == c {
                1.0
            } else {
                0.0
            }
        }))
    }
}

/// n×n rotation in the (i, j) plane by angle θ: R_ii = R_jj = cos θ,
/// R_ij = sin θ, R_ji = −sin θ.
pub fn plane_rotation(n: usize, i: usize, j: usize, theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    let mut r = DMatrix::identity(n, n);
    r[(i, i)] = c;
    r[(j, j)] = c;
    r[(i, j)] = s;
    r[(j, i)] = -s;
    r
}

/// Four-flavor mixing R₃₄·R₂₄·R₁₄·U₃, with U₃ the three-flavor matrix
/// embedded on the first three states.
pub fn sterile_mixing(theta14: f64, theta24: f64, theta34: f64) -> MixingMatrix {
    let three = MixingMatrix::pmns().as_real(0.0).expect("real");
    let mut u = DMatrix::<f64>::identity(4, 4);
    u.view_mut((0, 0), (3, 3)).copy_from(&three);
    let rot = plane_rotation(4, 2, 3, theta34)
        * plane_rotation(4, 1, 3, theta24)
        * plane_rotation(4, 0, 3, theta14);
    MixingMatrix::from_real(&(rot * u)).expect("product of rotations is orthogonal")
}
