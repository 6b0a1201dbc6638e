//! Cyclic Jacobi eigensolver for small complex Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const HERMITIAN_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigendecomposition H = U_m† · diag(values) · U_m.
///
/// Rows of `u_m` are the conjugated eigenvectors, so the columns of
/// `u_m.adjoint()` are the eigenvectors in the input basis.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub u_m: DMatrix<C64>,
}

impl HermitianEigen {
    /// Eigenvectors as columns.
    pub fn vectors(&self) -> DMatrix<C64> {
        self.u_m.adjoint()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let n = self.values.len();
        let diag = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                C64::new(self.values[r], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        self.u_m.adjoint() * diag * &self.u_m
    }
}

fn off_diagonal_norm(a: &DMatrix<C64>) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                sum += a[(r, c)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// Diagonalizes a Hermitian matrix; eigenvalues come back ascending.
///
/// Each rotation first removes the phase of the pivot a_pq with a diagonal
/// unitary, then applies an ordinary real Jacobi rotation in the (p, q)
/// plane. Sweeps stop once the off-diagonal Frobenius norm falls below
/// 1e-14 relative to the matrix norm.
pub fn diagonalize_hermitian(h: &DMatrix<C64>) -> Result<HermitianEigen> {
    let n = h.nrows();
    if n != h.ncols() || n == 0 {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: h.ncols(),
        });
    }
    let defect = (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    if defect > HERMITIAN_TOLERANCE * scale.max(1.0) {
        return Err(Error::MatrixProperty {
            property: "Hermitian",
            deviation: defect,
            tolerance: HERMITIAN_TOLERANCE,
        });
    }

    // Symmetrize so roundoff in the input cannot leak into imaginary eigenvalues.
    let mut a = (h + h.adjoint()).map(|z| z * 0.5);
    let mut v = DMatrix::<C64>::identity(n, n);
    let frob = a.norm();
    let threshold = 1e-14 * frob;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // J = W·R with W = diag(.., 1 at p, conj(phase) at q, ..)
                let mut j = DMatrix::<C64>::identity(n, n);
                j[(p, p)] = C64::new(c, 0.0);
                j[(p, q)] = C64::new(s, 0.0);
                j[(q, p)] = -phase.conj() * s;
                j[(q, q)] = phase.conj() * c;

                a = j.adjoint() * &a * &j;
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                v *= &j;
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(HermitianEigen {
        values,
        u_m: vectors.adjoint(),
    })
}

/// Nearest real orthogonal matrix in the Frobenius sense: M (MᵀM)^{-1/2}.
pub fn nearest_orthogonal(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let gram = (m.transpose() * m).map(|x| C64::new(x, 0.0));
    let eig = diagonalize_hermitian(&gram)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::MatrixProperty {
            property: "invertible",
            deviation: eig.values[0],
            tolerance: 0.0,
        });
    }
    let n = eig.values.len();
    let inv_sqrt = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(1.0 / eig.values[r].sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let root = eig.u_m.adjoint() * inv_sqrt * &eig.u_m;
    Ok(m * root.map(|z| z.re))
}
