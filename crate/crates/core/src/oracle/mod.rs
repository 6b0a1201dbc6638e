//! Classical reference physics.
//!
//! Closed-form and matrix-product oscillation probabilities, matter,
//! non-standard-interaction and Lorentz-violating Hamiltonians, and the
//! Hermitian eigensolver they rely on. Circuit results are judged against
//! this module; nothing here touches the quantum simulator.
//!
//! Probability matrices are indexed `[initial][final]`.

mod eigen;
mod hamiltonian;
mod mixing;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub use eigen::{diagonalize_hermitian, nearest_orthogonal, HermitianEigen};
pub use hamiltonian::{
    build_lv_hamiltonian, build_matter_hamiltonian, effective_vacuum, matter_effective_params,
    probability_from_hamiltonian, Basis, EffectiveParams, EffectiveVacuum, Hamiltonian, LvParams,
    MatterParams,
};
pub use mixing::{plane_rotation, sterile_mixing, MixingMatrix, PRINTED_PMNS};

use crate::error::{Error, Result};
use crate::flavor::Flavor;
use crate::units::{phase_of, HALF_PHASE_PER_EV2_KM_PER_GEV};

/// P[α][β] for every flavor pair.
pub type ProbabilityMatrix = DMatrix<f64>;

/// Standard two-flavor formula 1 − sin²2θ·sin²(1.26693·Δm²L/E) for
/// survival, its complement for appearance.
pub fn two_flavor_probability(
    theta: f64,
    dm2: f64,
    baseline: f64,
    energy: f64,
    initial: Flavor,
    final_: Flavor,
) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    for f in [initial, final_] {
        if f.index() > 1 {
            return Err(Error::FlavorUnavailable {
                flavor: f.symbol(),
                context: "two-flavor oscillation",
            });
        }
    }
    let half = HALF_PHASE_PER_EV2_KM_PER_GEV * dm2 * baseline / energy;
    let survival = 1.0 - (2.0 * theta).sin().powi(2) * half.sin().powi(2);
    Ok(if initial == final_ {
        survival
    } else {
        1.0 - survival
    })
}

fn mass_phases(dm2: &[f64], n: usize, baseline: f64, energy: f64) -> Result<Vec<f64>> {
    if dm2.len() + 1 != n {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            found: dm2.len(),
        });
    }
    std::iter::once(Ok(0.0))
        .chain(dm2.iter().map(|&d| phase_of(d, baseline, energy)))
        .collect()
}

/// P_{αβ} = |Σᵢ U_{βi} e^{−iφᵢ} U*_{αi}|² with φᵢ = Δm²ᵢ₁L/(2E).
///
/// `dm2` holds the n−1 splittings relative to mass state 1.
pub fn n_flavor_probability(
    mixing: &MixingMatrix,
    dm2: &[f64],
    baseline: f64,
    energy: f64,
) -> Result<ProbabilityMatrix> {
    let n = mixing.dim();
    let phases = mass_phases(dm2, n, baseline, energy)?;
    Ok(DMatrix::from_fn(n, n, |alpha, beta| {
        (0..n)
            .map(|i| mixing.get(beta, i) * C64::from_polar(1.0, -phases[i]) * mixing.get(alpha, i).conj())
            .sum::<C64>()
            .norm_sqr()
    }))
}

/// Vacuum oscillation with mass-basis coherences ρᵢⱼ multiplied by
/// `damping[(i, j)]`.
///
/// P_{αβ} = Σᵢⱼ U_{βi} U*_{αi} U_{αj} U*_{βj} e^{−i(φᵢ−φⱼ)} Dᵢⱼ. With D ≡ 1
/// this is [`n_flavor_probability`].
pub fn decohered_probability(
    mixing: &MixingMatrix,
    dm2: &[f64],
    baseline: f64,
    energy: f64,
    damping: &DMatrix<f64>,
) -> Result<ProbabilityMatrix> {
    let n = mixing.dim();
    if damping.nrows() != n || damping.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: damping.nrows(),
        });
    }
    let phases = mass_phases(dm2, n, baseline, energy)?;
    let u = mixing.matrix();
    Ok(DMatrix::from_fn(n, n, |alpha, beta| {
        let mut total = C64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                total += u[(beta, i)]
                    * u[(alpha, i)].conj()
                    * u[(alpha, j)]
                    * u[(beta, j)].conj()
                    * C64::from_polar(damping[(i, j)], -(phases[i] - phases[j]));
            }
        }
        total.re
    }))
}
