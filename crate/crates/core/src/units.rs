//! Unit conventions.
//!
//! Public interfaces take Δm² in eV², baselines in km, energies in GeV and
//! electron densities in cm⁻³. Hamiltonians are expressed in eV²/GeV, the
//! natural unit of Δm²/2E. This module is the only place that converts
//! between those and dimensionless phases.

use crate::error::{Error, Result};

/// Δm²·L/(4E) in radians for Δm² = 1 eV², L = 1 km, E = 1 GeV
/// (1/(4ħc) with ħc from CODATA, to 6 significant figures).
pub const HALF_PHASE_PER_EV2_KM_PER_GEV: f64 = 1.26693;

/// Phase accumulated per km by a Hamiltonian eigenvalue of 1 eV²/GeV.
pub const PHASE_PER_KM_PER_EV2_PER_GEV: f64 = 4.0 * HALF_PHASE_PER_EV2_KM_PER_GEV;

/// Fermi constant G_F/(ħc)³ in GeV⁻² (CODATA 2018).
pub const FERMI_CONSTANT_GEV2: f64 = 1.166_378_8e-5;

/// ħc in GeV·cm (CODATA 2018).
pub const HBAR_C_GEV_CM: f64 = 1.973_269_804e-14;

/// √2·G_F·N_e in eV²/GeV for N_e = 1 cm⁻³ (≈ 1.2674e-28).
pub fn matter_potential_per_density() -> f64 {
    let gev = std::f64::consts::SQRT_2 * FERMI_CONSTANT_GEV2 * HBAR_C_GEV_CM.powi(3);
    // 1 eV²/GeV = 1e-18 GeV
    gev * 1e18
}

/// Charged-current matter potential √2·G_F·N_e in eV²/GeV.
pub fn matter_potential(electron_density: f64) -> f64 {
    matter_potential_per_density() * electron_density
}

/// Relative mass-state phase φ = Δm²L/(2E) in radians.
pub fn phase_of(dm2: f64, baseline: f64, energy: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    Ok(2.0 * HALF_PHASE_PER_EV2_KM_PER_GEV * dm2 * baseline / energy)
}

/// Vacuum Δm²/(2E) in eV²/GeV.
pub fn vacuum_splitting(dm2: f64, energy: f64) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    Ok(dm2 / (2.0 * energy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_splitting_or_baseline_gives_zero_phase() {
        assert_eq!(phase_of(0.0, 500.0, 1.0).unwrap(), 0.0);
        assert_eq!(phase_of(2.5e-3, 0.0, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn reference_phase() {
        // 2 × 1.26693 × 2.5e-3 × 500 / 1
        let phi = phase_of(2.5e-3, 500.0, 1.0).unwrap();
        assert!((phi - 3.167325).abs() < 1e-12);
    }

    #[test]
    fn constant_matches_codata() {
        // 1/(4ħc) with ħc = 1.973269804e-7 eV·m, expressed in eV²·km/GeV.
        let from_codata = 1e3 / (4.0 * 1e9 * 1.973_269_804e-7);
        assert!((from_codata - HALF_PHASE_PER_EV2_KM_PER_GEV).abs() < 5e-6);
    }

    #[test]
    fn matter_potential_at_avogadro_density() {
        // Standard 7.6325e-14 eV for one electron per nucleon at 1 g/cm³.
        let v_ev = matter_potential(6.022_140_76e23) * 1e-9;
        assert!((v_ev - 7.6325e-14).abs() < 1e-17, "{v_ev}");
    }

    #[test]
    fn rejects_non_positive_energy() {
        assert!(matches!(
            phase_of(1.0, 1.0, 0.0),
            Err(Error::NonPositiveEnergy(_))
        ));
        assert!(phase_of(1.0, 1.0, -2.0).is_err());
    }
}
