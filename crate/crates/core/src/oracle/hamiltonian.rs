use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::eigen::{diagonalize_hermitian, HermitianEigen};
use super::mixing::MixingMatrix;
use super::ProbabilityMatrix;
use crate::error::{Error, Result};
use crate::units::{matter_potential, vacuum_splitting, PHASE_PER_KM_PER_EV2_PER_GEV};

const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    Flavor,
    Mass,
}

/// Hermitian Hamiltonian in eV²/GeV.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    matrix: DMatrix<C64>,
    basis: Basis,
}

fn hermiticity_defect(m: &DMatrix<C64>) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn check_hermitian(m: &DMatrix<C64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    let deviation = hermiticity_defect(m);
    if deviation > HERMITIAN_TOLERANCE {
        return Err(Error::MatrixProperty {
            property: "Hermitian",
            deviation,
            tolerance: HERMITIAN_TOLERANCE,
        });
    }
    Ok(())
}

fn check_dim(m: &DMatrix<C64>, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    Ok(())
}

impl Hamiltonian {
    pub fn new(matrix: DMatrix<C64>, basis: Basis) -> Result<Self> {
        check_hermitian(&matrix)?;
        Ok(Self { matrix, basis })
    }

    /// diag(0, Δm²₂₁/2E, …) in the mass basis.
    pub fn vacuum_mass(dm2: &[f64], energy: f64) -> Result<Self> {
        let mut diag = vec![C64::new(0.0, 0.0)];
        for &d in dm2 {
            diag.push(C64::new(vacuum_splitting(d, energy)?, 0.0));
        }
        Ok(Self {
            matrix: DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)),
            basis: Basis::Mass,
        })
    }

    /// U·diag(0, Δm²/2E, …)·U† in the flavor basis.
    pub fn vacuum(mixing: &MixingMatrix, dm2: &[f64], energy: f64) -> Result<Self> {
        let n = mixing.dim();
        if dm2.len() + 1 != n {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                found: dm2.len(),
            });
        }
        let mass = Self::vacuum_mass(dm2, energy)?;
        let u = mixing.matrix();
        let m = u * mass.matrix * u.adjoint();
        // Exact Hermitian symmetrization of the roundoff in the product.
        let m = (&m + m.adjoint()).map(|z| z * 0.5);
        Ok(Self {
            matrix: m,
            basis: Basis::Flavor,
        })
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn diagonalize(&self) -> Result<HermitianEigen> {
        diagonalize_hermitian(&self.matrix)
    }

    /// H + c·I.
    pub fn shifted(&self, c: f64) -> Self {
        let n = self.dim();
        Self {
            matrix: &self.matrix + DMatrix::<C64>::identity(n, n) * C64::new(c, 0.0),
            basis: self.basis,
        }
    }
}

/// Constant-density matter with a non-standard ε_ee coupling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatterParams {
    /// N_e in cm⁻³.
    pub electron_density: f64,
    pub nsi_epsilon_ee: f64,
}

impl MatterParams {
    pub fn new(electron_density: f64, nsi_epsilon_ee: f64) -> Result<Self> {
        if !(electron_density >= 0.0) || !electron_density.is_finite() {
            return Err(Error::invalid(
                "electron_density",
                format!("must be finite and non-negative (got {electron_density})"),
            ));
        }
        if !nsi_epsilon_ee.is_finite() {
            return Err(Error::invalid("nsi_epsilon_ee", "must be finite"));
        }
        Ok(Self {
            electron_density,
            nsi_epsilon_ee,
        })
    }

    /// √2·G_F·N_e in eV²/GeV.
    pub fn potential(&self) -> f64 {
        matter_potential(self.electron_density)
    }
}

/// Two-flavor MSW mixing angle and eigenvalue splitting (eV²/GeV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub theta_m: f64,
    pub lambda: f64,
}

/// θ_m = ½·atan2(Δ sin2θ₀, Δ cos2θ₀ − V), λ = √((Δ cos2θ₀ − V)² + Δ² sin²2θ₀)
/// with Δ = Δm²/2E and V = √2·G_F·N_e.
pub fn matter_effective_params(
    theta0: f64,
    dm2: f64,
    energy: f64,
    electron_density: f64,
) -> Result<EffectiveParams> {
    let delta = vacuum_splitting(dm2, energy)?;
    let v = MatterParams::new(electron_density, 0.0)?.potential();
    let (s2, c2) = (2.0 * theta0).sin_cos();
    let x = delta * c2 - v;
    let y = delta * s2;
    Ok(EffectiveParams {
        theta_m: 0.5 * y.atan2(x),
        lambda: x.hypot(y),
    })
}

/// U·diag(0, Δm²/2E, …)·U† + V·diag(1 + ε_ee, 0, …).
pub fn build_matter_hamiltonian(
    mixing: &MixingMatrix,
    dm2: &[f64],
    energy: f64,
    matter: &MatterParams,
) -> Result<Hamiltonian> {
    let mut h = Hamiltonian::vacuum(mixing, dm2, energy)?;
    h.matrix[(0, 0)] += C64::new(matter.potential() * (1.0 + matter.nsi_epsilon_ee), 0.0);
    Ok(h)
}

/// Lorentz-violating coefficient matrices.
///
/// Each term enters the Hamiltonian in eV²/GeV once multiplied by the
/// matching power of E in GeV: a3 + c4·E + a5·E² + c6·E³.
#[derive(Debug, Clone, PartialEq)]
pub struct LvParams {
    pub a3: DMatrix<C64>,
    pub c4: DMatrix<C64>,
    pub a5: DMatrix<C64>,
    pub c6: DMatrix<C64>,
}

impl LvParams {
    pub fn zero(n: usize) -> Self {
        let z = DMatrix::zeros(n, n);
        Self {
            a3: z.clone(),
            c4: z.clone(),
            a5: z.clone(),
            c6: z,
        }
    }

    fn terms(&self) -> [(&'static str, &DMatrix<C64>); 4] {
        [
            ("a3", &self.a3),
            ("c4", &self.c4),
            ("a5", &self.a5),
            ("c6", &self.c6),
        ]
    }
}

/// H_vac + a3 + c4·E + a5·E² + c6·E³.
pub fn build_lv_hamiltonian(h_vac: &Hamiltonian, lv: &LvParams, energy: f64) -> Result<Hamiltonian> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    let n = h_vac.dim();
    let mut m = h_vac.matrix.clone();
    for (k, (_, term)) in lv.terms().into_iter().enumerate() {
        check_dim(term, n)?;
        check_hermitian(term)?;
        m += term * C64::new(energy.powi(k as i32), 0.0);
    }
    Hamiltonian::new(m, h_vac.basis)
}

/// Flavor transition probabilities after propagating `baseline` km under a
/// flavor-basis Hamiltonian: S = U_m† e^{−iΛ·L} U_m, P[α][β] = |S_βα|².
pub fn probability_from_hamiltonian(h: &Hamiltonian, baseline: f64) -> Result<ProbabilityMatrix> {
    if h.basis != Basis::Flavor {
        return Err(Error::invalid("hamiltonian", "expected a flavor-basis Hamiltonian"));
    }
    if !(baseline >= 0.0) {
        return Err(Error::NegativeBaseline(baseline));
    }
    // The trace only contributes a global phase.
    let n = h.dim();
    let mean = h.matrix.trace().re / n as f64;
    let eig = diagonalize_hermitian(&h.shifted(-mean).matrix)?;
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        eig.values
            .iter()
            .map(|&l| C64::from_polar(1.0, -l * PHASE_PER_KM_PER_EV2_PER_GEV * baseline)),
    ));
    let s = eig.u_m.adjoint() * phases * &eig.u_m;
    Ok(DMatrix::from_fn(n, n, |alpha, beta| s[(beta, alpha)].norm_sqr()))
}

/// Vacuum-equivalent description of a constant Hamiltonian: the mixing
/// matrix of its eigenvectors and the splittings Δm²_eff = 2E·(λ_k − λ_1).
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveVacuum {
    pub mixing: MixingMatrix,
    pub dm2: Vec<f64>,
}

/// Eigenvectors of `h` as mixing-matrix columns in ascending eigenvalue
/// order, each rephased so its largest component is real and positive.
pub fn effective_vacuum(h: &Hamiltonian, energy: f64) -> Result<EffectiveVacuum> {
    if !(energy > 0.0) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    if h.basis != Basis::Flavor {
        return Err(Error::invalid("hamiltonian", "expected a flavor-basis Hamiltonian"));
    }
    let eig = h.diagonalize()?;
    let mut vectors = eig.vectors();
    for mut col in vectors.column_iter_mut() {
        let pivot = col
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let rephase = pivot.conj() / pivot.norm();
        col.iter_mut().for_each(|z| *z *= rephase);
    }
    let dm2 = eig.values[1..]
        .iter()
        .map(|&l| 2.0 * energy * (l - eig.values[0]))
        .collect();
    Ok(EffectiveVacuum {
        mixing: MixingMatrix::new(vectors)?,
        dm2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flavor::Flavor;
    use crate::oracle::{n_flavor_probability, two_flavor_probability};
    use std::f64::consts::FRAC_PI_4;

    fn max_abs<T: Copy + Into<C64>>(m: &DMatrix<T>) -> f64 {
        m.iter().map(|&x| x.into().norm()).fold(0.0, f64::max)
    }

    fn doubly_stochastic(p: &ProbabilityMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..p.nrows() {
            worst = worst.max((p.row(r).sum() - 1.0).abs());
            worst = worst.max((p.column(r).sum() - 1.0).abs());
        }
        worst
    }

    /// exp(A) by scaling and squaring with a 24-term Taylor series.
    fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
        let n = a.nrows();
        let norm = max_abs(a) * n as f64;
        let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
        let scaled = a / C64::new(2f64.powi(squarings as i32), 0.0);
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..24 {
            term = &term * &scaled / C64::new(k as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    fn three_flavor_vacuum(e: f64) -> Hamiltonian {
        Hamiltonian::vacuum(&MixingMatrix::pmns(), &[7.5e-5, 2.5e-3], e).unwrap()
    }

    fn heavier_state_angle(h: &Hamiltonian) -> f64 {
        let v = h.diagonalize().unwrap().vectors();
        v[(0, 1)].norm().atan2(v[(1, 1)].norm())
    }

    #[test]
    fn vacuum_hamiltonian_matches_n_flavor_probability() {
        let u = MixingMatrix::pmns();
        for k in 0..40 {
            let l = 37.0 * k as f64;
            let h = three_flavor_vacuum(0.8);
            let a = probability_from_hamiltonian(&h, l).unwrap();
            let b = n_flavor_probability(&u, &[7.5e-5, 2.5e-3], l, 0.8).unwrap();
            assert!(max_abs(&(&a - b)) < 1e-10);
            assert!(doubly_stochastic(&a) < 1e-10);
        }
    }

    #[test]
    fn two_flavor_paths_agree() {
        let theta = 0.61;
        let u = MixingMatrix::two_flavor(theta);
        let h = Hamiltonian::vacuum(&u, &[2.4e-3], 1.3).unwrap();
        for k in 0..30 {
            let l = 45.0 * k as f64;
            let p = probability_from_hamiltonian(&h, l).unwrap();
            let q = n_flavor_probability(&u, &[2.4e-3], l, 1.3).unwrap();
            let closed = two_flavor_probability(theta, 2.4e-3, l, 1.3, Flavor::E, Flavor::Mu).unwrap();
            assert!((p[(0, 1)] - closed).abs() < 1e-10);
            assert!((q[(0, 1)] - closed).abs() < 1e-10);
        }
    }

    #[test]
    fn trivial_evolutions() {
        let h = three_flavor_vacuum(1.0);
        let id = DMatrix::<f64>::identity(3, 3);
        assert!(max_abs(&(probability_from_hamiltonian(&h, 0.0).unwrap() - &id)) < 1e-14);
        let diag = Hamiltonian::new(
            DMatrix::from_diagonal(&nalgebra::dvector![C64::new(0.1, 0.0), C64::new(-2.0, 0.0), C64::new(0.7, 0.0)]),
            Basis::Flavor,
        )
        .unwrap();
        assert!(max_abs(&(probability_from_hamiltonian(&diag, 900.0).unwrap() - &id)) < 1e-14);
        assert!(probability_from_hamiltonian(&h, -1.0).is_err());
        let mass = Hamiltonian::vacuum_mass(&[1e-3], 1.0).unwrap();
        assert!(probability_from_hamiltonian(&mass, 1.0).is_err());
    }

    #[test]
    fn global_shift_leaves_probabilities_unchanged() {
        let h = three_flavor_vacuum(0.5);
        for c in [-3.0, 1e-4, 17.0] {
            let a = probability_from_hamiltonian(&h, 650.0).unwrap();
            let b = probability_from_hamiltonian(&h.shifted(c), 650.0).unwrap();
            assert!(max_abs(&(a - b)) < 1e-12);
        }
    }

    #[test]
    fn matter_vacuum_limit_and_nsi() {
        let u = MixingMatrix::pmns();
        let dm2 = [7.5e-5, 2.5e-3];
        let vac = Hamiltonian::vacuum(&u, &dm2, 2.0).unwrap();
        let zero = build_matter_hamiltonian(&u, &dm2, 2.0, &MatterParams::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(zero, vac);

        let n_e = 2e24;
        let std = build_matter_hamiltonian(&u, &dm2, 2.0, &MatterParams::new(n_e, 0.0).unwrap()).unwrap();
        let cancelled = build_matter_hamiltonian(&u, &dm2, 2.0, &MatterParams::new(n_e, -1.0).unwrap()).unwrap();
        assert_eq!(cancelled.matrix(), vac.matrix());

        let eps = 0.37;
        let shifted = build_matter_hamiltonian(&u, &dm2, 2.0, &MatterParams::new(n_e, eps).unwrap()).unwrap();
        let diff = shifted.matrix() - std.matrix();
        let v = matter_potential(n_e);
        assert!((diff[(0, 0)].re - v * eps).abs() <= 1e-15 * v);
        for (k, z) in diff.iter().enumerate() {
            if k != 0 {
                assert_eq!(*z, C64::new(0.0, 0.0));
            }
        }
        assert!(MatterParams::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn msw_closed_form_matches_diagonalization() {
        let (theta0, dm2, e): (f64, f64, f64) = (0.3, 7.5e-5, 0.005);
        let u = MixingMatrix::two_flavor(theta0);
        for n_e in [0.0, 1e20, 1e23, 1e25, 3e25, 1e27] {
            let eff = matter_effective_params(theta0, dm2, e, n_e).unwrap();
            let h = build_matter_hamiltonian(&u, &[dm2], e, &MatterParams::new(n_e, 0.0).unwrap()).unwrap();
            let eig = h.diagonalize().unwrap();
            assert!((eig.values[1] - eig.values[0] - eff.lambda).abs() < 1e-9 * eff.lambda.max(1.0));
            assert!((heavier_state_angle(&h) - eff.theta_m).abs() < 1e-9, "N_e = {n_e}");
        }
        let vac = matter_effective_params(theta0, dm2, e, 0.0).unwrap();
        assert!((vac.theta_m - theta0).abs() < 1e-15);
        assert!((vac.lambda - dm2 / (2.0 * e)).abs() < 1e-18);
    }

    #[test]
    fn msw_resonance_and_monotonicity() {
        let (theta0, dm2, e): (f64, f64, f64) = (0.3, 7.5e-5, 0.005);
        let delta = dm2 / (2.0 * e);
        let n_res = delta * (2.0 * theta0).cos() / matter_potential(1.0);
        let res = matter_effective_params(theta0, dm2, e, n_res).unwrap();
        assert!((res.theta_m - FRAC_PI_4).abs() < 1e-9);
        let mut last = 0.0;
        for k in 0..200 {
            let n_e = n_res * 10f64.powf(-4.0 + 8.0 * k as f64 / 199.0);
            let t = matter_effective_params(theta0, dm2, e, n_e).unwrap().theta_m;
            assert!(t >= last);
            last = t;
        }
        assert!((last - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
    }

    #[test]
    fn lv_zero_and_uniform_shift() {
        let h = three_flavor_vacuum(1.5);
        assert_eq!(build_lv_hamiltonian(&h, &LvParams::zero(3), 1.5).unwrap(), h);
        let kappa = 3e-4;
        let mut lv = LvParams::zero(3);
        lv.c4 = DMatrix::identity(3, 3) * C64::new(kappa, 0.0);
        let shifted = build_lv_hamiltonian(&h, &lv, 1.5).unwrap();
        let a = h.diagonalize().unwrap().values;
        let b = shifted.diagonalize().unwrap().values;
        for (x, y) in a.iter().zip(&b) {
            assert!((y - x - kappa * 1.5).abs() < 1e-15);
        }
        let pa = probability_from_hamiltonian(&h, 800.0).unwrap();
        let pb = probability_from_hamiltonian(&shifted, 800.0).unwrap();
        assert!(max_abs(&(pa - pb)) < 1e-12);
    }

    #[test]
    fn lv_rejects_bad_input() {
        let h = three_flavor_vacuum(1.0);
        let mut lv = LvParams::zero(2);
        assert!(matches!(build_lv_hamiltonian(&h, &lv, 1.0), Err(Error::DimensionMismatch { .. })));
        lv = LvParams::zero(3);
        lv.a5[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(build_lv_hamiltonian(&h, &lv, 1.0), Err(Error::MatrixProperty { .. })));
    }

    #[test]
    fn lv_evolution_matches_matrix_exponential() {
        let h = three_flavor_vacuum(0.9);
        let mut lv = LvParams::zero(3);
        let z = C64::new(2e-4, -1.5e-4);
        lv.a3[(0, 2)] = z;
        lv.a3[(2, 0)] = z.conj();
        lv.a3[(1, 1)] = C64::new(-4e-4, 0.0);
        lv.c6[(0, 1)] = C64::new(0.0, 3e-5);
        lv.c6[(1, 0)] = C64::new(0.0, -3e-5);
        let hl = build_lv_hamiltonian(&h, &lv, 0.9).unwrap();
        for l in [0.0, 120.0, 1300.0, 9000.0] {
            let p = probability_from_hamiltonian(&hl, l).unwrap();
            let s = expm(&(hl.matrix() * C64::new(0.0, -PHASE_PER_KM_PER_EV2_PER_GEV * l)));
            let brute = DMatrix::from_fn(3, 3, |a, b| s[(b, a)].norm_sqr());
            assert!(max_abs(&(p - brute)) < 1e-9, "L = {l}");
        }
    }

    #[test]
    fn effective_vacuum_reproduces_probabilities() {
        let u = MixingMatrix::pmns();
        let dm2 = [7.5e-5, 2.5e-3];
        let e = 3.0;
        let h = build_matter_hamiltonian(&u, &dm2, e, &MatterParams::new(1.5e24, 0.2).unwrap()).unwrap();
        let eff = effective_vacuum(&h, e).unwrap();
        assert!(eff.mixing.as_real(1e-12).is_some());
        for l in [0.0, 300.0, 1300.0, 4000.0] {
            let a = probability_from_hamiltonian(&h, l).unwrap();
            let b = n_flavor_probability(&eff.mixing, &eff.dm2, l, e).unwrap();
            assert!(max_abs(&(a - b)) < 1e-10);
        }
    }
}
