//! Two-qubit readout noise: the channel, its calibration at zero baseline,
//! and its inversion.
//!
//! Outcomes are indexed 2A + B over (νe, νμ, ντ, νX) = (|00⟩, |01⟩, |10⟩,
//! |11⟩). `f1` is the flip rate of qubit A and `f2` that of qubit B. The
//! convention is observed = M · true.

use nalgebra::{Matrix2, Matrix4, Matrix4x2, Vector4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flavor::Flavor;
use crate::quantum::{shot_rng, CountsHistogram};

pub const MIN_CALIBRATION_SHOTS: u64 = 100;
const SINGULAR_DETERMINANT: f64 = 1e-10;
const CHANNEL_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadoutNoise {
    pub f1: f64,
    pub f2: f64,
}

impl ReadoutNoise {
    pub fn new(f1: f64, f2: f64) -> Result<Self> {
        let n = Self { f1, f2 };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        let (f1, f2) = (self.f1, self.f2);
        if !(f1 >= 0.0 && f2 >= 0.0) || !f1.is_finite() || !f2.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "flip rates must be finite and non-negative (f1 = {f1}, f2 = {f2})"
            )));
        }
        if f1 + f2 > 1.0 {
            return Err(Error::InvalidNoise(format!(
                "f1 + f2 = {} exceeds 1",
                f1 + f2
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// Second-order model with the f1² + f2² diagonal terms.
    #[default]
    SecondOrder,
    /// Independent bit flips, M = F(f1) ⊗ F(f2). Off-diagonal terms are first order.
    IndependentFlip,
}

/// Readout confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MitigationMatrix {
    matrix: Matrix4<f64>,
    noise: ReadoutNoise,
    model: NoiseModel,
}

/// Second-order matrix: diagonal (1−f1)(1−f2) + f1² + f2², A flip
/// (1−f2)f1 − f1², B flip (1−f1)f2 − f2², both f1·f2.
pub fn build_mitigation_matrix(noise: &ReadoutNoise) -> Result<MitigationMatrix> {
    build_mitigation_matrix_with(noise, NoiseModel::SecondOrder)
}

pub fn build_mitigation_matrix_with(noise: &ReadoutNoise, model: NoiseModel) -> Result<MitigationMatrix> {
    noise.validate()?;
    let ReadoutNoise { f1, f2 } = *noise;
    let matrix = match model {
        NoiseModel::SecondOrder => {
            let entry = [
                (1.0 - f1) * (1.0 - f2) + f1 * f1 + f2 * f2,
                (1.0 - f1) * f2 - f2 * f2,
                (1.0 - f2) * f1 - f1 * f1,
                f1 * f2,
            ];
            Matrix4::from_fn(|r, c| entry[r ^ c])
        }
        NoiseModel::IndependentFlip => {
            let flip = |f: f64| Matrix2::new(1.0 - f, f, f, 1.0 - f);
            flip(f1).kronecker(&flip(f2))
        }
    };
    Ok(MitigationMatrix {
        matrix,
        noise: *noise,
        model,
    })
}

impl MitigationMatrix {
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.matrix
    }

    pub fn noise(&self) -> ReadoutNoise {
        self.noise
    }

    pub fn model(&self) -> NoiseModel {
        self.model
    }

    /// Expected observed distribution M · p.
    pub fn apply(&self, p: &[f64; 4]) -> [f64; 4] {
        (self.matrix * Vector4::from_column_slice(p)).into()
    }

    /// Solves M · x = p_observed without clamping.
    pub fn solve(&self, observed: &[f64; 4]) -> Result<[f64; 4]> {
        let det = self.matrix.determinant();
        if det.abs() < SINGULAR_DETERMINANT {
            return Err(Error::SingularMitigation(det.abs()));
        }
        let x = self
            .matrix
            .lu()
            .solve(&Vector4::from_column_slice(observed))
            .ok_or(Error::SingularMitigation(det.abs()))?;
        Ok(x.into())
    }
}

fn two_bit(counts: &CountsHistogram) -> Result<()> {
    if counts.n_bits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: counts.n_bits(),
        });
    }
    Ok(())
}

/// Resamples every shot: outcome i becomes j with probability M[j][i].
///
/// Shot k (in outcome order) draws from its own stream of a seed derived
/// from `seed`, so the channel never reuses the sampling streams.
pub fn apply_noise_channel(counts: &CountsHistogram, noise: &ReadoutNoise, seed: u64) -> Result<CountsHistogram> {
    apply_channel(counts, &build_mitigation_matrix(noise)?, seed)
}

pub fn apply_channel(counts: &CountsHistogram, m: &MitigationMatrix, seed: u64) -> Result<CountsHistogram> {
    two_bit(counts)?;
    let mut out = [0u64; 4];
    let mut shot = 0u64;
    for (i, &n) in counts.outcome_counts().iter().enumerate() {
        let column = m.matrix.column(i);
        for _ in 0..n {
            let mut rng = shot_rng(seed ^ CHANNEL_SEED_MIX, shot);
            shot += 1;
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut j = 3;
            for (k, &p) in column.iter().enumerate() {
                acc += p;
                if u < acc {
                    j = k;
                    break;
                }
            }
            out[j] += 1;
        }
    }
    Ok(CountsHistogram::from_outcome_counts(2, &out))
}

/// Readout flip rates estimated from a zero-baseline run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub f1: f64,
    pub f2: f64,
    pub f1_err: f64,
    pub f2_err: f64,
    pub n_calibration_shots: u64,
    /// Both estimates within [0, 0.5].
    pub physical: bool,
}

impl Calibration {
    /// Noise with the estimates clamped to [0, 0.5].
    pub fn noise(&self) -> Result<ReadoutNoise> {
        ReadoutNoise::new(self.f1.clamp(0.0, 0.5), self.f2.clamp(0.0, 0.5))
    }
}

fn column_model(f1: f64, f2: f64, k: usize) -> (Vector4<f64>, Matrix4x2<f64>) {
    // Entries indexed by j ^ k: same, B flip, A flip, both.
    let values = [
        (1.0 - f1) * (1.0 - f2) + f1 * f1 + f2 * f2,
        f2 * (1.0 - f1 - f2),
        f1 * (1.0 - f1 - f2),
        f1 * f2,
    ];
    let grads = [
        [2.0 * f1 - (1.0 - f2), 2.0 * f2 - (1.0 - f1)],
        [-f2, 1.0 - f1 - 2.0 * f2],
        [1.0 - 2.0 * f1 - f2, -f1],
        [f2, f1],
    ];
    (
        Vector4::from_fn(|j, _| values[j ^ k]),
        Matrix4x2::from_fn(|j, c| grads[j ^ k][c]),
    )
}

/// Least-squares fit of (f1, f2) to all four outcome frequencies against
/// the matrix column of the prepared state, by Gauss–Newton.
///
/// Standard errors propagate the multinomial covariance of the observed
/// frequencies through the linearized estimator.
pub fn calibrate_from_zero_baseline(counts: &CountsHistogram, prepared: Flavor) -> Result<Calibration> {
    two_bit(counts)?;
    let n = counts.total_shots();
    if n < MIN_CALIBRATION_SHOTS {
        return Err(Error::TooFewCalibrationShots {
            got: n,
            min: MIN_CALIBRATION_SHOTS,
        });
    }
    let k = prepared.index();
    let p = Vector4::from_vec(counts.frequencies());
    let mut f = [p[k ^ 2] + p[k ^ 3], p[k ^ 1] + p[k ^ 3]];
    for _ in 0..100 {
        let (q, j) = column_model(f[0], f[1], k);
        let jtj = j.transpose() * j;
        let step = jtj
            .lu()
            .solve(&(j.transpose() * (p - q)))
            .ok_or_else(|| Error::invalid("calibration", "degenerate least-squares system"))?;
        f = [f[0] + step[0], f[1] + step[1]];
        if step.amax() < 1e-15 {
            break;
        }
    }
    let (q, j) = column_model(f[0], f[1], k);
    let jtj_inv = (j.transpose() * j)
        .try_inverse()
        .ok_or_else(|| Error::invalid("calibration", "degenerate least-squares system"))?;
    let a = jtj_inv * j.transpose();
    let sigma = (Matrix4::from_diagonal(&q) - q * q.transpose()) / n as f64;
    let cov = a * sigma * a.transpose();
    let physical = f.iter().all(|x| (0.0..=0.5).contains(x));
    Ok(Calibration {
        f1: f[0],
        f2: f[1],
        f1_err: cov[(0, 0)].max(0.0).sqrt(),
        f2_err: cov[(1, 1)].max(0.0).sqrt(),
        n_calibration_shots: n,
        physical,
    })
}

/// Corrected outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mitigated {
    pub probabilities: [f64; 4],
    /// M⁻¹ · p_observed before clamping.
    pub raw: [f64; 4],
    pub clamped: bool,
}

/// M⁻¹ · p_observed, clamped to [0, 1] and renormalized.
pub fn mitigate(counts: &CountsHistogram, m: &MitigationMatrix) -> Result<Mitigated> {
    two_bit(counts)?;
    let f = counts.frequencies();
    mitigate_distribution(&[f[0], f[1], f[2], f[3]], m)
}

pub fn mitigate_distribution(observed: &[f64; 4], m: &MitigationMatrix) -> Result<Mitigated> {
    let raw = m.solve(observed)?;
    let clamped = raw.iter().any(|&x| !(0.0..=1.0).contains(&x));
    let mut probabilities = raw.map(|x| x.clamp(0.0, 1.0));
    let total: f64 = probabilities.iter().sum();
    if total > 0.0 {
        probabilities.iter_mut().for_each(|x| *x /= total);
    }
    Ok(Mitigated {
        probabilities,
        raw,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference() -> MitigationMatrix {
        build_mitigation_matrix(&ReadoutNoise::new(0.13, 0.03).unwrap()).unwrap()
    }

    #[test]
    fn zero_noise_is_identity() {
        let m = build_mitigation_matrix(&ReadoutNoise::new(0.0, 0.0).unwrap()).unwrap();
        assert_eq!(*m.matrix(), Matrix4::identity());
    }

    #[test]
    fn matrix_entries() {
        let m = reference();
        // (0.87)(0.97) + 0.0169 + 0.0009
        assert!((m.matrix()[(0, 0)] - 0.8617).abs() < 1e-15);
        assert!((m.matrix()[(0, 2)] - (0.97 * 0.13 - 0.0169)).abs() < 1e-15);
        assert!((m.matrix()[(0, 1)] - (0.87 * 0.03 - 0.0009)).abs() < 1e-15);
        assert!((m.matrix()[(0, 3)] - 0.0039).abs() < 1e-15);
        assert!((m.matrix()[(1, 2)] - 0.0039).abs() < 1e-15);
        assert!((m.matrix()[(3, 1)] - m.matrix()[(0, 2)]).abs() < 1e-15);
    }

    #[test]
    fn matrix_eigenvalues() {
        // Characters of the XOR group: 1, 1 − 2f + 2f² per qubit, and
        // 1 − 2s + 2s² with s = f1 + f2.
        let (f1, f2) = (0.37, 0.41);
        let m = build_mitigation_matrix(&ReadoutNoise::new(f1, f2).unwrap()).unwrap();
        let mut got: Vec<f64> = m.matrix().symmetric_eigen().eigenvalues.iter().copied().collect();
        got.sort_by(f64::total_cmp);
        let q = |f: f64| 1.0 - 2.0 * f + 2.0 * f * f;
        let mut expected = vec![1.0, q(f1), q(f2), q(f1 + f2)];
        expected.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn invalid_noise() {
        assert!(ReadoutNoise::new(0.7, 0.4).is_err());
        assert!(ReadoutNoise::new(-0.01, 0.0).is_err());
        assert!(build_mitigation_matrix(&ReadoutNoise { f1: f64::NAN, f2: 0.0 }).is_err());
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let noise = ReadoutNoise::new(0.5, 0.1).unwrap();
        let m = build_mitigation_matrix_with(&noise, NoiseModel::IndependentFlip).unwrap();
        assert!(matches!(m.solve(&[0.25; 4]), Err(Error::SingularMitigation(_))));
    }

    #[test]
    fn channel_without_noise_keeps_counts() {
        let h = CountsHistogram::from_outcome_counts(2, &[10, 20, 30, 40]);
        let out = apply_noise_channel(&h, &ReadoutNoise::new(0.0, 0.0).unwrap(), 1).unwrap();
        assert_eq!(out, h);
    }

    #[test]
    fn channel_matches_matrix_column() {
        let n = 1_000_000u64;
        let h = CountsHistogram::from_outcome_counts(2, &[n, 0, 0, 0]);
        let out = apply_noise_channel(&h, &ReadoutNoise::new(0.13, 0.03).unwrap(), 9).unwrap();
        assert_eq!(out.total_shots(), n);
        let col = reference().matrix().column(0).into_owned();
        let mut chi2 = 0.0;
        for (j, &c) in out.outcome_counts().iter().enumerate() {
            let expected = col[j] * n as f64;
            chi2 += (c as f64 - expected).powi(2) / expected;
        }
        // 99.9% quantile of χ² with 3 degrees of freedom.
        assert!(chi2 < 16.27, "{chi2}");
        let stay = out.get("00") as f64 / n as f64;
        let sigma = (0.8617 * (1.0 - 0.8617) / n as f64).sqrt();
        assert!((stay - 0.8617).abs() < 4.0 * sigma);
    }

    #[test]
    fn channel_keeps_uniform_uniform() {
        let u = [0.25; 4];
        let out = reference().apply(&u);
        for x in out {
            assert!((x - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn calibration_noiseless() {
        let h = CountsHistogram::from_outcome_counts(2, &[0, 500, 0, 0]);
        let c = calibrate_from_zero_baseline(&h, Flavor::Mu).unwrap();
        assert!(c.f1.abs() < 1e-12 && c.f2.abs() < 1e-12);
        assert!(c.physical);
    }

    #[test]
    fn calibration_round_trip() {
        let noise = ReadoutNoise::new(0.13, 0.03).unwrap();
        for (prepared, seed) in [(Flavor::E, 4), (Flavor::Mu, 5), (Flavor::Tau, 6)] {
            let mut counts = [0u64; 4];
            counts[prepared.index()] = 100_000;
            let h = apply_noise_channel(&CountsHistogram::from_outcome_counts(2, &counts), &noise, seed).unwrap();
            let c = calibrate_from_zero_baseline(&h, prepared).unwrap();
            assert!((c.f1 - 0.13).abs() < 0.01 && (c.f2 - 0.03).abs() < 0.01, "{c:?}");
            assert!((c.f1 - 0.13).abs() < 4.0 * c.f1_err);
            assert!((c.f2 - 0.03).abs() < 4.0 * c.f2_err);
            assert!(c.f1_err > 0.0 && c.f1_err < 0.005);
        }
    }

    #[test]
    fn calibration_needs_shots() {
        let h = CountsHistogram::from_outcome_counts(2, &[99, 0, 0, 0]);
        assert!(matches!(
            calibrate_from_zero_baseline(&h, Flavor::E),
            Err(Error::TooFewCalibrationShots { got: 99, .. })
        ));
    }

    #[test]
    fn mitigation_identity_and_exact_inverse() {
        let id = build_mitigation_matrix(&ReadoutNoise::new(0.0, 0.0).unwrap()).unwrap();
        let h = CountsHistogram::from_outcome_counts(2, &[1, 2, 3, 4]);
        assert_eq!(mitigate(&h, &id).unwrap().probabilities, [0.1, 0.2, 0.3, 0.4]);
        let p = [0.5, 0.3, 0.2, 0.0];
        let r = mitigate_distribution(&reference().apply(&p), &reference()).unwrap();
        for k in 0..4 {
            assert!((r.raw[k] - p[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn mitigation_round_trip_sampled() {
        let n = 100_000u64;
        let p = [0.55, 0.25, 0.2, 0.0];
        let counts: Vec<u64> = p.iter().map(|x| (x * n as f64) as u64).collect();
        let h = apply_noise_channel(&CountsHistogram::from_outcome_counts(2, &counts), &ReadoutNoise::new(0.13, 0.03).unwrap(), 2).unwrap();
        let r = mitigate(&h, &reference()).unwrap();
        for k in 0..4 {
            // Generous bound: M⁻¹ inflates the binomial error by about 1.4.
            let sigma = 1.5 * (0.25 / n as f64).sqrt();
            assert!((r.raw[k] - p[k]).abs() < 4.0 * sigma, "{k}: {:?}", r.raw);
        }
    }

    #[test]
    fn clamping_is_flagged() {
        let r = mitigate_distribution(&[1.0, 0.0, 0.0, 0.0], &reference()).unwrap();
        assert!(r.clamped);
        assert!((r.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(r.raw.iter().any(|&x| x < 0.0));
    }

    #[test]
    fn independent_flip_model_differs() {
        let noise = ReadoutNoise::new(0.13, 0.03).unwrap();
        let m = build_mitigation_matrix_with(&noise, NoiseModel::IndependentFlip).unwrap();
        assert!((m.matrix()[(0, 0)] - 0.87 * 0.97).abs() < 1e-15);
        assert!((m.matrix()[(0, 0)] - reference().matrix()[(0, 0)]).abs() > 0.01);
    }

    proptest! {
        #[test]
        fn matrix_invariants(f1 in 0.0f64..1.0, frac in 0.0f64..1.0) {
            let f2 = (1.0 - f1) * frac;
            let m = *build_mitigation_matrix(&ReadoutNoise::new(f1, f2).unwrap()).unwrap().matrix();
            prop_assert!((m - m.transpose()).abs().max() == 0.0);
            for r in 0..4 {
                prop_assert!((m.row(r).sum() - 1.0).abs() < 1e-12);
            }
            prop_assert!(m.min() >= -1e-15);
        }

        #[test]
        fn inverse_is_exact(f1 in 0.0f64..0.3, f2 in 0.0f64..0.3) {
            let m = *build_mitigation_matrix(&ReadoutNoise::new(f1, f2).unwrap()).unwrap().matrix();
            let inv = m.try_inverse().unwrap();
            prop_assert!((inv * m - Matrix4::identity()).abs().max() < 1e-12);
        }

        #[test]
        fn diagonal_decreases(f1 in 0.0f64..0.3, f2 in 0.0f64..0.3, d in 1e-4f64..0.03) {
            let diag = |a: f64, b: f64| build_mitigation_matrix(&ReadoutNoise::new(a, b).unwrap()).unwrap().matrix()[(0, 0)];
            prop_assert!(diag(f1 + d, f2) < diag(f1, f2));
            prop_assert!(diag(f1, f2 + d) < diag(f1, f2));
        }
    }
}
