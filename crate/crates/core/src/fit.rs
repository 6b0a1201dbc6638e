//! Six-angle two-CNOT gate template for real two-qubit mixing matrices.
//!
//! The forward template applies, in order,
//!
//! ```text
//! U3_A(α − π/2) U3_B(β − π/2) CNOT_AB U3_A(γ) U3_B(δ) CNOT_AB U3_A(ε + π/2) U3_B(ζ + π/2)
//! ```
//!
//! with every U3 a real rotation U3(θ, 0, 0), A = qubit 1, B = qubit 0 and
//! CNOT_AB controlled on A. The fixed quarter turns on the outer layers are
//! part of the template; the reference best-fit angles are defined
//! relative to them.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Matrix4, SMatrix};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{MixingMatrix, PRINTED_PMNS};
use crate::quantum::GateOp;

const QUBIT_A: usize = 1;
const QUBIT_B: usize = 0;

/// Target orthogonality tolerance. Loose enough to accept the six-decimal
/// printed mixing matrix, which is orthogonal only to about 1.1e-6.
pub const ORTHOGONALITY_TOLERANCE: f64 = 1e-5;

/// Convergence threshold on the largest elementwise error.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_RESTARTS: usize = 32;
pub const DEFAULT_FIT_SEED: u64 = 20_200_623;

const GRADIENT_STEP: f64 = 1e-7;
const MAX_ITERATIONS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateTemplateParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub zeta: f64,
}

impl GateTemplateParams {
    /// Reference best-fit angles, rounded to four decimals.
    pub const PRINTED: Self = Self {
        alpha: -0.6031,
        beta: -2.0125,
        gamma: 0.7966,
        delta: 1.0139,
        epsilon: 0.7053,
        zeta: 1.3599,
    };

    pub const ZERO: Self = Self::from_array([0.0; 6]);

    pub const fn from_array(a: [f64; 6]) -> Self {
        Self {
            alpha: a[0],
            beta: a[1],
            gamma: a[2],
            delta: a[3],
            epsilon: a[4],
            zeta: a[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [
            self.alpha,
            self.beta,
            self.gamma,
            self.delta,
            self.epsilon,
            self.zeta,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }
}

/// Real 4×4 operator over |AB⟩ with index 2A + B.
pub type TemplateMatrix = Matrix4<f64>;

fn ry(theta: f64) -> SMatrix<f64, 2, 2> {
    let (s, c) = (theta / 2.0).sin_cos();
    SMatrix::<f64, 2, 2>::new(c, -s, s, c)
}

fn layer(theta_a: f64, theta_b: f64) -> TemplateMatrix {
    ry(theta_a).kronecker(&ry(theta_b))
}

fn cnot_ab() -> TemplateMatrix {
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, 1.0, 0.0,
    )
}

/// Rotation angles (A, B) of the three layers in application order.
fn forward_layers(p: &GateTemplateParams) -> [(f64, f64); 3] {
    [
        (p.alpha - FRAC_PI_2, p.beta - FRAC_PI_2),
        (p.gamma, p.delta),
        (p.epsilon + FRAC_PI_2, p.zeta + FRAC_PI_2),
    ]
}

/// Layers of the inverse sequence for inverted params `q`: the forward
/// layers reversed, with the quarter turns negated along with the angles.
fn inverse_layers(q: &GateTemplateParams) -> [(f64, f64); 3] {
    [
        (q.epsilon - FRAC_PI_2, q.zeta - FRAC_PI_2),
        (q.gamma, q.delta),
        (q.alpha + FRAC_PI_2, q.beta + FRAC_PI_2),
    ]
}

fn compose(layers: [(f64, f64); 3]) -> TemplateMatrix {
    let cx = cnot_ab();
    let [l1, l2, l3] = layers;
    layer(l3.0, l3.1) * cx * layer(l2.0, l2.1) * cx * layer(l1.0, l1.1)
}

fn emit(layers: [(f64, f64); 3]) -> Vec<GateOp> {
    let mut ops = Vec::with_capacity(8);
    for (k, (a, b)) in layers.into_iter().enumerate() {
        if k > 0 {
            ops.push(GateOp::cnot(QUBIT_A, QUBIT_B));
        }
        ops.push(GateOp::ry(QUBIT_A, a));
        ops.push(GateOp::ry(QUBIT_B, b));
    }
    ops
}

/// Operator of the forward template.
pub fn evaluate_template(params: &GateTemplateParams) -> TemplateMatrix {
    compose(forward_layers(params))
}

/// Operator of the inverse sequence for params already passed through
/// [`invert_params`].
pub fn evaluate_inverse(inverted: &GateTemplateParams) -> TemplateMatrix {
    compose(inverse_layers(inverted))
}

/// Forward template gates in application order: 6 U3 and 2 CNOT_AB.
pub fn template_ops(params: &GateTemplateParams) -> Vec<GateOp> {
    emit(forward_layers(params))
}

/// Inverse template gates for params already passed through
/// [`invert_params`].
pub fn inverse_template_ops(inverted: &GateTemplateParams) -> Vec<GateOp> {
    emit(inverse_layers(inverted))
}

/// Parameters of the operator inverse: every angle negated.
pub fn invert_params(params: &GateTemplateParams) -> GateTemplateParams {
    GateTemplateParams::from_array(params.to_array().map(|x| -x))
}

/// Σᵢⱼ (template(params)ᵢⱼ − targetᵢⱼ)².
pub fn residual(params: &GateTemplateParams, target: &TemplateMatrix) -> f64 {
    (evaluate_template(params) - target).norm_squared()
}

fn max_error(params: &GateTemplateParams, target: &TemplateMatrix) -> f64 {
    (evaluate_template(params) - target).abs().max()
}

/// Reduces each angle to (−π, π] where the operator allows it.
///
/// U3(θ + 2π) = −U3(θ), so shifts are applied in pairs. When an odd
/// number of angles needed a 2π shift, the angle closest to the boundary
/// keeps one shift and stays just outside the interval.
pub fn canonicalize(params: &GateTemplateParams) -> GateTemplateParams {
    let mut angles = params.to_array();
    let mut odd = false;
    for a in angles.iter_mut() {
        let turns = ((*a - PI) / TAU).ceil();
        *a -= turns * TAU;
        if turns.rem_euclid(2.0) == 1.0 {
            odd = !odd;
        }
    }
    if odd {
        let k = (0..6)
            .max_by(|&i, &j| angles[i].abs().total_cmp(&angles[j].abs()))
            .unwrap_or(0);
        angles[k] += if angles[k] > 0.0 { -TAU } else { TAU };
    }
    GateTemplateParams::from_array(angles)
}

/// Fit target: a real 4×4 matrix orthogonal within
/// [`ORTHOGONALITY_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct TargetUnitary(TemplateMatrix);

impl TargetUnitary {
    pub fn new(m: TemplateMatrix) -> Result<Self> {
        let deviation = (m.transpose() * m - Matrix4::identity()).abs().max();
        if !(deviation <= ORTHOGONALITY_TOLERANCE) {
            return Err(Error::MatrixProperty {
                property: "orthogonal",
                deviation,
                tolerance: ORTHOGONALITY_TOLERANCE,
            });
        }
        Ok(Self(m))
    }

    /// The printed three-flavor matrix embedded with |11⟩ decoupled.
    pub fn printed_pmns() -> Self {
        let m = Matrix4::from_fn(|r, c| match (r, c) {
            (3, 3) => 1.0,
            (3, _) | (_, 3) => 0.0,
            _ => PRINTED_PMNS[r][c],
        });
        Self(m)
    }

    /// Real mixing matrix of dimension 2 to 4, embedded with the unused
    /// states on the identity.
    pub fn from_mixing(mixing: &MixingMatrix) -> Result<Self> {
        let m = mixing.embed_real4().ok_or_else(|| {
            Error::invalid("mixing", "gate template needs a real mixing matrix")
        })?;
        Self::new(m)
    }

    pub fn matrix(&self) -> &TemplateMatrix {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: GateTemplateParams,
    pub residual: f64,
    pub max_error: f64,
    pub iterations: usize,
    pub restarts: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            restarts: DEFAULT_RESTARTS,
            seed: DEFAULT_FIT_SEED,
            max_iterations: MAX_ITERATIONS,
        }
    }
}

fn gradient(x: &[f64; 6], target: &TemplateMatrix) -> [f64; 6] {
    let mut g = [0.0; 6];
    for k in 0..6 {
        let mut up = *x;
        let mut down = *x;
        up[k] += GRADIENT_STEP;
        down[k] -= GRADIENT_STEP;
        g[k] = (residual(&GateTemplateParams::from_array(up), target)
            - residual(&GateTemplateParams::from_array(down), target))
            / (2.0 * GRADIENT_STEP);
    }
    g
}

fn dot(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient descent with Barzilai–Borwein trial steps and Armijo
/// backtracking. Returns the final point and iteration count.
fn descend(start: [f64; 6], target: &TemplateMatrix, max_iterations: usize) -> ([f64; 6], usize) {
    let f = |x: &[f64; 6]| residual(&GateTemplateParams::from_array(*x), target);
    let mut x = start;
    let mut fx = f(&x);
    let mut g = gradient(&x, target);
    let mut step = 0.1;
    for it in 0..max_iterations {
        let gg = dot(&g, &g);
        if fx < 1e-28 || gg < 1e-30 {
            return (x, it);
        }
        let mut t = step;
        let (x_new, f_new) = loop {
            let trial: [f64; 6] = std::array::from_fn(|k| x[k] - t * g[k]);
            let ft = f(&trial);
            if ft <= fx - 1e-4 * t * gg {
                break (trial, ft);
            }
            t *= 0.5;
            if t < 1e-20 {
                return (x, it);
            }
        };
        let g_new = gradient(&x_new, target);
        let s: [f64; 6] = std::array::from_fn(|k| x_new[k] - x[k]);
        let y: [f64; 6] = std::array::from_fn(|k| g_new[k] - g[k]);
        let sy = dot(&s, &y);
        step = if sy > 0.0 { (dot(&s, &s) / sy).clamp(1e-6, 10.0) } else { 1.0 };
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    (x, max_iterations)
}

fn finish(x: [f64; 6], target: &TemplateMatrix, iterations: usize, restarts: usize) -> FitResult {
    let params = canonicalize(&GateTemplateParams::from_array(x));
    let max_error = max_error(&params, target);
    FitResult {
        params,
        residual: residual(&params, target),
        max_error,
        iterations,
        restarts,
        converged: max_error < CONVERGENCE_TOLERANCE,
    }
}

/// Least-squares fit of the template to `target`.
///
/// With `seed_params` a single descent starts there; otherwise
/// `options.restarts` starts are drawn uniformly from (−π, π]⁶ and the best
/// is returned. A fit that never converges is reported with
/// `converged = false` rather than as an error.
pub fn fit(
    target: &TargetUnitary,
    seed_params: Option<&GateTemplateParams>,
    options: &FitOptions,
) -> Result<FitResult> {
    let t = target.matrix();
    if let Some(p) = seed_params {
        if !p.is_finite() {
            return Err(Error::invalid("seed_params", "angles must be finite"));
        }
        let (x, it) = descend(p.to_array(), t, options.max_iterations);
        return Ok(finish(x, t, it, 1));
    }
    if options.restarts == 0 {
        return Err(Error::invalid("restarts", "must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut best: Option<FitResult> = None;
    let mut total_iterations = 0;
    for _ in 0..options.restarts {
        let start: [f64; 6] = std::array::from_fn(|_| PI - rng.gen::<f64>() * TAU);
        let (x, it) = descend(start, t, options.max_iterations);
        total_iterations += it;
        let candidate = finish(x, t, it, options.restarts);
        if best.is_none_or(|b| candidate.residual < b.residual) {
            best = Some(candidate);
        }
    }
    let mut best = best.expect("at least one restart");
    best.iterations = total_iterations;
    Ok(best)
}

/// Gate angles realizing a real mixing matrix of dimension 2 to 4.
///
/// Column signs are free mass-state phases, so a matrix with determinant
/// −1 is fitted with its first column negated.
///
/// Three-flavor targets start from the reference angles; anything that
/// does not converge from there falls back to the default multi-start.
pub fn fit_mixing_gate(mixing: &MixingMatrix) -> Result<GateTemplateParams> {
    let mut target = TargetUnitary::from_mixing(mixing)?;
    if target.0.determinant() < 0.0 {
        let mut m = target.0;
        for r in 0..mixing.dim() {
            m[(r, 0)] = -m[(r, 0)];
        }
        target = TargetUnitary(m);
    }
    let options = FitOptions::default();
    if mixing.dim() == 3 {
        let seeded = fit(&target, Some(&GateTemplateParams::PRINTED), &options)?;
        if seeded.converged {
            return Ok(seeded.params);
        }
    }
    let r = fit(&target, None, &options)?;
    if !r.converged {
        return Err(Error::FitNotConverged(r.max_error));
    }
    Ok(r.params)
}
