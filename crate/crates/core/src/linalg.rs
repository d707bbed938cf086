//! Dense linear algebra for flow propagation under `ẋ = Ax + u`.
//!
//! The matrix exponential uses scaling and squaring around the degree-13
//! diagonal Padé approximant. The integral `∫₀ᵗ e^{As} ds` is read off the
//! exponential of the augmented matrix `[[A, I], [0, 0]]`, which handles
//! singular `A` without a separate code path.
//!
//! All error bounds are additive scalars in the ℓ∞ norm. They are budget
//! constants supplied by the caller ([`NumericsBudget`]), not per-call
//! certificates.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::AxisBox;
use crate::model::LhaModel;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input to {0}")]
    NonFinite(&'static str),
    #[error("matrix exponential overflowed (‖A‖₁·t = {norm_t:e}); error budget cannot be honoured")]
    Overflow { norm_t: f64 },
    #[error("Padé denominator is singular")]
    Singular,
}

/// The four primitive error bounds of the numerics layer.
///
/// `sigma_e` bounds the elementwise error of `e^{At}`, `sigma_i` that of
/// `∫₀ᵗ e^{As} ds`, `mu_c` the Hausdorff error of a hyperplane/polytope
/// intersection and `mu_h` that of a convex hull.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsBudget {
    pub sigma_e: f64,
    pub sigma_i: f64,
    pub mu_c: f64,
    pub mu_h: f64,
}

impl Default for NumericsBudget {
    fn default() -> Self {
        Self {
            sigma_e: 1e-13,
            sigma_i: 1e-13,
            mu_c: 1e-13,
            mu_h: 1e-13,
        }
    }
}

impl NumericsBudget {
    pub fn uniform(bound: f64) -> Self {
        Self {
            sigma_e: bound,
            sigma_i: bound,
            mu_c: bound,
            mu_h: bound,
        }
    }

    pub fn is_valid(&self) -> bool {
        [self.sigma_e, self.sigma_i, self.mu_c, self.mu_h]
            .iter()
            .all(|b| b.is_finite() && *b >= 0.0)
    }
}

// Padé(13,13) numerator coefficients.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn check_square(a: &Mat) -> Result<usize, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

fn one_norm(a: &Mat) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Induced ∞-norm: the maximum absolute row sum.
pub fn inf_norm(a: &Mat) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_inf_norm(v: &Vector) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn pade13(a: &Mat) -> Result<Mat, LinalgError> {
    let n = a.nrows();
    let b = &PADE13;
    let ident = Mat::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = a * (u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_inner = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let p = &v + &u;
    let q = &v - &u;
    q.lu().solve(&p).ok_or(LinalgError::Singular)
}

/// `e^{At}` by scaling and squaring.
pub fn expm(a: &Mat, t: f64) -> Result<Mat, LinalgError> {
    check_square(a)?;
    if !t.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::NonFinite("expm"));
    }
    let at = a * t;
    let norm = one_norm(&at);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    if squarings > 1000 {
        return Err(LinalgError::Overflow { norm_t: norm });
    }
    let scaled = at * 2f64.powi(-squarings);
    let mut result = pade13(&scaled)?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::Overflow { norm_t: norm });
    }
    Ok(result)
}

/// `∫₀ᵗ e^{As} ds` via the exponential of `[[A, I], [0, 0]]·t`.
pub fn expm_integral(a: &Mat, t: f64) -> Result<Mat, LinalgError> {
    let n = check_square(a)?;
    let mut aug = Mat::zeros(2 * n, 2 * n);
    aug.view_mut((0, 0), (n, n)).copy_from(a);
    aug.view_mut((0, n), (n, n)).fill_with_identity();
    let e = expm(&aug, t)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// The affine map `x ↦ e^{At} x + (∫₀ᵗ e^{As} ds) u` for a fixed `(A, u, t)`.
///
/// Built once per step and applied to every vertex of a polytope.
#[derive(Debug, Clone)]
pub struct FlowMap {
    transition: Mat,
    drift: Vector,
}

impl FlowMap {
    pub fn new(a: &Mat, u: &Vector, t: f64) -> Result<Self, LinalgError> {
        let n = check_square(a)?;
        if u.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                got: u.len(),
            });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite("flow input"));
        }
        let transition = expm(a, t)?;
        let drift = expm_integral(a, t)? * u;
        Ok(Self { transition, drift })
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.transition * x + &self.drift
    }

    pub fn transition(&self) -> &Mat {
        &self.transition
    }
}

/// `x(t) = e^{At} x + ∫₀ᵗ e^{A(t−s)} u ds`.
pub fn propagate_point(a: &Mat, u: &Vector, t: f64, x: &Vector) -> Result<Vector, LinalgError> {
    let flow = FlowMap::new(a, u, t)?;
    if x.len() != u.len() {
        return Err(LinalgError::DimensionMismatch {
            expected: u.len(),
            got: x.len(),
        });
    }
    Ok(flow.apply(x))
}

/// Point-propagation error bound `μ_x = max_{x∈X, u∈U} σ_e‖x‖∞ + σ_i‖u‖∞`.
pub fn compute_mu_x<'a>(
    budget: &NumericsBudget,
    state_box: &AxisBox,
    inputs: impl IntoIterator<Item = &'a Vector>,
) -> f64 {
    let u_bar = inputs.into_iter().map(vec_inf_norm).fold(0.0, f64::max);
    budget.sigma_e * state_box.max_inf_norm() + budget.sigma_i * u_bar
}

/// Global speed bound `v̄ = max_l (‖A_l‖∞ x̄ + ‖u_l‖∞)` with `x̄ = max_{x∈X} ‖x‖∞`.
pub fn v_bar(model: &LhaModel) -> f64 {
    let x_bar = model.state_box().max_inf_norm();
    model
        .locations()
        .iter()
        .map(|l| inf_norm(&l.a) * x_bar + vec_inf_norm(&l.u))
        .fold(0.0, f64::max)
}
