//! Analytic extinction and boundedness criteria for the stochastic model.
//!
//! The infected subsystem `(I, B)` decays almost surely when the symmetric
//! matrix
//!
//! ```text
//!     ⎡ 2(α−p−μ) − σ₁²              α + βω/μ − p − μ − q − μ₁ ⎤
//! A = ⎢                                                         ⎥
//!     ⎣ α + βω/μ − p − μ − q − μ₁   2βω/μ − 2(q+μ₁) − σ₂²     ⎦
//! ```
//!
//! is negative definite, in which case
//! `lim sup (1/t) ln(I + B) ≤ −|λ_max|/4`. The two scalar conditions A and B
//! are reported exactly as they are usually stated; condition B compares the
//! off-diagonal entry itself (not its square) with the diagonal product, so it
//! can disagree with true negative-definiteness. Classification uses the
//! eigenvalues.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, NoiseParams};

/// Default tail probability for the Chebyshev bound.
pub const DEFAULT_EPSILON: f64 = 0.05;

/// One side-by-side inequality `lhs < rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Verdict {
    fn strict(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs < rhs,
        }
    }
}

/// Symmetric 2×2 matrix stored as its two diagonal entries and the shared
/// off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityMatrix {
    pub d1: f64,
    pub d2: f64,
    pub b: f64,
}

impl StabilityMatrix {
    pub fn trace(&self) -> f64 {
        self.d1 + self.d2
    }

    pub fn determinant(&self) -> f64 {
        self.d1 * self.d2 - self.b * self.b
    }
}

/// Eigenvalues sorted ascending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalues {
    pub min: f64,
    pub max: f64,
}

/// `α + βω/μ − (p + q + μ + μ₁)`, shared by condition A, condition B and the
/// off-diagonal matrix entry.
fn growth_excess(params: &ModelParams) -> f64 {
    params.alpha + params.beta * params.omega / params.mu
        - (params.p + params.q + params.mu + params.mu1)
}

/// Condition A: `(α + βω/μ) − (p+q+μ+μ₁) < (σ₁² + σ₂²)/2`.
pub fn condition_a(params: &ModelParams, noise: &NoiseParams) -> Verdict {
    Verdict::strict(
        growth_excess(params),
        0.5 * (noise.sigma1.powi(2) + noise.sigma2.powi(2)),
    )
}

/// Condition B as printed: `α + βω/μ − (p+μ+q+μ₁) < d1·d2`.
pub fn condition_b(params: &ModelParams, noise: &NoiseParams) -> Verdict {
    let m = stability_matrix(params, noise);
    Verdict::strict(growth_excess(params), m.d1 * m.d2)
}

pub fn stability_matrix(params: &ModelParams, noise: &NoiseParams) -> StabilityMatrix {
    let ModelParams {
        omega,
        beta,
        mu,
        mu1,
        alpha,
        p,
        q,
    } = *params;
    StabilityMatrix {
        d1: 2.0 * (alpha - p - mu) - noise.sigma1.powi(2),
        d2: 2.0 * beta * omega / mu - 2.0 * (q + mu1) - noise.sigma2.powi(2),
        b: growth_excess(params),
    }
}

/// Eigenvalues of a symmetric 2×2 matrix.
///
/// Uses `tr/2 ± √(((d1−d2)/2)² + b²)`, whose radicand is a sum of squares, so
/// the discriminant is never negative and needs no clamping.
pub fn eigen2(m: &StabilityMatrix) -> Eigenvalues {
    let half_trace = 0.5 * (m.d1 + m.d2);
    let radius = (0.5 * (m.d1 - m.d2)).hypot(m.b);
    if m.b == 0.0 {
        return Eigenvalues {
            min: m.d1.min(m.d2),
            max: m.d1.max(m.d2),
        };
    }
    // Take the large-magnitude root directly and recover the other from the
    // determinant to avoid cancellation.
    let big = if half_trace >= 0.0 {
        half_trace + radius
    } else {
        half_trace - radius
    };
    let small = if big != 0.0 {
        m.determinant() / big
    } else {
        0.0
    };
    Eigenvalues {
        min: big.min(small),
        max: big.max(small),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub condition_a: Verdict,
    pub condition_b: Verdict,
    pub matrix: StabilityMatrix,
    pub eigenvalues: Eigenvalues,
    /// `λ_max < 0`; the authoritative extinction criterion.
    pub negative_definite: bool,
    /// `|λ_max|/4`, present iff `negative_definite`.
    pub decay_rate_bound: Option<f64>,
    /// True when conditions A∧B (with negative diagonal) disagree with the
    /// eigenvalue test.
    pub criteria_disagree: bool,
    /// `√3·ω`, the asymptotic bound on `E|X|` from the boundedness argument.
    pub boundedness_limit: f64,
    /// `√3·ω/ε`.
    pub chebyshev_k: f64,
    pub epsilon: f64,
    /// `ω/μ`, the permanence constant.
    pub permanence_h: f64,
}

impl StabilityReport {
    /// Extinction label for downstream consumers.
    pub fn predicts_extinction(&self) -> bool {
        self.negative_definite
    }
}

pub fn stability_report(
    params: &ModelParams,
    noise: &NoiseParams,
    epsilon: f64,
) -> Result<StabilityReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(
            "epsilon",
            format!("must lie in (0, 1), got {epsilon}"),
        ));
    }
    let matrix = stability_matrix(params, noise);
    let eigenvalues = eigen2(&matrix);
    let negative_definite = eigenvalues.max < 0.0;
    let a = condition_a(params, noise);
    let b = condition_b(params, noise);
    let printed = a.holds && b.holds && matrix.d1 < 0.0 && matrix.d2 < 0.0;
    let boundedness_limit = 3f64.sqrt() * params.omega;
    Ok(StabilityReport {
        condition_a: a,
        condition_b: b,
        matrix,
        eigenvalues,
        negative_definite,
        decay_rate_bound: negative_definite.then(|| eigenvalues.max.abs() / 4.0),
        criteria_disagree: printed != negative_definite,
        boundedness_limit,
        chebyshev_k: boundedness_limit / epsilon,
        epsilon,
        permanence_h: params.omega / params.mu,
    })
}
