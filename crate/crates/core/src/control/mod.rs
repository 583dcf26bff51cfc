//! Optimal drug dosing for the stochastic model.
//!
//! The objective is
//!
//! ```text
//! J(u) = E ∫₀ᵀ I + B + A₁(u₁₁² + u₁₂²) + A₂u₂² dt
//! ```
//!
//! subject to the controlled dynamics. The stochastic maximum principle gives
//! a backward adjoint equation for `m = (m₁, m₂, m₃)` with terminal value
//! zero and a pointwise Hamiltonian minimiser, projected onto the admissible
//! box. [`forward_backward_sweep`] iterates the two on a frozen bundle of
//! Wiener paths.

mod field;
mod sweep;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    ControlBounds, Controls, ModelParams, NoiseParams, SimState, controlled_rates, diffusion,
};

pub use field::ControlField;
pub use sweep::{
    ControlProblem, CostEstimate, Scenario, ScenarioComparison, ScenarioResult, SweepConfig,
    SweepResult, forward_backward_sweep, scenario_compare,
};

/// Effort penalties and control bounds.
///
/// `a1` weighs both immunomodulator controls jointly, `a2` the antiviral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlWeights {
    pub a1: f64,
    pub a2: f64,
    #[serde(default = "one")]
    pub u11_max: f64,
    #[serde(default = "one")]
    pub u12_max: f64,
    #[serde(default = "one")]
    pub u2_max: f64,
}

fn one() -> f64 {
    1.0
}

impl ControlWeights {
    pub fn new(a1: f64, a2: f64) -> Self {
        let b = ControlBounds::default();
        Self {
            a1,
            a2,
            u11_max: b.u11_max,
            u12_max: b.u12_max,
            u2_max: b.u2_max,
        }
    }

    pub fn bounds(&self) -> ControlBounds {
        ControlBounds {
            u11_max: self.u11_max,
            u12_max: self.u12_max,
            u2_max: self.u2_max,
        }
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        for (name, v) in [("a1", self.a1), ("a2", self.a2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    format!("{field}.{name}"),
                    format!("must be finite and strictly positive, got {v}"),
                ));
            }
        }
        self.bounds().validate(field)
    }

    /// Non-fatal issues with these weights for the given rates.
    pub fn warnings(&self, params: &ModelParams) -> Vec<String> {
        let mut out = Vec::new();
        if self.u2_max > params.alpha {
            out.push(format!(
                "u2_max = {} exceeds the burst rate alpha = {}; the controlled burst term (alpha - u2)·I can turn negative",
                self.u2_max, params.alpha
            ));
        }
        out
    }
}

/// Integrand `I + B + A₁(u₁₁² + u₁₂²) + A₂u₂²` of the objective.
pub fn running_cost(state: &SimState, u: &Controls, weights: &ControlWeights) -> f64 {
    state.i + state.b + weights.a1 * (u.u11 * u.u11 + u.u12 * u.u12) + weights.a2 * u.u2 * u.u2
}

/// Adjoint variables `m` and the constant noise coefficients `n` of the
/// backward equation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AdjointState {
    pub m: [f64; 3],
    pub n: [f64; 3],
}

impl AdjointState {
    /// Terminal condition `m(T) = 0`.
    pub const fn terminal(n: [f64; 3]) -> Self {
        Self { m: [0.0; 3], n }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `H(x, u, m, n) = ⟨f(x, u), m⟩ + L(x, u) + ⟨g(x), n⟩`.
pub fn hamiltonian(
    state: &SimState,
    u: &Controls,
    adjoint: &AdjointState,
    params: &ModelParams,
    noise: &NoiseParams,
    weights: &ControlWeights,
) -> f64 {
    dot(controlled_rates(state, u, params), adjoint.m)
        + running_cost(state, u, weights)
        + dot(diffusion(state, noise).coeffs, adjoint.n)
}

/// Right-hand side `−∂H/∂x` of the adjoint equation (drift part).
fn adjoint_drift(
    m: [f64; 3],
    n: [f64; 3],
    x: &SimState,
    u: &Controls,
    params: &ModelParams,
    noise: &NoiseParams,
) -> [f64; 3] {
    let ModelParams {
        beta,
        mu,
        mu1,
        alpha,
        p,
        q,
        ..
    } = *params;
    let [m1, m2, m3] = m;
    [
        m1 * (beta * x.b + mu) - m2 * beta * x.b + noise.sigma1 * n[0],
        m2 * (p + u.u11 + mu) - m3 * (alpha - u.u2) + noise.sigma1 * n[1] - 1.0,
        m1 * beta * x.s - m2 * beta * x.s + m3 * (q + mu1 + u.u12) + noise.sigma2 * n[2] - 1.0,
    ]
}

/// One explicit step of the adjoint equation backward in time.
///
/// With `dm = F dt + n ⊙ dW` (channels `W₁, W₁, W₂`) this returns
/// `m − F·dt − n ⊙ ΔW`, using the same increment as the forward step over
/// the interval.
pub fn adjoint_step_backward(
    adjoint: &AdjointState,
    state: &SimState,
    u: &Controls,
    params: &ModelParams,
    noise: &NoiseParams,
    dw: (f64, f64),
    dt: f64,
) -> AdjointState {
    let f = adjoint_drift(adjoint.m, adjoint.n, state, u, params, noise);
    let n = adjoint.n;
    let noise_inc = [n[0] * dw.0, n[1] * dw.0, n[2] * dw.1];
    let mut m = adjoint.m;
    for k in 0..3 {
        m[k] -= f[k] * dt + noise_inc[k];
    }
    AdjointState { m, n }
}

/// Hamiltonian minimiser projected onto the admissible box:
/// `u₁₁ = m₂I/2A₁`, `u₁₂ = m₃B/2A₁`, `u₂ = m₃I/2A₂`.
pub fn optimal_controls_pointwise(
    state: &SimState,
    adjoint: &AdjointState,
    weights: &ControlWeights,
) -> Controls {
    let [_, m2, m3] = adjoint.m;
    let clamp = |v: f64, max: f64| v.max(0.0).min(max);
    Controls {
        u11: clamp(m2 * state.i / (2.0 * weights.a1), weights.u11_max),
        u12: clamp(m3 * state.b / (2.0 * weights.a1), weights.u12_max),
        u2: clamp(m3 * state.i / (2.0 * weights.a2), weights.u2_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::drift;
    use approx::assert_relative_eq;

    const TABLE: ModelParams = ModelParams::reference();

    #[test]
    fn running_cost_cases() {
        let w = ControlWeights::new(10.0, 5.0);
        assert_eq!(
            running_cost(&SimState::new(55.0, 0.0, 0.0), &Controls::ZERO, &w),
            0.0
        );
        let c = running_cost(
            &SimState::new(100.0, 10.0, 20.0),
            &Controls::new(0.5, 0.2, 0.1),
            &w,
        );
        assert_relative_eq!(c, 32.95, epsilon = 1e-12);
        let x = SimState::new(3.0, 0.0, 0.0);
        let u = Controls::new(0.1, 0.2, 0.3);
        let u2 = Controls::new(0.2, 0.4, 0.6);
        assert_relative_eq!(
            running_cost(&x, &u2, &w),
            4.0 * running_cost(&x, &u, &w),
            max_relative = 1e-14
        );
    }

    #[test]
    fn hamiltonian_cases() {
        let w = ControlWeights::new(10.0, 5.0);
        let noise = NoiseParams::new(0.1, 0.1);
        let x = SimState::new(100.0, 10.0, 10.0);
        let u = Controls::new(0.3, 0.1, 0.05);
        assert_eq!(
            hamiltonian(&x, &u, &AdjointState::default(), &TABLE, &noise, &w),
            running_cost(&x, &u, &w)
        );

        let e0 = SimState::new(100.0, 0.0, 0.0);
        let adj = AdjointState {
            m: [1.0; 3],
            n: [0.0; 3],
        };
        assert_eq!(
            hamiltonian(&e0, &Controls::ZERO, &adj, &TABLE, &noise, &w),
            0.0
        );

        let adj = AdjointState {
            m: [1.0, 0.0, 0.0],
            n: [0.0; 3],
        };
        let h = hamiltonian(&x, &Controls::ZERO, &adj, &TABLE, &noise, &w);
        assert_relative_eq!(h, drift(&x, &TABLE)[0] + 20.0, epsilon = 1e-12);
        assert_relative_eq!(h, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn adjoint_from_terminal_sources() {
        let dt = 0.01;
        let a = adjoint_step_backward(
            &AdjointState::default(),
            &SimState::new(50.0, 7.0, 3.0),
            &Controls::ZERO,
            &TABLE,
            &NoiseParams::new(0.2, 0.2),
            (0.3, -0.1),
            dt,
        );
        assert_eq!(a.m[0], 0.0);
        assert_relative_eq!(a.m[1], dt, epsilon = 1e-15);
        assert_relative_eq!(a.m[2], dt, epsilon = 1e-15);
    }

    #[test]
    fn adjoint_without_noise_ignores_increment() {
        let start = AdjointState {
            m: [0.4, -0.2, 1.1],
            n: [0.0; 3],
        };
        let x = SimState::new(80.0, 5.0, 9.0);
        let u = Controls::new(0.1, 0.2, 0.1);
        let noise = NoiseParams::new(0.1, 0.1);
        let a = adjoint_step_backward(&start, &x, &u, &TABLE, &noise, (0.0, 0.0), 0.01);
        let b = adjoint_step_backward(&start, &x, &u, &TABLE, &noise, (2.0, -3.0), 0.01);
        assert_eq!(a, b);
    }

    #[test]
    fn adjoint_hand_step() {
        let start = AdjointState {
            m: [1.0, 0.0, 0.0],
            n: [0.0; 3],
        };
        let a = adjoint_step_backward(
            &start,
            &SimState::new(100.0, 0.0, 10.0),
            &Controls::ZERO,
            &TABLE,
            &NoiseParams::ZERO,
            (0.0, 0.0),
            0.01,
        );
        assert_relative_eq!(a.m[0], 0.9985, epsilon = 1e-14);
        assert_relative_eq!(a.m[2], 0.005, epsilon = 1e-14);
    }

    #[test]
    fn adjoint_drift_is_minus_state_gradient_of_hamiltonian() {
        let w = ControlWeights::new(2.0, 3.0);
        let noise = NoiseParams::new(0.2, 0.3);
        let x = SimState::new(80.0, 12.0, 7.0);
        let u = Controls::new(0.2, 0.3, 0.1);
        let adj = AdjointState {
            m: [0.7, 1.3, -0.4],
            n: [0.01, 0.02, 0.03],
        };
        let f = adjoint_drift(adj.m, adj.n, &x, &u, &TABLE, &noise);
        let h = 1e-5;
        for k in 0..3 {
            let mut up = x.to_array();
            let mut dn = x.to_array();
            up[k] += h;
            dn[k] -= h;
            let dh = (hamiltonian(&SimState::from_array(up), &u, &adj, &TABLE, &noise, &w)
                - hamiltonian(&SimState::from_array(dn), &u, &adj, &TABLE, &noise, &w))
                / (2.0 * h);
            assert_relative_eq!(f[k], -dh, epsilon = 1e-6);
        }
    }

    #[test]
    fn pointwise_controls() {
        let w = ControlWeights::new(10.0, 5.0);
        let x = SimState::new(1.0, 10.0, 4.0);
        let lower = AdjointState {
            m: [0.0, -1.0, 0.0],
            n: [0.0; 3],
        };
        assert_eq!(optimal_controls_pointwise(&x, &lower, &w).u11, 0.0);
        let upper = AdjointState {
            m: [0.0, 20.0, 0.0],
            n: [0.0; 3],
        };
        assert_eq!(optimal_controls_pointwise(&x, &upper, &w).u11, 1.0);
        let interior = AdjointState {
            m: [0.0, 0.0, 2.0],
            n: [0.0; 3],
        };
        assert_relative_eq!(optimal_controls_pointwise(&x, &interior, &w).u12, 0.4);
    }

    #[test]
    fn antiviral_bound_above_burst_rate_warns() {
        assert_eq!(ControlWeights::new(1.0, 1.0).warnings(&TABLE).len(), 1);
        let mut w = ControlWeights::new(1.0, 1.0);
        w.u2_max = 0.2;
        assert!(w.warnings(&TABLE).is_empty());
    }
}
