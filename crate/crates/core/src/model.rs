//! Model parameters, state types and the closed-form deterministic quantities.
//!
//! All rates are per day. The state is `(S, I, B)`: susceptible cells,
//! infected cells and free virions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven deterministic rates of the within-host model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Birth rate of susceptible cells.
    pub omega: f64,
    /// Transmission rate (per virion per day).
    pub beta: f64,
    /// Natural death rate of cells.
    pub mu: f64,
    /// Natural death rate of virions.
    pub mu1: f64,
    /// Virion burst rate.
    pub alpha: f64,
    /// Immune clearance rate of infected cells.
    pub p: f64,
    /// Immune clearance rate of virions.
    pub q: f64,
}

impl ModelParams {
    /// Literature values used throughout the extinction experiments (`R₀ ≈ 0.15`).
    pub const fn reference() -> Self {
        Self {
            omega: 10.0,
            beta: 0.005,
            mu: 0.1,
            mu1: 0.6,
            alpha: 0.24,
            p: 0.795,
            q: 0.28,
        }
    }

    /// Persistent regime with `β = 0.05` and `μ = μ₁ = 0.1` (`R₀ ≈ 3.53`).
    pub const fn persistent() -> Self {
        Self {
            omega: 10.0,
            beta: 0.05,
            mu: 0.1,
            mu1: 0.1,
            alpha: 0.24,
            p: 0.795,
            q: 0.28,
        }
    }

    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("omega", self.omega),
            ("beta", self.beta),
            ("mu", self.mu),
            ("mu1", self.mu1),
            ("alpha", self.alpha),
            ("p", self.p),
            ("q", self.q),
        ]
    }

    /// Mutable access by name, used by parameter sweeps.
    pub fn field_mut(&mut self, name: &str) -> Option<&mut f64> {
        Some(match name {
            "omega" => &mut self.omega,
            "beta" => &mut self.beta,
            "mu" => &mut self.mu,
            "mu1" => &mut self.mu1,
            "alpha" => &mut self.alpha,
            "p" => &mut self.p,
            "q" => &mut self.q,
            _ => return None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    format!("params.{name}"),
                    format!("must be finite and strictly positive, got {value}"),
                ));
            }
        }
        Ok(())
    }

    /// Infection-free susceptible level `ω/μ`.
    pub fn susceptible_free(&self) -> f64 {
        self.omega / self.mu
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// Intensities of the two environmental noise channels.
///
/// `sigma1` perturbs the cell mortality `μ` and drives both `S` and `I`
/// through the same Wiener process; `sigma2` perturbs the virion mortality.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseParams {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl NoiseParams {
    pub const ZERO: Self = Self {
        sigma1: 0.0,
        sigma2: 0.0,
    };

    pub const fn new(sigma1: f64, sigma2: f64) -> Self {
        Self { sigma1, sigma2 }
    }

    pub fn is_zero(&self) -> bool {
        self.sigma1 == 0.0 && self.sigma2 == 0.0
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("sigma1", self.sigma1), ("sigma2", self.sigma2)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(
                    format!("noise.{name}"),
                    format!("must be finite and non-negative, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// One point `(S, I, B)` of the state space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimState {
    pub s: f64,
    pub i: f64,
    pub b: f64,
}

impl SimState {
    pub const ZERO: Self = Self {
        s: 0.0,
        i: 0.0,
        b: 0.0,
    };

    pub const fn new(s: f64, i: f64, b: f64) -> Self {
        Self { s, i, b }
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.s, self.i, self.b]
    }

    pub const fn from_array([s, i, b]: [f64; 3]) -> Self {
        Self { s, i, b }
    }

    /// Euclidean norm `|X|`.
    pub fn norm(&self) -> f64 {
        (self.s * self.s + self.i * self.i + self.b * self.b).sqrt()
    }

    /// Size of the infected subsystem `I + B`.
    pub fn infected_load(&self) -> f64 {
        self.i + self.b
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        for (name, value) in [("s", self.s), ("i", self.i), ("b", self.b)] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(
                    format!("{field}.{name}"),
                    format!("must be finite and non-negative, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// Drug controls: `u11` clears infected cells, `u12` clears virions
/// (immunomodulators), `u2` blocks viral replication (antiviral).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controls {
    pub u11: f64,
    pub u12: f64,
    pub u2: f64,
}

impl Controls {
    pub const ZERO: Self = Self {
        u11: 0.0,
        u12: 0.0,
        u2: 0.0,
    };

    pub const fn new(u11: f64, u12: f64, u2: f64) -> Self {
        Self { u11, u12, u2 }
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.u11, self.u12, self.u2]
    }

    pub const fn from_array([u11, u12, u2]: [f64; 3]) -> Self {
        Self { u11, u12, u2 }
    }
}

/// Upper ends of the admissible control box `[0, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBounds {
    pub u11_max: f64,
    pub u12_max: f64,
    pub u2_max: f64,
}

impl Default for ControlBounds {
    fn default() -> Self {
        Self {
            u11_max: 1.0,
            u12_max: 1.0,
            u2_max: 1.0,
        }
    }
}

impl ControlBounds {
    pub const fn to_array(self) -> [f64; 3] {
        [self.u11_max, self.u12_max, self.u2_max]
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        for (name, value) in [
            ("u11_max", self.u11_max),
            ("u12_max", self.u12_max),
            ("u2_max", self.u2_max),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::invalid(
                    format!("{field}.{name}"),
                    format!("must be finite and strictly positive, got {value}"),
                ));
            }
        }
        Ok(())
    }

    pub fn contains(&self, controls: &Controls) -> bool {
        controls
            .to_array()
            .into_iter()
            .zip(self.to_array())
            .all(|(u, max)| (0.0..=max).contains(&u))
    }

    pub fn check(&self, controls: &Controls) -> Result<()> {
        let names = ["u11", "u12", "u2"];
        for ((u, max), name) in controls
            .to_array()
            .into_iter()
            .zip(self.to_array())
            .zip(names)
        {
            if !(0.0..=max).contains(&u) {
                return Err(Error::invalid(
                    format!("controls.{name}"),
                    format!("{u} outside admissible interval [0, {max}]"),
                ));
            }
        }
        Ok(())
    }
}

/// Wiener channel driving a compartment's noise term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    W1,
    W2,
}

/// `S` and `I` share `W₁`; `B` is driven by `W₂`.
pub const CHANNELS: [Channel; 3] = [Channel::W1, Channel::W1, Channel::W2];

/// Noise coefficients of the three compartments with their channel labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diffusion {
    pub coeffs: [f64; 3],
    pub channels: [Channel; 3],
}

impl Diffusion {
    /// `g(x)·ΔW` with each coefficient applied to its own channel increment.
    pub fn apply(&self, dw: (f64, f64)) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (k, (c, ch)) in self.coeffs.iter().zip(self.channels).enumerate() {
            out[k] = c * match ch {
                Channel::W1 => dw.0,
                Channel::W2 => dw.1,
            };
        }
        out
    }
}

/// Drift `f(x)` of the uncontrolled system.
pub fn drift(state: &SimState, params: &ModelParams) -> [f64; 3] {
    controlled_rates(state, &Controls::ZERO, params)
}

/// Noise coefficients `(−σ₁S, −σ₁I, −σ₂B)` on channels `(W₁, W₁, W₂)`.
pub fn diffusion(state: &SimState, noise: &NoiseParams) -> Diffusion {
    Diffusion {
        coeffs: [
            -noise.sigma1 * state.s,
            -noise.sigma1 * state.i,
            -noise.sigma2 * state.b,
        ],
        channels: CHANNELS,
    }
}

/// Drift of the controlled system; rejects controls outside `bounds`.
pub fn controlled_drift(
    state: &SimState,
    controls: &Controls,
    bounds: &ControlBounds,
    params: &ModelParams,
) -> Result<[f64; 3]> {
    bounds.check(controls)?;
    Ok(controlled_rates(state, controls, params))
}

/// Controlled drift without the admissibility check, for callers holding
/// already validated control fields.
#[inline]
pub fn controlled_rates(state: &SimState, u: &Controls, params: &ModelParams) -> [f64; 3] {
    let ModelParams {
        omega,
        beta,
        mu,
        mu1,
        alpha,
        p,
        q,
    } = *params;
    let infection = beta * state.s * state.b;
    [
        omega - infection - mu * state.s,
        infection - p * state.i - u.u11 * state.i - mu * state.i,
        (alpha - u.u2) * state.i - q * state.b - u.u12 * state.b - mu1 * state.b,
    ]
}

/// Basic reproduction number `βαω / (μ(p+μ)(q+μ₁))` of the deterministic part.
pub fn reproduction_number(params: &ModelParams) -> f64 {
    let ModelParams {
        omega,
        beta,
        mu,
        mu1,
        alpha,
        p,
        q,
    } = *params;
    beta * alpha * omega / (mu * (p + mu) * (q + mu1))
}

/// `R₀` with both equilibria of the deterministic system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeterministicSummary {
    pub r0: f64,
    pub e0: SimState,
    /// Present only when `R₀ > 1`.
    pub e1: Option<SimState>,
}

pub fn equilibria(params: &ModelParams) -> DeterministicSummary {
    let r0 = reproduction_number(params);
    let ModelParams {
        beta,
        mu,
        mu1,
        alpha,
        p,
        q,
        ..
    } = *params;
    let e0 = SimState::new(params.susceptible_free(), 0.0, 0.0);
    let e1 = (r0 > 1.0).then(|| {
        SimState::new(
            (p + mu) * (q + mu1) / (alpha * beta),
            mu * (mu1 + q) * (r0 - 1.0) / (alpha * beta),
            mu * (r0 - 1.0) / beta,
        )
    });
    DeterministicSummary { r0, e0, e1 }
}

/// Slack in `u ≤ 2(u + 1 − ln u) − (4 − 2 ln 2)`, which is non-negative for
/// every `u > 0` and vanishes only at `u = 2`.
pub fn lemma_gap(u: f64) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(Error::invalid("u", format!("must be positive, got {u}")));
    }
    let ln2 = std::f64::consts::LN_2;
    Ok(2.0 * (u + 1.0 - u.ln()) - (4.0 - 2.0 * ln2) - u)
}

/// Optional diagnostic bounds of the biologically feasible region
/// `S + I ≤ N`, `B ≤ B_max`. Exceeding them is reported, never enforced.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibleRegion {
    pub max_cells: Option<f64>,
    pub max_virions: Option<f64>,
}

impl FeasibleRegion {
    pub fn contains(&self, state: &SimState) -> bool {
        self.max_cells.is_none_or(|n| state.s + state.i <= n)
            && self.max_virions.is_none_or(|b| state.b <= b)
    }

    pub fn is_unset(&self) -> bool {
        self.max_cells.is_none() && self.max_virions.is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TABLE: ModelParams = ModelParams::reference();

    #[test]
    fn drift_vanishes_at_infection_free_state() {
        assert_eq!(drift(&SimState::new(100.0, 0.0, 0.0), &TABLE), [0.0; 3]);
    }

    #[test]
    fn drift_at_origin_is_birth_only() {
        assert_eq!(drift(&SimState::ZERO, &TABLE), [10.0, 0.0, 0.0]);
    }

    #[test]
    fn drift_hand_substitution() {
        let d = drift(&SimState::new(100.0, 10.0, 10.0), &TABLE);
        assert_relative_eq!(d[0], -5.0, epsilon = 1e-12);
        assert_relative_eq!(d[1], -3.95, epsilon = 1e-12);
        assert_relative_eq!(d[2], -6.4, epsilon = 1e-12);
    }

    #[test]
    fn diffusion_cases() {
        let x = SimState::new(100.0, 50.0, 20.0);
        assert_eq!(diffusion(&x, &NoiseParams::ZERO).coeffs, [-0.0, -0.0, -0.0]);
        let g = diffusion(&x, &NoiseParams::new(0.1, 0.1));
        assert_relative_eq!(g.coeffs[0], -10.0, epsilon = 1e-12);
        assert_relative_eq!(g.coeffs[1], -5.0, epsilon = 1e-12);
        assert_relative_eq!(g.coeffs[2], -2.0, epsilon = 1e-12);
        assert_eq!(g.channels, [Channel::W1, Channel::W1, Channel::W2]);
        let g0 = diffusion(&SimState::ZERO, &NoiseParams::new(3.0, 7.0));
        assert!(g0.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn shared_channel_applies_same_increment() {
        let g = diffusion(&SimState::new(2.0, 3.0, 5.0), &NoiseParams::new(1.0, 1.0));
        assert_eq!(g.apply((0.5, -1.0)), [-1.0, -1.5, 5.0]);
    }

    #[test]
    fn controlled_drift_cases() {
        let b = ControlBounds::default();
        let x = SimState::new(100.0, 10.0, 10.0);
        assert_eq!(
            controlled_drift(&x, &Controls::ZERO, &b, &TABLE).unwrap(),
            drift(&x, &TABLE)
        );
        let d = controlled_drift(&x, &Controls::new(0.5, 0.0, 0.0), &b, &TABLE).unwrap();
        assert_relative_eq!(d[1], -8.95, epsilon = 1e-12);
        let y = SimState::new(0.0, 10.0, 0.0);
        let d = controlled_drift(&y, &Controls::new(0.0, 0.0, TABLE.alpha), &b, &TABLE).unwrap();
        assert_eq!(d[2], 0.0);
    }

    #[test]
    fn controlled_drift_rejects_inadmissible() {
        let b = ControlBounds::default();
        let x = SimState::new(1.0, 1.0, 1.0);
        for u in [
            Controls::new(-0.1, 0.0, 0.0),
            Controls::new(0.0, 1.5, 0.0),
            Controls::new(0.0, 0.0, f64::NAN),
        ] {
            assert!(matches!(
                controlled_drift(&x, &u, &b, &TABLE),
                Err(Error::Invalid { .. })
            ));
        }
    }

    #[test]
    fn reproduction_number_cases() {
        assert!((reproduction_number(&TABLE) - 0.15).abs() < 0.005);
        assert_relative_eq!(
            reproduction_number(&ModelParams::persistent()),
            0.12 / (0.1 * 0.895 * 0.38),
            max_relative = 1e-14
        );
        assert!((reproduction_number(&ModelParams::persistent()) - 3.53).abs() < 0.005);
        let mut p = TABLE;
        p.beta = 0.0;
        assert_eq!(reproduction_number(&p), 0.0);
    }

    #[test]
    fn equilibria_cases() {
        let s = equilibria(&TABLE);
        assert_eq!(s.e0, SimState::new(100.0, 0.0, 0.0));
        assert!(s.e1.is_none());

        let e1 = equilibria(&ModelParams::persistent()).e1.unwrap();
        assert!((e1.s - 28.34).abs() < 0.005);
        assert!((e1.i - 8.01).abs() < 0.005);
        assert!((e1.b - 5.06).abs() < 0.005);
    }

    #[test]
    fn equilibria_at_threshold() {
        let mut p = TABLE;
        p.beta = p.mu * (p.p + p.mu) * (p.q + p.mu1) / (p.alpha * p.omega);
        let s = equilibria(&p);
        // R₀ lands within rounding of 1; either E₁ is absent or it collapses onto E₀.
        if let Some(e1) = s.e1 {
            assert!(e1.i.abs() < 1e-12 && e1.b.abs() < 1e-12);
        }
        assert!((s.r0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lemma_gap_cases() {
        assert!(lemma_gap(2.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(
            lemma_gap(1.0).unwrap(),
            2.0 * 2f64.ln() - 1.0,
            epsilon = 1e-14
        );
        assert!((lemma_gap(1.0).unwrap() - 0.3863).abs() < 1e-4);
        assert!((lemma_gap(4.0).unwrap() - 0.6137).abs() < 1e-4);
        assert!(lemma_gap(0.0).is_err());
        assert!(lemma_gap(-1.0).is_err());
    }

    #[test]
    fn params_validation_names_field() {
        let mut p = TABLE;
        p.beta = -1.0;
        let err = p.validate().unwrap_err().to_string();
        assert!(err.contains("params.beta"), "{err}");
        assert!(NoiseParams::new(-0.1, 0.0).validate().is_err());
    }

    #[test]
    fn feasible_region_reports() {
        let r = FeasibleRegion {
            max_cells: Some(150.0),
            max_virions: None,
        };
        assert!(r.contains(&SimState::new(100.0, 40.0, 1e9)));
        assert!(!r.contains(&SimState::new(100.0, 60.0, 0.0)));
        assert!(FeasibleRegion::default().contains(&SimState::new(1e12, 1e12, 1e12)));
    }
}
