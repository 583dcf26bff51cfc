use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::model::{Controls, ModelParams, NoiseParams, SimState, controlled_rates, diffusion};

use super::grid::TimeGrid;
use super::wiener::{PathSeed, WienerPath};

/// Result of one Euler–Maruyama step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub state: SimState,
    /// Components truncated at zero in this step.
    pub clamped: u32,
}

/// `X + f(X)·dt + g(X)·ΔW`, each component then truncated at zero.
///
/// `ΔW₁` drives both `S` and `I`; `ΔW₂` drives `B`.
#[inline]
pub fn em_step(
    state: &SimState,
    controls: Option<&Controls>,
    params: &ModelParams,
    noise: &NoiseParams,
    dw: (f64, f64),
    dt: f64,
) -> Step {
    let f = controlled_rates(state, controls.unwrap_or(&Controls::ZERO), params);
    let g = diffusion(state, noise).apply(dw);
    let x = state.to_array();
    let mut next = [0.0; 3];
    let mut clamped = 0;
    for k in 0..3 {
        let v = x[k] + f[k] * dt + g[k];
        next[k] = if v < 0.0 {
            clamped += 1;
            0.0
        } else {
            v
        };
    }
    Step {
        state: SimState::from_array(next),
        clamped,
    }
}

/// A discrete solution on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub states: Vec<SimState>,
    pub clamp_events: u64,
    /// Control values applied at each grid point, when the run was controlled.
    pub controls: Option<Vec<Controls>>,
    pub seed: PathSeed,
}

impl Trajectory {
    pub fn initial(&self) -> &SimState {
        &self.states[0]
    }

    pub fn terminal(&self) -> &SimState {
        self.states
            .last()
            .expect("trajectory has at least one state")
    }

    /// Truncation events per step.
    pub fn clamp_fraction(&self) -> f64 {
        self.clamp_events as f64 / self.grid.n_steps as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.times()
    }
}

/// Integrate along a given set of Wiener increments.
pub fn integrate(
    initial: &SimState,
    grid: &TimeGrid,
    params: &ModelParams,
    noise: &NoiseParams,
    path: &WienerPath,
    controls: Option<&ControlField>,
) -> Result<Trajectory> {
    if path.len() != grid.n_steps {
        return Err(Error::LengthMismatch {
            what: "wiener path",
            got: path.len(),
            expected: grid.n_steps,
        });
    }
    if let Some(field) = controls
        && (field.values().len() != grid.len() || field.grid().dt != grid.dt)
    {
        return Err(Error::LengthMismatch {
            what: "control field",
            got: field.values().len(),
            expected: grid.len(),
        });
    }
    let mut states = Vec::with_capacity(grid.len());
    states.push(*initial);
    let mut x = *initial;
    let mut clamp_events = 0u64;
    for (k, &dw) in path.increments.iter().enumerate() {
        let u = controls.map(|c| c.at(k));
        let step = em_step(&x, u, params, noise, dw, grid.dt);
        clamp_events += u64::from(step.clamped);
        x = step.state;
        states.push(x);
    }
    Ok(Trajectory {
        grid: *grid,
        states,
        clamp_events,
        controls: controls.map(|c| c.values().to_vec()),
        seed: path.seed,
    })
}

/// Simulate one path, drawing its increments from `seed`.
pub fn simulate_path(
    initial: &SimState,
    grid: &TimeGrid,
    params: &ModelParams,
    noise: &NoiseParams,
    seed: impl Into<PathSeed>,
    controls: Option<&ControlField>,
) -> Result<Trajectory> {
    let seed = seed.into();
    let path = if noise.is_zero() {
        WienerPath {
            seed,
            ..WienerPath::zero(grid.n_steps)
        }
    } else {
        WienerPath::generate(grid.n_steps, grid.dt, seed)
    };
    integrate(initial, grid, params, noise, &path, controls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ControlBounds, drift};
    use approx::assert_relative_eq;

    const TABLE: ModelParams = ModelParams::reference();

    #[test]
    fn zero_increment_is_explicit_euler() {
        let x = SimState::new(100.0, 10.0, 10.0);
        let step = em_step(
            &x,
            None,
            &TABLE,
            &NoiseParams::new(0.3, 0.3),
            (0.0, 0.0),
            0.01,
        );
        let f = drift(&x, &TABLE);
        assert_eq!(step.state.s, x.s + f[0] * 0.01);
        assert_eq!(step.state.i, x.i + f[1] * 0.01);
        assert_eq!(step.state.b, x.b + f[2] * 0.01);
        assert_eq!(step.clamped, 0);
    }

    #[test]
    fn hand_step_at_equilibrium() {
        let x = SimState::new(100.0, 0.0, 0.0);
        let step = em_step(
            &x,
            None,
            &TABLE,
            &NoiseParams::new(0.1, 0.0),
            (0.05, 0.0),
            0.01,
        );
        assert_relative_eq!(step.state.s, 99.5, epsilon = 1e-12);
    }

    #[test]
    fn negative_excursion_is_clamped() {
        let x = SimState::new(0.001, 0.0, 0.0);
        let step = em_step(
            &x,
            None,
            &TABLE,
            &NoiseParams::new(1.0, 0.0),
            (1000.0, 0.0),
            0.01,
        );
        assert_eq!(step.state.s, 0.0);
        assert_eq!(step.clamped, 1);
    }

    #[test]
    fn deterministic_run_clears_infection() {
        let g = TimeGrid::new(0.0, 100.0, 0.01).unwrap();
        let t = simulate_path(
            &SimState::new(100.0, 100.0, 100.0),
            &g,
            &TABLE,
            &NoiseParams::ZERO,
            1,
            None,
        )
        .unwrap();
        assert_eq!(t.states.len(), g.len());
        let end = t.terminal();
        assert!(end.i < 0.01 && end.b < 0.01, "{end:?}");
        // After the initial transient both decay monotonically.
        let from = g.tail_start(0.9);
        for w in t.states[from..].windows(2) {
            assert!(w[1].i <= w[0].i && w[1].b <= w[0].b);
        }
    }

    #[test]
    fn infection_free_face_is_invariant() {
        let g = TimeGrid::new(0.0, 50.0, 0.01).unwrap();
        let t = simulate_path(
            &SimState::ZERO,
            &g,
            &TABLE,
            &NoiseParams::new(0.5, 0.5),
            9,
            None,
        )
        .unwrap();
        assert!(t.states.iter().all(|x| x.i == 0.0 && x.b == 0.0));
        assert!(t.terminal().s > 90.0);
    }

    #[test]
    fn same_seed_same_trajectory() {
        let g = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        let run = |seed| {
            simulate_path(
                &SimState::new(100.0, 100.0, 100.0),
                &g,
                &TABLE,
                &NoiseParams::new(0.1, 0.1),
                seed,
                None,
            )
            .unwrap()
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5).states, run(6).states);
    }

    #[test]
    fn control_field_length_mismatch_is_rejected() {
        let g = TimeGrid::new(0.0, 1.0, 0.01).unwrap();
        let other = TimeGrid::new(0.0, 2.0, 0.01).unwrap();
        let field = ControlField::zeros(other);
        let err = simulate_path(
            &SimState::new(1.0, 1.0, 1.0),
            &g,
            &TABLE,
            &NoiseParams::ZERO,
            0,
            Some(&field),
        );
        assert!(matches!(err, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn controls_are_applied_and_recorded() {
        let g = TimeGrid::new(0.0, 5.0, 0.01).unwrap();
        let bounds = ControlBounds::default();
        let field =
            ControlField::new(g, vec![Controls::new(0.5, 0.5, 0.2); g.len()], &bounds).unwrap();
        let x0 = SimState::new(100.0, 50.0, 50.0);
        let plain = simulate_path(&x0, &g, &TABLE, &NoiseParams::ZERO, 0, None).unwrap();
        let treated = simulate_path(&x0, &g, &TABLE, &NoiseParams::ZERO, 0, Some(&field)).unwrap();
        assert!(treated.terminal().b < plain.terminal().b);
        assert!(treated.terminal().i < plain.terminal().i);
        assert_eq!(treated.controls.as_ref().unwrap().len(), g.len());
    }
}
