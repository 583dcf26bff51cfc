use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Controls, ModelParams, NoiseParams, SimState};
use crate::sim::stats::Moments;
use crate::sim::{PathSeed, TimeGrid, WienerPath, em_step};

use super::{
    AdjointState, ControlField, ControlWeights, adjoint_step_backward, optimal_controls_pointwise,
    running_cost,
};

const CHUNK: usize = 8;

/// Which controls a scenario may use; the others stay at zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    None,
    ImmunoOnly,
    AntiviralOnly,
    Combined,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::None,
        Scenario::ImmunoOnly,
        Scenario::AntiviralOnly,
        Scenario::Combined,
    ];

    /// Active flags for `(u11, u12, u2)`.
    pub fn mask(&self) -> [bool; 3] {
        match self {
            Scenario::None => [false; 3],
            Scenario::ImmunoOnly => [true, true, false],
            Scenario::AntiviralOnly => [false, false, true],
            Scenario::Combined => [true; 3],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Scenario::None => "none",
            Scenario::ImmunoOnly => "immuno",
            Scenario::AntiviralOnly => "antiviral",
            Scenario::Combined => "combined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Weight `θ` of the new control in `θ·u_new + (1−θ)·u_old`.
    pub relaxation: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Size of the frozen Wiener bundle.
    pub n_paths: usize,
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            relaxation: 0.5,
            tolerance: 1e-3,
            max_iterations: 100,
            n_paths: 100,
            base_seed: 20_240_601,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.relaxation > 0.0 && self.relaxation <= 1.0) {
            return Err(Error::invalid(
                "control.sweep.relaxation",
                format!("must lie in (0, 1], got {}", self.relaxation),
            ));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(
                "control.sweep.tolerance",
                "must be positive",
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid(
                "control.sweep.max_iterations",
                "must be at least 1",
            ));
        }
        if self.n_paths == 0 {
            return Err(Error::invalid(
                "control.sweep.n_paths",
                "must be at least 1",
            ));
        }
        Ok(())
    }
}

/// Everything that defines one controlled experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProblem {
    pub initial: SimState,
    pub grid: TimeGrid,
    pub params: ModelParams,
    pub noise: NoiseParams,
    pub weights: ControlWeights,
    /// Constant noise coefficients `(n₁, n₂, n₃)` of the adjoint equation.
    pub adjoint_n: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub control: ControlField,
    #[serde(skip)]
    pub state_mean: Vec<SimState>,
    #[serde(skip)]
    pub state_variance: Vec<SimState>,
    #[serde(skip)]
    pub adjoint_mean: Vec<[f64; 3]>,
    pub cost: CostEstimate,
    /// Cost of each bundle path, in path order.
    #[serde(skip)]
    pub path_costs: Vec<f64>,
    /// Terminal state of each bundle path.
    #[serde(skip)]
    pub terminal: Vec<SimState>,
    pub iterations: usize,
    /// Relative sup-norm control change after each iteration.
    pub convergence_history: Vec<f64>,
    pub converged: bool,
    pub clamp_events: u64,
}

/// Frozen increments shared by every pass and every scenario.
struct Bundle {
    paths: Vec<WienerPath>,
}

impl Bundle {
    fn new(grid: &TimeGrid, noise: &NoiseParams, config: &SweepConfig) -> Self {
        let paths = (0..config.n_paths)
            .into_par_iter()
            .map(|k| {
                let seed = PathSeed::new(config.base_seed, k as u64);
                if noise.is_zero() {
                    WienerPath {
                        seed,
                        ..WienerPath::zero(grid.n_steps)
                    }
                } else {
                    WienerPath::generate(grid.n_steps, grid.dt, seed)
                }
            })
            .collect();
        Self { paths }
    }
}

/// Per-time sums over a block of paths.
struct PassSums {
    state: Vec<[Moments; 3]>,
    adjoint: Vec<[f64; 3]>,
    costs: Vec<f64>,
    terminal: Vec<SimState>,
    clamp_events: u64,
}

impl PassSums {
    fn new(len: usize) -> Self {
        Self {
            state: vec![[Moments::default(); 3]; len],
            adjoint: vec![[0.0; 3]; len],
            costs: Vec::new(),
            terminal: Vec::new(),
            clamp_events: 0,
        }
    }

    fn absorb(&mut self, other: PassSums) {
        for (a, b) in self.state.iter_mut().zip(&other.state) {
            for c in 0..3 {
                a[c].merge(&b[c]);
            }
        }
        for (a, b) in self.adjoint.iter_mut().zip(&other.adjoint) {
            for c in 0..3 {
                a[c] += b[c];
            }
        }
        self.costs.extend(other.costs);
        self.terminal.extend(other.terminal);
        self.clamp_events += other.clamp_events;
    }
}

/// Forward state pass and backward adjoint pass on every bundle path.
fn forward_backward(problem: &ControlProblem, bundle: &Bundle, field: &ControlField) -> PassSums {
    let grid = &problem.grid;
    let dt = grid.dt;
    let n = grid.n_steps;
    let chunks: Vec<&[WienerPath]> = bundle.paths.chunks(CHUNK).collect();
    let partials: Vec<PassSums> = chunks
        .into_par_iter()
        .map(|paths| {
            let mut sums = PassSums::new(grid.len());
            let mut xs = vec![SimState::ZERO; grid.len()];
            for w in paths {
                xs[0] = problem.initial;
                let mut cost = 0.0;
                let mut clamps = 0u64;
                for k in 0..n {
                    let u = field.at(k);
                    cost += running_cost(&xs[k], u, &problem.weights) * dt;
                    let step = em_step(
                        &xs[k],
                        Some(u),
                        &problem.params,
                        &problem.noise,
                        w.increments[k],
                        dt,
                    );
                    clamps += u64::from(step.clamped);
                    xs[k + 1] = step.state;
                }
                let mut adj = AdjointState::terminal(problem.adjoint_n);
                for k in (0..=n).rev() {
                    if k < n {
                        adj = adjoint_step_backward(
                            &adj,
                            &xs[k + 1],
                            field.at(k + 1),
                            &problem.params,
                            &problem.noise,
                            w.increments[k],
                            dt,
                        );
                    }
                    for c in 0..3 {
                        sums.adjoint[k][c] += adj.m[c];
                    }
                }
                for (acc, x) in sums.state.iter_mut().zip(&xs) {
                    acc[0].push(x.s);
                    acc[1].push(x.i);
                    acc[2].push(x.b);
                }
                sums.costs.push(cost);
                sums.terminal.push(xs[n]);
                sums.clamp_events += clamps;
            }
            sums
        })
        .collect();
    let mut total = PassSums::new(grid.len());
    for p in partials {
        total.absorb(p);
    }
    total
}

fn state_means(sums: &PassSums) -> Vec<SimState> {
    sums.state
        .iter()
        .map(|m| SimState::new(m[0].mean, m[1].mean, m[2].mean))
        .collect()
}

fn adjoint_means(sums: &PassSums, n_paths: usize) -> Vec<[f64; 3]> {
    let inv = 1.0 / n_paths as f64;
    sums.adjoint
        .iter()
        .map(|a| [a[0] * inv, a[1] * inv, a[2] * inv])
        .collect()
}

fn sweep_on_bundle(
    problem: &ControlProblem,
    bundle: &Bundle,
    config: &SweepConfig,
    scenario: Scenario,
    initial_guess: Option<&ControlField>,
) -> Result<SweepResult> {
    let grid = problem.grid;
    let bounds = problem.weights.bounds();
    let mask = scenario.mask();
    let mut field = match initial_guess {
        Some(g) => {
            if g.values().len() != grid.len() {
                return Err(Error::LengthMismatch {
                    what: "initial control guess",
                    got: g.values().len(),
                    expected: grid.len(),
                });
            }
            let masked = g.values().iter().map(|u| apply_mask(u, mask)).collect();
            ControlField::new(grid, masked, &bounds)?
        }
        None => ControlField::zeros(grid),
    };

    let mut history = Vec::new();
    let mut converged = scenario == Scenario::None;
    let mut sums = forward_backward(problem, bundle, &field);
    if !converged {
        let theta = config.relaxation;
        for _ in 0..config.max_iterations {
            let xs = state_means(&sums);
            let ms = adjoint_means(&sums, bundle.paths.len());
            let values: Vec<Controls> = field
                .values()
                .iter()
                .zip(xs.iter().zip(&ms))
                .map(|(old, (x, m))| {
                    let target = apply_mask(
                        &optimal_controls_pointwise(
                            x,
                            &AdjointState {
                                m: *m,
                                n: problem.adjoint_n,
                            },
                            &problem.weights,
                        ),
                        mask,
                    );
                    relax(old, &target, theta, &bounds.to_array())
                })
                .collect();
            let next = ControlField::new(grid, values, &bounds)?;
            let change = next.relative_change(&field);
            history.push(change);
            field = next;
            sums = forward_backward(problem, bundle, &field);
            if change < config.tolerance {
                converged = true;
                break;
            }
        }
    }

    let costs: Moments = sums.costs.iter().copied().collect();
    Ok(SweepResult {
        state_mean: state_means(&sums),
        state_variance: sums
            .state
            .iter()
            .map(|m| SimState::new(m[0].variance(), m[1].variance(), m[2].variance()))
            .collect(),
        adjoint_mean: adjoint_means(&sums, bundle.paths.len()),
        cost: CostEstimate {
            mean: costs.mean,
            std_error: costs.std_error(),
        },
        path_costs: sums.costs,
        terminal: sums.terminal,
        iterations: history.len(),
        convergence_history: history,
        converged,
        clamp_events: sums.clamp_events,
        control: field,
    })
}

fn apply_mask(u: &Controls, mask: [bool; 3]) -> Controls {
    let mut a = u.to_array();
    for (v, on) in a.iter_mut().zip(mask) {
        if !on {
            *v = 0.0;
        }
    }
    Controls::from_array(a)
}

/// Convex combination, clipped so rounding can never leave the box.
fn relax(old: &Controls, target: &Controls, theta: f64, max: &[f64; 3]) -> Controls {
    let o = old.to_array();
    let t = target.to_array();
    let mut out = [0.0; 3];
    for c in 0..3 {
        out[c] = (theta * t[c] + (1.0 - theta) * o[c]).clamp(0.0, max[c]);
    }
    Controls::from_array(out)
}

/// Iterate forward state pass, backward adjoint pass and relaxed pointwise
/// control update on a frozen Wiener bundle until the controls settle.
///
/// Non-convergence is reported through [`SweepResult::converged`]; the last
/// iterate is returned either way.
pub fn forward_backward_sweep(
    problem: &ControlProblem,
    config: &SweepConfig,
    initial_guess: Option<&ControlField>,
) -> Result<SweepResult> {
    validate_problem(problem)?;
    config.validate()?;
    let bundle = Bundle::new(&problem.grid, &problem.noise, config);
    sweep_on_bundle(problem, &bundle, config, Scenario::Combined, initial_guess)
}

fn validate_problem(problem: &ControlProblem) -> Result<()> {
    problem.params.validate()?;
    problem.noise.validate()?;
    problem.initial.validate("initial")?;
    problem.weights.validate("control.weights")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: Scenario,
    pub sweep: SweepResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub grid: TimeGrid,
    pub results: Vec<ScenarioResult>,
}

impl ScenarioComparison {
    pub fn get(&self, scenario: Scenario) -> Option<&SweepResult> {
        self.results
            .iter()
            .find(|r| r.scenario == scenario)
            .map(|r| &r.sweep)
    }

    /// Mean and standard error of `J(a) − J(b)` over the shared bundle.
    pub fn paired_cost_difference(&self, a: Scenario, b: Scenario) -> Option<CostEstimate> {
        let (ra, rb) = (self.get(a)?, self.get(b)?);
        let d: Moments = ra
            .path_costs
            .iter()
            .zip(&rb.path_costs)
            .map(|(x, y)| x - y)
            .collect();
        Some(CostEstimate {
            mean: d.mean,
            std_error: d.std_error(),
        })
    }

    pub fn all_converged(&self) -> bool {
        self.results.iter().all(|r| r.sweep.converged)
    }
}

/// Solve each scenario on one common Wiener bundle.
pub fn scenario_compare(
    problem: &ControlProblem,
    scenarios: &[Scenario],
    config: &SweepConfig,
) -> Result<ScenarioComparison> {
    if scenarios.is_empty() {
        return Err(Error::invalid("scenarios", "need at least one scenario"));
    }
    validate_problem(problem)?;
    config.validate()?;
    let bundle = Bundle::new(&problem.grid, &problem.noise, config);
    let results = scenarios
        .iter()
        .map(|&scenario| {
            Ok(ScenarioResult {
                scenario,
                sweep: sweep_on_bundle(problem, &bundle, config, scenario, None)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ScenarioComparison {
        grid: problem.grid,
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{EnsembleConfig, run_ensemble};

    fn problem(weights: ControlWeights) -> ControlProblem {
        let mut params = ModelParams::reference();
        params.beta = 0.05;
        ControlProblem {
            initial: SimState::new(300.0, 80.0, 50.0),
            grid: TimeGrid::new(0.0, 10.0, 0.01).unwrap(),
            params,
            noise: NoiseParams::new(0.05, 0.05),
            weights,
            adjoint_n: [0.01, 0.02, 0.03],
        }
    }

    fn small() -> SweepConfig {
        SweepConfig {
            n_paths: 16,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn controls_stay_admissible_and_terminal_adjoint_is_zero() {
        let p = problem(ControlWeights::new(10.0, 5.0));
        let r = forward_backward_sweep(&p, &small(), None).unwrap();
        assert!(r.converged);
        let b = p.weights.bounds();
        assert!(r.control.values().iter().all(|u| b.contains(u)));
        assert_eq!(*r.adjoint_mean.last().unwrap(), [0.0; 3]);
        assert!(r.convergence_history.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn restart_from_converged_field_is_a_fixed_point() {
        let p = problem(ControlWeights::new(10.0, 5.0));
        let cfg = small();
        let first = forward_backward_sweep(&p, &cfg, None).unwrap();
        let again = forward_backward_sweep(&p, &cfg, Some(&first.control)).unwrap();
        assert!(again.converged);
        assert_eq!(again.iterations, 1);
        assert!(again.convergence_history[0] < cfg.tolerance);
    }

    #[test]
    fn huge_weights_give_no_control() {
        let p = problem(ControlWeights::new(1e9, 1e9));
        let r = forward_backward_sweep(&p, &small(), None).unwrap();
        assert!(
            r.control
                .values()
                .iter()
                .all(|u| u.u11 < 1e-5 && u.u12 < 1e-5 && u.u2 < 1e-5)
        );
        let none = scenario_compare(&p, &[Scenario::None], &small()).unwrap();
        let rel = (r.cost.mean - none.get(Scenario::None).unwrap().cost.mean).abs() / r.cost.mean;
        assert!(rel < 1e-4, "relative cost gap {rel}");
    }

    #[test]
    fn no_control_scenario_matches_plain_ensemble() {
        let p = problem(ControlWeights::new(10.0, 5.0));
        let cfg = small();
        let cmp = scenario_compare(&p, &[Scenario::None], &cfg).unwrap();
        let r = cmp.get(Scenario::None).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.control.is_zero());
        let e = run_ensemble(
            &p.initial,
            &p.grid,
            &p.params,
            &p.noise,
            &EnsembleConfig::with_paths(cfg.n_paths, cfg.base_seed),
            None,
        )
        .unwrap();
        assert_eq!(r.terminal, e.terminal);
        for (a, b) in r.state_mean.iter().zip(&e.stats.mean) {
            assert!((a.b - b.b).abs() <= 1e-9 * (1.0 + b.b.abs()));
        }
    }

    #[test]
    fn single_control_scenarios_hold_others_at_zero() {
        let p = problem(ControlWeights::new(10.0, 5.0));
        let cmp = scenario_compare(
            &p,
            &[Scenario::ImmunoOnly, Scenario::AntiviralOnly],
            &small(),
        )
        .unwrap();
        let imm = cmp.get(Scenario::ImmunoOnly).unwrap();
        assert!(imm.control.values().iter().all(|u| u.u2 == 0.0));
        assert!(imm.control.values().iter().any(|u| u.u11 > 0.0));
        let av = cmp.get(Scenario::AntiviralOnly).unwrap();
        assert!(
            av.control
                .values()
                .iter()
                .all(|u| u.u11 == 0.0 && u.u12 == 0.0)
        );
        assert!(av.control.values().iter().any(|u| u.u2 > 0.0));
    }

    #[test]
    fn non_convergence_is_flagged() {
        let p = problem(ControlWeights::new(10.0, 5.0));
        let cfg = SweepConfig {
            max_iterations: 1,
            tolerance: 1e-12,
            ..small()
        };
        let r = forward_backward_sweep(&p, &cfg, None).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1);
    }

    #[test]
    fn empty_scenario_list_rejected() {
        let p = problem(ControlWeights::new(10.0, 5.0));
        assert!(scenario_compare(&p, &[], &small()).is_err());
    }
}
