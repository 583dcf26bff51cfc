use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::ControlField;
use crate::error::{Error, Result};
use crate::model::{FeasibleRegion, ModelParams, NoiseParams, SimState};

use super::em::{Trajectory, integrate};
use super::grid::TimeGrid;
use super::stats::{Histogram, Moments, quantile_sorted};
use super::wiener::{PathSeed, WienerPath};

/// Paths per parallel work unit. Partial statistics are merged in chunk
/// order, so results do not depend on thread scheduling.
const CHUNK: usize = 8;

/// Clamp events per step above which a path is flagged as under-resolved.
pub const CLAMP_WARNING_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Retention {
    All,
    /// Keep every k-th path.
    Thinned(usize),
    #[default]
    StatsOnly,
}

impl Retention {
    fn keeps(&self, path: usize) -> bool {
        match *self {
            Retention::All => true,
            Retention::Thinned(k) => path.is_multiple_of(k.max(1)),
            Retention::StatsOnly => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistogramSpec {
    pub bins: usize,
    /// Fraction of each path, counted from the end, that is sampled.
    pub tail_fraction: f64,
    /// Defaults to `[0, 2ω/μ]`, which centres `ω/μ` in a bin when `bins` is odd.
    pub range: Option<[f64; 2]>,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            bins: 41,
            tail_fraction: 0.5,
            range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub base_seed: u64,
    /// A path is extinct when `max(I, B)` at the horizon is below this.
    pub extinction_threshold: f64,
    pub retention: Retention,
    pub quantiles: Vec<f64>,
    /// Number of intervals between reported checkpoints.
    pub n_checkpoints: usize,
    pub histogram: HistogramSpec,
    pub feasible: FeasibleRegion,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_paths: 500,
            base_seed: 20_240_501,
            extinction_threshold: 0.01,
            retention: Retention::StatsOnly,
            quantiles: vec![0.05, 0.25, 0.5, 0.75, 0.95],
            n_checkpoints: 100,
            histogram: HistogramSpec::default(),
            feasible: FeasibleRegion::default(),
        }
    }
}

impl EnsembleConfig {
    pub fn with_paths(n_paths: usize, base_seed: u64) -> Self {
        Self {
            n_paths,
            base_seed,
            ..Self::default()
        }
    }

    pub fn retaining(mut self, retention: Retention) -> Self {
        self.retention = retention;
        self
    }

    pub fn path_seed(&self, path: usize) -> PathSeed {
        PathSeed::new(self.base_seed, path as u64)
    }
}

/// Growth rate `(1/t) ln((I+B)(t)/(I+B)(0))` of the infected subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovEstimate {
    Rate(f64),
    /// `I + B` reached exactly zero; the rate is below what the grid resolves.
    ExtinctBelowResolution,
}

impl LyapunovEstimate {
    pub fn rate(&self) -> Option<f64> {
        match *self {
            LyapunovEstimate::Rate(r) => Some(r),
            LyapunovEstimate::ExtinctBelowResolution => None,
        }
    }

    /// True if the estimate is at most `bound`; extinct paths always are.
    pub fn at_most(&self, bound: f64) -> bool {
        self.rate().is_none_or(|r| r <= bound)
    }
}

pub fn lyapunov_estimate(trajectory: &Trajectory) -> Result<LyapunovEstimate> {
    lyapunov_from_endpoints(
        trajectory.initial(),
        trajectory.terminal(),
        trajectory.grid.t_end() - trajectory.grid.t0,
    )
}

fn lyapunov_from_endpoints(
    initial: &SimState,
    terminal: &SimState,
    elapsed: f64,
) -> Result<LyapunovEstimate> {
    let start = initial.infected_load();
    if start <= 0.0 {
        return Err(Error::invalid(
            "trajectory.initial",
            "I + B must be positive to estimate a growth rate",
        ));
    }
    let end = terminal.infected_load();
    if end <= 0.0 {
        return Ok(LyapunovEstimate::ExtinctBelowResolution);
    }
    Ok(LyapunovEstimate::Rate((end / start).ln() / elapsed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileRow {
    pub q: f64,
    pub value: SimState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: f64,
    pub mean: SimState,
    pub variance: SimState,
    pub quantiles: Vec<QuantileRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSummary {
    /// Mean over paths with a finite estimate.
    pub mean: Option<f64>,
    pub max: Option<f64>,
    pub extinct_below_resolution: usize,
    pub per_path: Vec<LyapunovEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub n_paths: usize,
    pub base_seed: u64,
    pub grid: TimeGrid,
    /// Ensemble mean at every grid point.
    #[serde(skip)]
    pub mean: Vec<SimState>,
    /// Ensemble sample variance at every grid point.
    #[serde(skip)]
    pub variance: Vec<SimState>,
    pub checkpoints: Vec<Checkpoint>,
    pub extinction_threshold: f64,
    pub extinct_paths: usize,
    pub extinction_probability: f64,
    /// Absent when the initial state has `I + B = 0`.
    pub lyapunov: Option<LyapunovSummary>,
    pub s_histogram: Option<Histogram>,
    pub clamp_events_total: u64,
    pub max_clamp_fraction: f64,
    pub resolution_warning: bool,
    pub feasible_violations: usize,
}

impl EnsembleStats {
    /// Mean of the ensemble-mean component over grid points `from..`.
    pub fn time_average(&self, from: usize, pick: impl Fn(&SimState) -> f64) -> f64 {
        let xs = &self.mean[from.min(self.mean.len() - 1)..];
        xs.iter().map(pick).sum::<f64>() / xs.len() as f64
    }

    pub fn terminal_mean(&self) -> SimState {
        *self.mean.last().expect("non-empty grid")
    }

    pub fn terminal_variance(&self) -> SimState {
        *self.variance.last().expect("non-empty grid")
    }
}

/// Statistics plus whatever trajectories the retention policy kept.
#[derive(Debug, Clone)]
pub struct Ensemble {
    pub params: ModelParams,
    pub noise: NoiseParams,
    pub stats: EnsembleStats,
    pub trajectories: Vec<Trajectory>,
    /// Terminal state of every path, in path order.
    pub terminal: Vec<SimState>,
}

struct PathOutcome {
    terminal: SimState,
    clamp_events: u64,
    checkpoints: Vec<SimState>,
    feasible_violation: bool,
    retained: Option<Trajectory>,
}

struct Partial {
    moments: Vec<[Moments; 3]>,
    paths: Vec<PathOutcome>,
}

fn checkpoint_indices(grid: &TimeGrid, n: usize) -> Vec<usize> {
    let n = n.clamp(1, grid.n_steps);
    let mut idx: Vec<usize> = (0..=n)
        .map(|j| ((j as f64 / n as f64) * grid.n_steps as f64).round() as usize)
        .collect();
    idx.dedup();
    idx
}

pub fn run_ensemble(
    initial: &SimState,
    grid: &TimeGrid,
    params: &ModelParams,
    noise: &NoiseParams,
    config: &EnsembleConfig,
    controls: Option<&ControlField>,
) -> Result<Ensemble> {
    if config.n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    if let Retention::Thinned(0) = config.retention {
        return Err(Error::invalid(
            "retention.thinned",
            "stride must be at least 1",
        ));
    }
    let cps = checkpoint_indices(grid, config.n_checkpoints);
    let chunks: Vec<std::ops::Range<usize>> = (0..config.n_paths)
        .step_by(CHUNK)
        .map(|a| a..(a + CHUNK).min(config.n_paths))
        .collect();

    let partials: Vec<Partial> = chunks
        .into_par_iter()
        .map(|range| -> Result<Partial> {
            let mut moments = vec![[Moments::default(); 3]; grid.len()];
            let mut paths = Vec::with_capacity(range.len());
            for k in range {
                let seed = config.path_seed(k);
                let w = if noise.is_zero() {
                    WienerPath {
                        seed,
                        ..WienerPath::zero(grid.n_steps)
                    }
                } else {
                    WienerPath::generate(grid.n_steps, grid.dt, seed)
                };
                let traj = integrate(initial, grid, params, noise, &w, controls)?;
                for (acc, x) in moments.iter_mut().zip(&traj.states) {
                    acc[0].push(x.s);
                    acc[1].push(x.i);
                    acc[2].push(x.b);
                }
                paths.push(PathOutcome {
                    terminal: *traj.terminal(),
                    clamp_events: traj.clamp_events,
                    checkpoints: cps.iter().map(|&c| traj.states[c]).collect(),
                    feasible_violation: !config.feasible.is_unset()
                        && traj.states.iter().any(|x| !config.feasible.contains(x)),
                    retained: config.retention.keeps(k).then_some(traj),
                });
            }
            Ok(Partial { moments, paths })
        })
        .collect::<Result<_>>()?;

    let mut moments = vec![[Moments::default(); 3]; grid.len()];
    let mut outcomes = Vec::with_capacity(config.n_paths);
    for part in partials {
        for (acc, m) in moments.iter_mut().zip(&part.moments) {
            for c in 0..3 {
                acc[c].merge(&m[c]);
            }
        }
        outcomes.extend(part.paths);
    }

    let mean: Vec<SimState> = moments
        .iter()
        .map(|m| SimState::new(m[0].mean, m[1].mean, m[2].mean))
        .collect();
    let variance: Vec<SimState> = moments
        .iter()
        .map(|m| SimState::new(m[0].variance(), m[1].variance(), m[2].variance()))
        .collect();

    let checkpoints = cps
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let mut cols: [Vec<f64>; 3] = Default::default();
            for o in &outcomes {
                let x = o.checkpoints[j].to_array();
                for c in 0..3 {
                    cols[c].push(x[c]);
                }
            }
            for col in &mut cols {
                col.sort_by(f64::total_cmp);
            }
            Checkpoint {
                t: grid.time(k),
                mean: mean[k],
                variance: variance[k],
                quantiles: config
                    .quantiles
                    .iter()
                    .map(|&q| QuantileRow {
                        q,
                        value: SimState::new(
                            quantile_sorted(&cols[0], q),
                            quantile_sorted(&cols[1], q),
                            quantile_sorted(&cols[2], q),
                        ),
                    })
                    .collect(),
            }
        })
        .collect();

    let extinct_paths = outcomes
        .iter()
        .filter(|o| o.terminal.i.max(o.terminal.b) < config.extinction_threshold)
        .count();

    let elapsed = grid.t_end() - grid.t0;
    let lyapunov = if initial.infected_load() > 0.0 {
        let per_path = outcomes
            .iter()
            .map(|o| lyapunov_from_endpoints(initial, &o.terminal, elapsed))
            .collect::<Result<Vec<_>>>()?;
        let rates: Moments = per_path.iter().filter_map(|l| l.rate()).collect();
        Some(LyapunovSummary {
            mean: (rates.n > 0).then_some(rates.mean),
            max: per_path
                .iter()
                .filter_map(|l| l.rate())
                .max_by(f64::total_cmp),
            extinct_below_resolution: per_path.iter().filter(|l| l.rate().is_none()).count(),
            per_path,
        })
    } else {
        None
    };

    let max_clamp_fraction = outcomes
        .iter()
        .map(|o| o.clamp_events as f64 / grid.n_steps as f64)
        .fold(0.0, f64::max);

    let stats = EnsembleStats {
        n_paths: config.n_paths,
        base_seed: config.base_seed,
        grid: *grid,
        mean,
        variance,
        checkpoints,
        extinction_threshold: config.extinction_threshold,
        extinct_paths,
        extinction_probability: extinct_paths as f64 / config.n_paths as f64,
        lyapunov,
        s_histogram: None,
        clamp_events_total: outcomes.iter().map(|o| o.clamp_events).sum(),
        max_clamp_fraction,
        resolution_warning: max_clamp_fraction > CLAMP_WARNING_FRACTION,
        feasible_violations: outcomes.iter().filter(|o| o.feasible_violation).count(),
    };
    let terminal = outcomes.iter().map(|o| o.terminal).collect();
    let trajectories: Vec<Trajectory> = outcomes.into_iter().filter_map(|o| o.retained).collect();

    let mut ensemble = Ensemble {
        params: *params,
        noise: *noise,
        stats,
        trajectories,
        terminal,
    };
    if !ensemble.trajectories.is_empty() {
        ensemble.stats.s_histogram = Some(s_histogram_with(&ensemble, &config.histogram)?);
    }
    Ok(ensemble)
}

/// Histogram of `S` over the trailing `tail_fraction` of every retained path.
pub fn stationary_s_histogram(ensemble: &Ensemble, tail_fraction: f64) -> Result<Histogram> {
    s_histogram_with(
        ensemble,
        &HistogramSpec {
            tail_fraction,
            ..HistogramSpec::default()
        },
    )
}

pub fn s_histogram_with(ensemble: &Ensemble, spec: &HistogramSpec) -> Result<Histogram> {
    if !(spec.tail_fraction > 0.0 && spec.tail_fraction <= 1.0) {
        return Err(Error::invalid(
            "histogram.tail_fraction",
            format!("must lie in (0, 1], got {}", spec.tail_fraction),
        ));
    }
    if ensemble.trajectories.is_empty() {
        return Err(Error::Empty(
            "no retained trajectories; run the ensemble with retention `all` or `thinned`",
        ));
    }
    let [lo, hi] = spec
        .range
        .unwrap_or([0.0, 2.0 * ensemble.params.susceptible_free()]);
    let mut h = Histogram::new(lo, hi, spec.bins.max(1));
    let from = ensemble.stats.grid.tail_start(spec.tail_fraction);
    h.fill(
        ensemble
            .trajectories
            .iter()
            .flat_map(|t| t.states[from..].iter().map(|x| x.s)),
    );
    Ok(h)
}
