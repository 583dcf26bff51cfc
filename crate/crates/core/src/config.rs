//! Run configuration: a TOML document, strictly parsed.
//!
//! ```toml
//! name = "example1"
//! output_dir = "out/example1"
//!
//! [params]
//! omega = 10.0
//! beta = 0.005
//! mu = 0.1
//! mu1 = 0.6
//! alpha = 0.24
//! p = 0.795
//! q = 0.28
//!
//! [noise]
//! sigma1 = 0.1
//! sigma2 = 0.1
//!
//! [grid]
//! t0 = 0.0
//! t_end = 100.0
//! dt = 0.01
//!
//! [initial]
//! s = 100.0
//! i = 100.0
//! b = 100.0
//!
//! [ensemble]
//! n_paths = 500
//! base_seed = 1
//! retention = "stats_only"   # or "all", or { thinned = 10 }
//! ```
//!
//! Optional tables: `[analysis]`, `[feasible]`, `[control]` with
//! `[control.sweep]`, and `[sweep]` with `[[sweep.axes]]`. Unknown keys are
//! errors. Built-in presets are available through [`preset`].

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::control::{ControlProblem, ControlWeights, Scenario, SweepConfig};
use crate::error::{Error, Result};
use crate::model::{FeasibleRegion, ModelParams, NoiseParams, SimState};
use crate::sim::{EnsembleConfig, HistogramSpec, Retention, TimeGrid};
use crate::stability::DEFAULT_EPSILON;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub t0: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 100.0,
            dt: 0.01,
        }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.t0, self.t_end, self.dt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnsembleSettings {
    pub n_paths: usize,
    pub base_seed: u64,
    pub extinction_threshold: f64,
    pub retention: Retention,
    pub quantiles: Vec<f64>,
    pub checkpoints: usize,
    pub histogram: HistogramSpec,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        let d = EnsembleConfig::default();
        Self {
            n_paths: d.n_paths,
            base_seed: d.base_seed,
            extinction_threshold: d.extinction_threshold,
            retention: d.retention,
            quantiles: d.quantiles,
            checkpoints: d.n_checkpoints,
            histogram: d.histogram,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisSettings {
    /// Tail probability of the Chebyshev bound.
    pub epsilon: f64,
}

impl Default for AnalysisSettings {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSettings {
    pub weights: ControlWeights,
    #[serde(default = "default_adjoint_n")]
    pub adjoint_n: [f64; 3],
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default = "default_scenarios")]
    pub scenarios: Vec<Scenario>,
}

fn default_adjoint_n() -> [f64; 3] {
    [0.01, 0.02, 0.03]
}

fn default_scenarios() -> Vec<Scenario> {
    Scenario::ALL.to_vec()
}

impl ControlSettings {
    pub fn new(a1: f64, a2: f64) -> Self {
        Self {
            weights: ControlWeights::new(a1, a2),
            adjoint_n: default_adjoint_n(),
            sweep: SweepConfig::default(),
            scenarios: default_scenarios(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// One swept parameter. `name` is a rate (`beta`, `p`, ...), `sigma1`,
/// `sigma2`, or `sigma` for both noise intensities at once.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    pub min: f64,
    pub max: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|k| {
                let f = k as f64 / (n - 1) as f64;
                match self.spacing {
                    Spacing::Linear => self.min + f * (self.max - self.min),
                    Spacing::Log => (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    ExtinctionProbability,
    LyapunovMax,
    ConditionA,
    ConditionB,
    NegativeDefinite,
    TerminalMeanB,
}

impl Metric {
    pub fn column(&self) -> &'static str {
        match self {
            Metric::ExtinctionProbability => "extinction_probability",
            Metric::LyapunovMax => "lyapunov_max",
            Metric::ConditionA => "condition_a",
            Metric::ConditionB => "condition_b",
            Metric::NegativeDefinite => "negative_definite",
            Metric::TerminalMeanB => "terminal_mean_B",
        }
    }

    pub fn needs_ensemble(&self) -> bool {
        matches!(
            self,
            Metric::ExtinctionProbability | Metric::LyapunovMax | Metric::TerminalMeanB
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<Metric>,
}

fn all_metrics() -> Vec<Metric> {
    vec![
        Metric::ExtinctionProbability,
        Metric::LyapunovMax,
        Metric::ConditionA,
        Metric::ConditionB,
        Metric::NegativeDefinite,
        Metric::TerminalMeanB,
    ]
}

pub const SWEEP_AXIS_NAMES: [&str; 10] = [
    "omega", "beta", "mu", "mu1", "alpha", "p", "q", "sigma1", "sigma2", "sigma",
];

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::invalid(
                "sweep.axes",
                format!("need one or two axes, got {}", self.axes.len()),
            ));
        }
        for (k, a) in self.axes.iter().enumerate() {
            let field = |f: &str| format!("sweep.axes[{k}].{f}");
            if !SWEEP_AXIS_NAMES.contains(&a.name.as_str()) {
                return Err(Error::invalid(
                    field("name"),
                    format!("unknown parameter `{}`", a.name),
                ));
            }
            if a.count < 2 {
                return Err(Error::invalid(field("count"), "must be at least 2"));
            }
            if !(a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
                return Err(Error::invalid(field("min"), "need finite min <= max"));
            }
            if a.spacing == Spacing::Log && a.min <= 0.0 {
                return Err(Error::invalid(field("min"), "log spacing needs min > 0"));
            }
        }
        if self.metrics.is_empty() {
            return Err(Error::invalid("sweep.metrics", "need at least one metric"));
        }
        Ok(())
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub params: ModelParams,
    #[serde(default)]
    pub noise: NoiseParams,
    #[serde(default)]
    pub grid: GridConfig,
    pub initial: SimState,
    #[serde(default)]
    pub ensemble: EnsembleSettings,
    #[serde(default)]
    pub analysis: AnalysisSettings,
    #[serde(default)]
    pub feasible: FeasibleRegion,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    /// A config with default settings around the given model.
    pub fn new(params: ModelParams, noise: NoiseParams, initial: SimState) -> Self {
        Self {
            name: None,
            output_dir: default_output_dir(),
            params,
            noise,
            grid: GridConfig::default(),
            initial,
            ensemble: EnsembleSettings::default(),
            analysis: AnalysisSettings::default(),
            feasible: FeasibleRegion::default(),
            control: None,
            sweep: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.noise.validate()?;
        self.initial.validate("initial")?;
        self.grid.grid()?;
        let e = &self.ensemble;
        if e.n_paths == 0 {
            return Err(Error::invalid("ensemble.n_paths", "must be at least 1"));
        }
        if !(e.extinction_threshold.is_finite() && e.extinction_threshold > 0.0) {
            return Err(Error::invalid(
                "ensemble.extinction_threshold",
                "must be finite and positive",
            ));
        }
        if let Retention::Thinned(0) = e.retention {
            return Err(Error::invalid(
                "ensemble.retention.thinned",
                "must be at least 1",
            ));
        }
        if let Some(q) = e.quantiles.iter().find(|q| !(0.0..=1.0).contains(*q)) {
            return Err(Error::invalid(
                "ensemble.quantiles",
                format!("{q} outside [0, 1]"),
            ));
        }
        if e.checkpoints == 0 {
            return Err(Error::invalid("ensemble.checkpoints", "must be at least 1"));
        }
        let h = &e.histogram;
        if h.bins == 0 {
            return Err(Error::invalid(
                "ensemble.histogram.bins",
                "must be at least 1",
            ));
        }
        if !(h.tail_fraction > 0.0 && h.tail_fraction <= 1.0) {
            return Err(Error::invalid(
                "ensemble.histogram.tail_fraction",
                "must lie in (0, 1]",
            ));
        }
        if let Some([lo, hi]) = h.range
            && !(lo < hi)
        {
            return Err(Error::invalid("ensemble.histogram.range", "need lo < hi"));
        }
        if !(self.analysis.epsilon > 0.0 && self.analysis.epsilon < 1.0) {
            return Err(Error::invalid("analysis.epsilon", "must lie in (0, 1)"));
        }
        for (name, v) in [
            ("max_cells", self.feasible.max_cells),
            ("max_virions", self.feasible.max_virions),
        ] {
            if v.is_some_and(|v| !(v > 0.0)) {
                return Err(Error::invalid(
                    format!("feasible.{name}"),
                    "must be positive",
                ));
            }
        }
        if let Some(c) = &self.control {
            c.weights.validate("control.weights")?;
            c.sweep.validate()?;
            if c.adjoint_n.iter().any(|n| !n.is_finite()) {
                return Err(Error::invalid("control.adjoint_n", "must be finite"));
            }
            if c.scenarios.is_empty() {
                return Err(Error::invalid("control.scenarios", "need at least one"));
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        self.grid.grid()
    }

    pub fn ensemble_config(&self) -> EnsembleConfig {
        let e = &self.ensemble;
        EnsembleConfig {
            n_paths: e.n_paths,
            base_seed: e.base_seed,
            extinction_threshold: e.extinction_threshold,
            retention: e.retention,
            quantiles: e.quantiles.clone(),
            n_checkpoints: e.checkpoints,
            histogram: e.histogram.clone(),
            feasible: self.feasible,
        }
    }

    pub fn control_problem(&self) -> Result<Option<ControlProblem>> {
        let Some(c) = &self.control else {
            return Ok(None);
        };
        Ok(Some(ControlProblem {
            initial: self.initial,
            grid: self.time_grid()?,
            params: self.params,
            noise: self.noise,
            weights: c.weights,
            adjoint_n: c.adjoint_n,
        }))
    }

    /// Set a sweepable parameter by name.
    pub fn set_parameter(&mut self, name: &str, value: f64) -> Result<()> {
        match name {
            "sigma1" => self.noise.sigma1 = value,
            "sigma2" => self.noise.sigma2 = value,
            "sigma" => {
                self.noise.sigma1 = value;
                self.noise.sigma2 = value;
            }
            _ => {
                *self.params.field_mut(name).ok_or_else(|| {
                    Error::invalid("sweep.axes.name", format!("unknown `{name}`"))
                })? = value
            }
        }
        Ok(())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.ensemble.base_seed = seed;
            if let Some(c) = &mut self.control {
                c.sweep.base_seed = seed;
            }
        }
        if let Some(n) = o.paths {
            self.ensemble.n_paths = n;
            if let Some(c) = &mut self.control {
                c.sweep.n_paths = n;
            }
        }
        if let Some(dt) = o.dt {
            self.grid.dt = dt;
        }
        if let Some(t) = o.t_end {
            self.grid.t_end = t;
        }
        if let Some(out) = &o.output_dir {
            self.output_dir = out.clone();
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises to TOML")
    }
}

/// Command-line overrides of config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub output_dir: Option<PathBuf>,
}

/// Parse and validate a TOML config document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::parse(text).map_err(|e| Error::Config {
        path: "<document>".into(),
        message: e.to_string().trim().to_string(),
    })?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
        path: e.path().to_string(),
        message: e.inner().to_string().trim().to_string(),
    })?;
    cfg.validate().map_err(into_config_error)?;
    Ok(cfg)
}

pub fn into_config_error(e: Error) -> Error {
    match e {
        Error::Invalid { field, reason } => Error::Config {
            path: field,
            message: reason,
        },
        other => other,
    }
}

pub const PRESETS: [&str; 11] = [
    "example1",
    "example2",
    "example3",
    "example4",
    "example4_i",
    "example4_ii",
    "example4_iii",
    "fig66a",
    "fig66b",
    "figlkm_a",
    "figlkm_b",
];

/// Horizon used by the control presets.
pub const CONTROL_HORIZON: f64 = 20.0;

fn named(mut cfg: RunConfig, name: &str) -> RunConfig {
    cfg.name = Some(name.to_string());
    cfg.output_dir = PathBuf::from("out").join(name);
    cfg
}

fn example4_case(p: f64, q: f64, initial: SimState) -> RunConfig {
    let mut params = ModelParams::reference();
    params.p = p;
    params.q = q;
    RunConfig::new(params, NoiseParams::new(0.1, 0.1), initial)
}

fn control_preset(a1: f64, a2: f64, initial: SimState) -> RunConfig {
    let mut params = ModelParams::reference();
    params.beta = 0.05;
    let mut cfg = RunConfig::new(params, NoiseParams::new(0.05, 0.05), initial);
    cfg.grid.t_end = CONTROL_HORIZON;
    cfg.ensemble.n_paths = SweepConfig::default().n_paths;
    let mut control = ControlSettings::new(a1, a2);
    // Keep the burst term (α − u₂)I non-negative so the controlled system
    // stays positive without help from the clamp at zero.
    control.weights.u2_max = params.alpha;
    cfg.control = Some(control);
    cfg
}

/// Built-in parameter sets reproducing the reference experiments.
pub fn preset(name: &str) -> Result<RunConfig> {
    let x100 = SimState::new(100.0, 100.0, 100.0);
    let cfg = match name {
        "example1" => RunConfig::new(ModelParams::reference(), NoiseParams::new(0.1, 0.1), x100),
        "example2" => RunConfig::new(ModelParams::persistent(), NoiseParams::new(0.1, 0.1), x100),
        "example3" => RunConfig::new(ModelParams::persistent(), NoiseParams::new(0.5, 0.8), x100),
        "example4_i" => example4_case(0.25, 0.1, SimState::new(200.0, 40.0, 100.0)),
        "example4_ii" => example4_case(0.45, 0.25, SimState::new(200.0, 300.0, 300.0)),
        "example4" | "example4_iii" => example4_case(0.8, 0.4, SimState::new(200.0, 600.0, 600.0)),
        "fig66a" => control_preset(10.0, 5.0, SimState::new(300.0, 80.0, 50.0)),
        "fig66b" => control_preset(10.0, 5.0, SimState::new(200.0, 100.0, 30.0)),
        "figlkm_a" => control_preset(3.0, 3.0, SimState::new(200.0, 100.0, 30.0)),
        "figlkm_b" => control_preset(1.0, 0.8, SimState::new(200.0, 100.0, 30.0)),
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    Ok(named(cfg, name))
}
