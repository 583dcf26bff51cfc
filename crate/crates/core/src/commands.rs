//! The four subcommands: `analyze`, `simulate`, `control` and `sweep`.
//!
//! Each has a pure half that returns data and a `cmd_*` half that writes the
//! artifacts into the config's output directory and returns an [`Outcome`]
//! for the caller to print.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Metric, RunConfig, SweepSpec, into_config_error};
use crate::control::{CostEstimate, Scenario, ScenarioComparison, scenario_compare};
use crate::error::{Error, Result};
use crate::io;
use crate::model::{DeterministicSummary, ModelParams, NoiseParams, equilibria};
use crate::sim::{Ensemble, Retention, run_ensemble};
use crate::stability::{StabilityReport, stability_report};

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub summary: Vec<String>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Analysis {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub params: ModelParams,
    pub noise: NoiseParams,
    pub deterministic: DeterministicSummary,
    pub stability: StabilityReport,
    pub predicts_extinction: bool,
}

pub fn analyze(cfg: &RunConfig) -> Result<Analysis> {
    let stability = stability_report(&cfg.params, &cfg.noise, cfg.analysis.epsilon)?;
    Ok(Analysis {
        name: cfg.name.clone(),
        params: cfg.params,
        noise: cfg.noise,
        deterministic: equilibria(&cfg.params),
        predicts_extinction: stability.predicts_extinction(),
        stability,
    })
}

pub fn cmd_analyze(cfg: &RunConfig) -> Result<Outcome> {
    let a = analyze(cfg)?;
    let path = cfg.output_dir.join("analysis.json");
    io::write_json(&path, &a)?;
    let s = &a.stability;
    let mut warnings = Vec::new();
    if s.criteria_disagree {
        warnings.push(format!(
            "conditions A/B as printed ({}/{}) disagree with the eigenvalue test (lambda_max = {:.6})",
            s.condition_a.holds, s.condition_b.holds, s.eigenvalues.max
        ));
    }
    Ok(Outcome {
        summary: vec![format!(
            "R0 = {:.6}  condition A: {}  condition B: {}  negative definite: {}  lambda_max = {:.6}",
            a.deterministic.r0,
            s.condition_a.holds,
            s.condition_b.holds,
            s.negative_definite,
            s.eigenvalues.max
        )],
        warnings,
        files: vec![path],
    })
}

pub fn simulate(cfg: &RunConfig) -> Result<Ensemble> {
    run_ensemble(
        &cfg.initial,
        &cfg.time_grid()?,
        &cfg.params,
        &cfg.noise,
        &cfg.ensemble_config(),
        None,
    )
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Outcome> {
    let ens = simulate(cfg)?;
    let out = &cfg.output_dir;
    let mut files = vec![out.join("stats.json"), out.join("mean.csv")];
    io::write_json(&files[0], &ens.stats)?;
    io::write_moments_csv(
        &files[1],
        &ens.stats.grid,
        &ens.stats.mean,
        &ens.stats.variance,
    )?;
    for traj in &ens.trajectories {
        let path = out
            .join("paths")
            .join(format!("path_{:05}.csv", traj.seed.stream));
        io::write_trajectory_csv(&path, traj)?;
        files.push(path);
    }
    let st = &ens.stats;
    let m = st.terminal_mean();
    let mut warnings = Vec::new();
    if st.resolution_warning {
        warnings.push(format!(
            "clamping at zero hit {:.2}% of steps on the worst path; reduce dt",
            100.0 * st.max_clamp_fraction
        ));
    }
    if st.feasible_violations > 0 {
        warnings.push(format!(
            "{} paths left the configured feasible region",
            st.feasible_violations
        ));
    }
    Ok(Outcome {
        summary: vec![format!(
            "paths = {}  extinction probability = {:.4}  terminal mean (S, I, B) = ({:.4}, {:.4}, {:.4})",
            st.n_paths, st.extinction_probability, m.s, m.i, m.b
        )],
        warnings,
        files,
    })
}

fn require_control(cfg: &RunConfig) -> Result<&crate::config::ControlSettings> {
    cfg.control.as_ref().ok_or_else(|| Error::Config {
        path: "control".into(),
        message: "the control command needs a [control] table".into(),
    })
}

pub fn control(cfg: &RunConfig) -> Result<ScenarioComparison> {
    let settings = require_control(cfg)?;
    let problem = cfg.control_problem()?.expect("control table checked above");
    scenario_compare(&problem, &settings.scenarios, &settings.sweep)
}

#[derive(Debug, Clone, Serialize)]
struct PairedDifference {
    a: Scenario,
    b: Scenario,
    difference: CostEstimate,
}

#[derive(Debug, Serialize)]
struct ControlReport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    name: &'a Option<String>,
    settings: &'a crate::config::ControlSettings,
    warnings: &'a [String],
    paired_differences: Vec<PairedDifference>,
    comparison: &'a ScenarioComparison,
}

pub fn cmd_control(cfg: &RunConfig) -> Result<Outcome> {
    let settings = require_control(cfg)?;
    let warnings = settings.weights.warnings(&cfg.params);
    let cmp = control(cfg)?;
    let out = &cfg.output_dir;

    let mut paired = Vec::new();
    for (k, ra) in cmp.results.iter().enumerate() {
        for rb in &cmp.results[k + 1..] {
            if let Some(difference) = cmp.paired_cost_difference(ra.scenario, rb.scenario) {
                paired.push(PairedDifference {
                    a: ra.scenario,
                    b: rb.scenario,
                    difference,
                });
            }
        }
    }
    let report = ControlReport {
        name: &cfg.name,
        settings,
        warnings: &warnings,
        paired_differences: paired,
        comparison: &cmp,
    };
    let mut files = vec![out.join("control.json"), out.join("scenarios.csv")];
    io::write_json(&files[0], &report)?;
    io::write_scenario_csv(&files[1], &cmp)?;
    for r in &cmp.results {
        let path = out.join(format!("controls_{}.csv", r.scenario.label()));
        io::write_control_csv(&path, &r.sweep.control)?;
        files.push(path);
    }

    let summary = cmp
        .results
        .iter()
        .map(|r| {
            format!(
                "{:<10} J = {:.4} ± {:.4}  iterations = {}  converged = {}",
                r.scenario.label(),
                r.sweep.cost.mean,
                r.sweep.cost.std_error,
                r.sweep.iterations,
                r.sweep.converged
            )
        })
        .collect();
    if let Some(r) = cmp.results.iter().find(|r| !r.sweep.converged) {
        return Err(Error::NotConverged {
            iterations: r.sweep.iterations,
            last_change: r
                .sweep
                .convergence_history
                .last()
                .copied()
                .unwrap_or(f64::NAN),
        });
    }
    Ok(Outcome {
        summary,
        warnings,
        files,
    })
}

/// One grid cell of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub coordinates: Vec<f64>,
    /// Values in the order of the sweep's metrics; booleans as 0/1.
    pub metrics: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub axes: Vec<String>,
    pub metrics: Vec<Metric>,
    pub rows: Vec<SweepRow>,
    /// Adjacent first-axis values between which the extinction probability
    /// first reaches one half, for one-axis sweeps.
    pub transition_bracket: Option<[f64; 2]>,
}

impl SweepTable {
    pub fn column(&self, metric: Metric) -> Option<Vec<f64>> {
        let j = self.metrics.iter().position(|&m| m == metric)?;
        Some(self.rows.iter().map(|r| r.metrics[j]).collect())
    }
}

/// First adjacent pair `[x_k, x_{k+1}]` with `y_k < level ≤ y_{k+1}`.
pub fn transition_bracket(xs: &[f64], ys: &[f64], level: f64) -> Option<[f64; 2]> {
    xs.windows(2)
        .zip(ys.windows(2))
        .find(|(_, y)| y[0] < level && y[1] >= level)
        .map(|(x, _)| [x[0], x[1]])
}

fn sweep_cell(base: &RunConfig, spec: &SweepSpec, coords: &[f64]) -> Result<SweepRow> {
    let mut cfg = base.clone();
    for (axis, &v) in spec.axes.iter().zip(coords) {
        cfg.set_parameter(&axis.name, v)?;
    }
    cfg.validate().map_err(into_config_error)?;
    let report = stability_report(&cfg.params, &cfg.noise, cfg.analysis.epsilon)?;
    let ensemble = if spec.metrics.iter().any(Metric::needs_ensemble) {
        let mut ec = cfg.ensemble_config();
        ec.retention = Retention::StatsOnly;
        Some(run_ensemble(
            &cfg.initial,
            &cfg.time_grid()?,
            &cfg.params,
            &cfg.noise,
            &ec,
            None,
        )?)
    } else {
        None
    };
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let metrics = spec
        .metrics
        .iter()
        .map(|m| {
            let st = ensemble.as_ref().map(|e| &e.stats);
            match m {
                Metric::ConditionA => flag(report.condition_a.holds),
                Metric::ConditionB => flag(report.condition_b.holds),
                Metric::NegativeDefinite => flag(report.negative_definite),
                Metric::ExtinctionProbability => st.map_or(f64::NAN, |s| s.extinction_probability),
                Metric::TerminalMeanB => st.map_or(f64::NAN, |s| s.terminal_mean().b),
                Metric::LyapunovMax => st
                    .and_then(|s| s.lyapunov.as_ref())
                    .and_then(|l| l.max)
                    .unwrap_or(f64::NEG_INFINITY),
            }
        })
        .collect();
    Ok(SweepRow {
        coordinates: coords.to_vec(),
        metrics,
    })
}

pub fn sweep(cfg: &RunConfig, spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate().map_err(into_config_error)?;
    let values: Vec<Vec<f64>> = spec.axes.iter().map(|a| a.values()).collect();
    let cells: Vec<Vec<f64>> = match values.as_slice() {
        [x] => x.iter().map(|&a| vec![a]).collect(),
        [x, y] => x
            .iter()
            .flat_map(|&a| y.iter().map(move |&b| vec![a, b]))
            .collect(),
        _ => unreachable!("validated axis count"),
    };
    let rows = cells
        .par_iter()
        .map(|c| sweep_cell(cfg, spec, c))
        .collect::<Result<Vec<_>>>()?;
    let mut table = SweepTable {
        axes: spec.axes.iter().map(|a| a.name.clone()).collect(),
        metrics: spec.metrics.clone(),
        rows,
        transition_bracket: None,
    };
    if spec.axes.len() == 1
        && let Some(p) = table.column(Metric::ExtinctionProbability)
    {
        table.transition_bracket = transition_bracket(&values[0], &p, 0.5);
    }
    Ok(table)
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::Config {
        path: "sweep".into(),
        message: "the sweep command needs a [sweep] table".into(),
    })?;
    let table = sweep(cfg, spec)?;
    let header: Vec<String> = table
        .axes
        .iter()
        .cloned()
        .chain(table.metrics.iter().map(|m| m.column().to_string()))
        .collect();
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            r.coordinates
                .iter()
                .chain(&r.metrics)
                .map(|v| v.to_string())
                .collect()
        })
        .collect();
    let csv = cfg.output_dir.join("sweep.csv");
    let json = cfg.output_dir.join("sweep.json");
    io::write_table_csv(&csv, &header, &rows)?;
    io::write_json(&json, &table)?;
    let mut summary = vec![format!("{} cells", table.rows.len())];
    if let Some([lo, hi]) = table.transition_bracket {
        summary.push(format!(
            "extinction probability crosses 0.5 between {} = {lo:.6} and {hi:.6}",
            table.axes[0]
        ));
    }
    Ok(Outcome {
        summary,
        warnings: Vec::new(),
        files: vec![csv, json],
    })
}
