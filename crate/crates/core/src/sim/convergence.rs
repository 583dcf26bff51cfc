//! Strong self-convergence of the Euler–Maruyama scheme.
//!
//! Every level reuses one fine Brownian path per sample, summed onto the
//! coarser grids, so differences between levels measure discretisation error
//! only.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, NoiseParams, SimState};

use super::em::integrate;
use super::grid::TimeGrid;
use super::stats::Moments;
use super::wiener::{PathSeed, WienerPath};

/// Extra refinement of the reference solution beyond the finest level.
pub const REFERENCE_FACTOR: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSetup {
    pub coarse: TimeGrid,
    /// Subdivision factors of the coarse step, one per measured level.
    pub levels: Vec<usize>,
    /// Subdivision factor of the reference solution; every level must divide it.
    pub reference: usize,
    pub n_paths: usize,
    pub base_seed: u64,
}

impl ConvergenceSetup {
    /// `n_levels` successive halvings of `coarse.dt`, measured against a
    /// reference a further `REFERENCE_FACTOR` times finer.
    pub fn halvings(coarse: TimeGrid, n_levels: usize, n_paths: usize, base_seed: u64) -> Self {
        let levels: Vec<usize> = (0..n_levels).map(|l| 1 << l).collect();
        let finest = levels.last().copied().unwrap_or(1);
        Self {
            coarse,
            levels,
            reference: finest * REFERENCE_FACTOR,
            n_paths,
            base_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLevel {
    pub dt: f64,
    /// `E|X_ref(T) − X_level(T)|`.
    pub strong_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub reference_dt: f64,
    pub levels: Vec<ConvergenceLevel>,
    /// Least-squares slope of `ln error` against `ln dt`; absent when fewer
    /// than two levels have distinct steps and non-zero error.
    pub observed_order: Option<f64>,
}

fn distance(a: &SimState, b: &SimState) -> f64 {
    SimState::new(a.s - b.s, a.i - b.i, a.b - b.b).norm()
}

pub fn self_convergence(
    initial: &SimState,
    params: &ModelParams,
    noise: &NoiseParams,
    setup: &ConvergenceSetup,
) -> Result<ConvergenceStudy> {
    if setup.n_paths == 0 {
        return Err(Error::invalid("n_paths", "must be at least 1"));
    }
    if setup.levels.is_empty() {
        return Err(Error::invalid("levels", "need at least one level"));
    }
    if let Some(&bad) = setup
        .levels
        .iter()
        .find(|&&f| f == 0 || !setup.reference.is_multiple_of(f))
    {
        return Err(Error::invalid(
            "levels",
            format!(
                "factor {bad} does not divide the reference factor {}",
                setup.reference
            ),
        ));
    }
    let fine = setup.coarse.refined(setup.reference);

    let per_path: Vec<Vec<f64>> = (0..setup.n_paths)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let w = WienerPath::generate(
                fine.n_steps,
                fine.dt,
                PathSeed::new(setup.base_seed, k as u64),
            );
            let reference = integrate(initial, &fine, params, noise, &w, None)?;
            setup
                .levels
                .iter()
                .map(|&f| {
                    let grid = setup.coarse.refined(f);
                    let t = integrate(
                        initial,
                        &grid,
                        params,
                        noise,
                        &w.coarsen(setup.reference / f),
                        None,
                    )?;
                    Ok(distance(reference.terminal(), t.terminal()))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let levels: Vec<ConvergenceLevel> = setup
        .levels
        .iter()
        .enumerate()
        .map(|(j, &f)| {
            let m: Moments = per_path.iter().map(|e| e[j]).collect();
            ConvergenceLevel {
                dt: setup.coarse.dt / f as f64,
                strong_error: m.mean,
                std_error: m.std_error(),
            }
        })
        .collect();

    Ok(ConvergenceStudy {
        reference_dt: fine.dt,
        observed_order: fitted_order(&levels),
        levels,
    })
}

fn fitted_order(levels: &[ConvergenceLevel]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.strong_error > 0.0)
        .map(|l| (l.dt.ln(), l.strong_error.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}
