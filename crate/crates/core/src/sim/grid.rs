use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid `t_k = t0 + k·dt`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn from_steps(t0: f64, dt: f64, n_steps: usize) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(
                "grid.dt",
                format!("must be positive, got {dt}"),
            ));
        }
        if !t0.is_finite() {
            return Err(Error::invalid("grid.t0", "must be finite"));
        }
        if n_steps == 0 {
            return Err(Error::invalid("grid", "needs at least one step"));
        }
        Ok(Self { t0, dt, n_steps })
    }

    /// Grid covering `[t0, t_end]`; `(t_end − t0)/dt` must be an integer up
    /// to rounding.
    pub fn new(t0: f64, t_end: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::invalid(
                "grid.dt",
                format!("must be positive, got {dt}"),
            ));
        }
        let span = t_end - t0;
        if !(span.is_finite() && span > 0.0) {
            return Err(Error::invalid(
                "grid.t_end",
                format!("must exceed t0 = {t0}, got {t_end}"),
            ));
        }
        let steps = span / dt;
        let n = steps.round();
        if (steps - n).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::invalid(
                "grid.dt",
                format!("{dt} does not divide the horizon {span}"),
            ));
        }
        Self::from_steps(t0, dt, n as usize)
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// Number of grid points, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.time(k))
    }

    /// Same horizon with `dt` divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt / factor as f64,
            n_steps: self.n_steps * factor,
        }
    }

    /// First index of the trailing `fraction` of the grid.
    pub fn tail_start(&self, fraction: f64) -> usize {
        let skip = ((1.0 - fraction) * self.n_steps as f64).round() as usize;
        skip.min(self.n_steps)
    }
}
