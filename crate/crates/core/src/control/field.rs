use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ControlBounds, Controls};
use crate::sim::TimeGrid;

/// Time-gridded controls, one triple per grid point, every value inside its
/// admissible interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    grid: TimeGrid,
    values: Vec<Controls>,
}

impl ControlField {
    pub fn new(grid: TimeGrid, values: Vec<Controls>, bounds: &ControlBounds) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "control field",
                got: values.len(),
                expected: grid.len(),
            });
        }
        for (k, u) in values.iter().enumerate() {
            bounds.check(u).map_err(|e| match e {
                Error::Invalid { field, reason } => Error::Invalid {
                    field: format!("{field}[{k}]"),
                    reason,
                },
                other => other,
            })?;
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            grid,
            values: vec![Controls::ZERO; grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Controls] {
        &self.values
    }

    pub fn at(&self, k: usize) -> &Controls {
        &self.values[k]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|u| *u == Controls::ZERO)
    }

    /// Time integral of each control (left Riemann sum).
    pub fn integral(&self) -> Controls {
        let dt = self.grid.dt;
        let mut acc = [0.0; 3];
        for u in &self.values[..self.grid.n_steps] {
            for (a, v) in acc.iter_mut().zip(u.to_array()) {
                *a += v * dt;
            }
        }
        Controls::from_array(acc)
    }

    /// Largest relative change in sup norm between two fields, per component,
    /// then maximised over components.
    pub fn relative_change(&self, previous: &ControlField) -> f64 {
        let mut worst: f64 = 0.0;
        for c in 0..3 {
            let mut diff: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for (a, b) in self.values.iter().zip(&previous.values) {
                let (a, b) = (a.to_array()[c], b.to_array()[c]);
                diff = diff.max((a - b).abs());
                scale = scale.max(a.abs()).max(b.abs());
            }
            if diff > 0.0 {
                worst = worst.max(diff / scale);
            }
        }
        worst
    }
}
