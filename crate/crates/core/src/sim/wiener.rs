use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;

/// Seed of one Wiener path: a base seed plus an independent ChaCha stream.
///
/// Path `k` of an ensemble uses stream `k`, so paths can be generated in any
/// order or in parallel and still reproduce exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSeed {
    pub base: u64,
    pub stream: u64,
}

impl PathSeed {
    pub const fn new(base: u64, stream: u64) -> Self {
        Self { base, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base);
        rng.set_stream(self.stream);
        rng
    }
}

impl From<u64> for PathSeed {
    fn from(base: u64) -> Self {
        Self::new(base, 0)
    }
}

/// Increments `(ΔW₁, ΔW₂)` of two independent Brownian motions on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    pub increments: Vec<(f64, f64)>,
    pub seed: PathSeed,
}

impl WienerPath {
    pub fn generate(n_steps: usize, dt: f64, seed: PathSeed) -> Self {
        let scale = dt.sqrt();
        let mut rng = seed.rng();
        let increments = (0..n_steps)
            .map(|_| {
                let z1: f64 = rng.sample(StandardNormal);
                let z2: f64 = rng.sample(StandardNormal);
                (scale * z1, scale * z2)
            })
            .collect();
        Self { increments, seed }
    }

    pub fn zero(n_steps: usize) -> Self {
        Self {
            increments: vec![(0.0, 0.0); n_steps],
            seed: PathSeed::new(0, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Sum consecutive blocks of `factor` increments: the same Brownian path
    /// sampled on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Self {
        assert!(factor >= 1 && self.len().is_multiple_of(factor));
        let increments = self
            .increments
            .chunks_exact(factor)
            .map(|c| c.iter().fold((0.0, 0.0), |a, d| (a.0 + d.0, a.1 + d.1)))
            .collect();
        Self {
            increments,
            seed: self.seed,
        }
    }
}

/// Wiener increments for `grid`, reproducible from `seed`.
pub fn wiener_path(grid: &TimeGrid, seed: impl Into<PathSeed>) -> WienerPath {
    WienerPath::generate(grid.n_steps, grid.dt, seed.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_path() {
        let g = TimeGrid::from_steps(0.0, 0.01, 1000).unwrap();
        assert_eq!(wiener_path(&g, 42), wiener_path(&g, 42));
        assert_ne!(wiener_path(&g, 42), wiener_path(&g, 43));
        assert_ne!(
            wiener_path(&g, PathSeed::new(42, 1)).increments,
            wiener_path(&g, PathSeed::new(42, 2)).increments
        );
    }

    #[test]
    fn increments_match_moment_contract() {
        let dt = 0.01;
        let n = 1_000_000;
        let g = TimeGrid::from_steps(0.0, dt, n).unwrap();
        let w = wiener_path(&g, 7);
        for pick in [|d: &(f64, f64)| d.0, |d: &(f64, f64)| d.1] {
            let xs: Vec<f64> = w.increments.iter().map(pick).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            assert!((var - dt).abs() < 0.01 * dt, "variance {var}");
            assert!(mean.abs() < 3.0 * (dt / n as f64).sqrt(), "mean {mean}");
        }
        // The two channels are uncorrelated.
        let cov = w.increments.iter().map(|d| d.0 * d.1).sum::<f64>() / n as f64;
        assert!(cov.abs() < 4.0 * dt / (n as f64).sqrt());
    }

    #[test]
    fn coarsening_preserves_the_path() {
        let g = TimeGrid::from_steps(0.0, 0.01, 64).unwrap();
        let w = wiener_path(&g, 3);
        let c = w.coarsen(8);
        assert_eq!(c.len(), 8);
        let total = |w: &WienerPath| w.increments.iter().map(|d| d.0).sum::<f64>();
        assert!((total(&w) - total(&c)).abs() < 1e-12);
        assert_eq!(w.coarsen(1), w);
    }
}
