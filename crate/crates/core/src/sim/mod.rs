//! Euler–Maruyama simulation, ensembles and Monte-Carlo statistics.

mod convergence;
mod em;
mod ensemble;
mod grid;
pub mod stats;
mod wiener;

pub use convergence::{
    ConvergenceLevel, ConvergenceSetup, ConvergenceStudy, REFERENCE_FACTOR, self_convergence,
};
pub use em::{Step, Trajectory, em_step, integrate, simulate_path};
pub use ensemble::{
    CLAMP_WARNING_FRACTION, Checkpoint, Ensemble, EnsembleConfig, EnsembleStats, HistogramSpec,
    LyapunovEstimate, LyapunovSummary, QuantileRow, Retention, lyapunov_estimate, run_ensemble,
    s_histogram_with, stationary_s_histogram,
};
pub use grid::TimeGrid;
pub use wiener::{PathSeed, WienerPath, wiener_path};
