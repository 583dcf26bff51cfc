// Strong convergence order of Euler–Maruyama, measured against a fine
// reference driven by the same Brownian paths.
//
// ```text
// cargo run --release --example strong_convergence
// ```

use viral_sde::sim::{ConvergenceSetup, ConvergenceStudy, TimeGrid, self_convergence};
use viral_sde::{ModelParams, NoiseParams, SimState};

pub fn run_example(n_paths: usize) -> viral_sde::Result<[ConvergenceStudy; 2]> {
    let setup = ConvergenceSetup::halvings(TimeGrid::new(0.0, 10.0, 0.01)?, 5, n_paths, 8);
    let x0 = SimState::new(100.0, 100.0, 100.0);
    let params = ModelParams::reference();
    let noisy = self_convergence(&x0, &params, &NoiseParams::new(0.1, 0.1), &setup)?;
    let exact = self_convergence(&x0, &params, &NoiseParams::ZERO, &setup)?;
    for (label, s) in [("sigma = 0.1", &noisy), ("sigma = 0", &exact)] {
        println!("{label}: reference dt {:.2e}", s.reference_dt);
        for l in &s.levels {
            println!(
                "  dt {:.2e}  error {:.3e} ± {:.1e}",
                l.dt, l.strong_error, l.std_error
            );
        }
        println!(
            "  observed order {:.3}",
            s.observed_order.unwrap_or(f64::NAN)
        );
    }
    Ok([noisy, exact])
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    run_example(200).map(|_| ())
}
