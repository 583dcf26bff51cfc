// Raise both noise intensities on the persistent parameter set and watch
// the extinction probability.
//
// ```text
// cargo run --release --example noise_sweep
// ```

use viral_sde::commands::{SweepTable, sweep};
use viral_sde::config::{Axis, Metric, Spacing, SweepSpec, preset};

pub fn run_example(n_paths: usize, count: usize) -> viral_sde::Result<SweepTable> {
    let mut cfg = preset("example2")?;
    cfg.ensemble.n_paths = n_paths;
    let spec = SweepSpec {
        axes: vec![Axis {
            name: "sigma".into(),
            min: 0.05,
            max: 2.0,
            count,
            spacing: Spacing::Linear,
        }],
        metrics: vec![
            Metric::ExtinctionProbability,
            Metric::TerminalMeanB,
            Metric::ConditionA,
            Metric::NegativeDefinite,
        ],
    };
    let table = sweep(&cfg, &spec)?;
    println!("sigma   P(extinct)  mean B(T)  A  negdef");
    for row in &table.rows {
        let m = &row.metrics;
        println!(
            "{:5.3}   {:9.3}  {:9.4}  {}  {}",
            row.coordinates[0], m[0], m[1], m[2], m[3]
        );
    }
    match table.transition_bracket {
        Some([lo, hi]) => println!("extinction becomes likely between sigma = {lo:.3} and {hi:.3}"),
        None => println!("no crossing of one half in this range"),
    }
    Ok(table)
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    run_example(200, 14).map(|_| ())
}
