// Optimal immunomodulator and antiviral dosing, compared with no treatment
// on one shared set of noise paths.
//
// ```text
// cargo run --release --example drug_scenarios
// ```

use viral_sde::config::preset;
use viral_sde::control::{Scenario, ScenarioComparison, scenario_compare};

pub fn run_example(n_paths: usize) -> viral_sde::Result<ScenarioComparison> {
    let cfg = preset("fig66a")?;
    let settings = cfg.control.clone().expect("control preset");
    for w in settings.weights.warnings(&cfg.params) {
        eprintln!("warning: {w}");
    }
    let mut sweep = settings.sweep.clone();
    sweep.n_paths = n_paths;
    let problem = cfg.control_problem()?.expect("control preset");
    let cmp = scenario_compare(&problem, &Scenario::ALL, &sweep)?;

    for r in &cmp.results {
        let peak = r.sweep.control.values().iter().fold([0.0f64; 3], |m, u| {
            let a = u.to_array();
            [m[0].max(a[0]), m[1].max(a[1]), m[2].max(a[2])]
        });
        println!(
            "{:<10} J = {:8.2} ± {:5.2}  iterations {:>3}  peak controls {:.3?}",
            r.scenario.label(),
            r.sweep.cost.mean,
            r.sweep.cost.std_error,
            r.sweep.iterations,
            peak
        );
    }
    if let Some(d) = cmp.paired_cost_difference(Scenario::Combined, Scenario::None) {
        println!("J(combined) - J(none) = {:.2} ± {:.2}", d.mean, d.std_error);
    }
    println!("   t   B none  B immuno  B antiviral  B combined");
    let step = cmp.grid.n_steps / 10;
    for k in (0..=cmp.grid.n_steps).step_by(step.max(1)) {
        let b: Vec<String> = cmp
            .results
            .iter()
            .map(|r| format!("{:9.4}", r.sweep.state_mean[k].b))
            .collect();
        println!("{:4.1} {}", cmp.grid.time(k), b.join(" "));
    }
    Ok(cmp)
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    run_example(100).map(|_| ())
}
