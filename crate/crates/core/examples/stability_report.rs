// Closed-form extinction criteria for every uncontrolled preset.
//
// ```text
// cargo run --example stability_report
// ```

use viral_sde::commands::{Analysis, analyze};
use viral_sde::config::preset;

pub fn run_example() -> viral_sde::Result<Vec<Analysis>> {
    let mut out = Vec::new();
    for name in ["example1", "example2", "example3", "example4_i"] {
        let a = analyze(&preset(name)?)?;
        let s = &a.stability;
        println!(
            "{name:<11} R0 = {:>6.3}  A: {:<5}  B: {:<5}  eigenvalues ({:>8.4}, {:>8.4})  negative definite: {}",
            a.deterministic.r0,
            s.condition_a.holds,
            s.condition_b.holds,
            s.eigenvalues.min,
            s.eigenvalues.max,
            s.negative_definite,
        );
        if let Some(e1) = a.deterministic.e1 {
            println!(
                "            infected equilibrium ({:.2}, {:.2}, {:.2})",
                e1.s, e1.i, e1.b
            );
        }
        if s.criteria_disagree {
            println!("            printed conditions and the eigenvalue test disagree");
        }
        out.push(a);
    }
    Ok(out)
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    run_example().map(|_| ())
}
