// Load a TOML run description, override it, run it and write the artifacts.
//
// ```text
// cargo run --example config_files -- out/config_demo
// ```

use std::path::PathBuf;

use viral_sde::commands::{Outcome, cmd_analyze, cmd_simulate};
use viral_sde::config::{Overrides, parse_config};

const DOCUMENT: &str = r#"
name = "short-persistent"

[params]
omega = 10.0
beta = 0.05
mu = 0.1
mu1 = 0.1
alpha = 0.24
p = 0.795
q = 0.28

[noise]
sigma1 = 0.2
sigma2 = 0.2

[grid]
t0 = 0.0
t_end = 40.0
dt = 0.01

[initial]
s = 100.0
i = 100.0
b = 100.0

[ensemble]
n_paths = 200
base_seed = 7
retention = { thinned = 50 }
checkpoints = 8
"#;

pub fn run_example(out: PathBuf) -> viral_sde::Result<Vec<Outcome>> {
    let mut cfg = parse_config(DOCUMENT)?;
    cfg.apply(&Overrides {
        output_dir: Some(out),
        ..Overrides::default()
    });
    let outcomes = vec![cmd_analyze(&cfg)?, cmd_simulate(&cfg)?];
    for o in &outcomes {
        o.summary.iter().for_each(|l| println!("{l}"));
        o.warnings.iter().for_each(|w| eprintln!("warning: {w}"));
        o.files
            .iter()
            .for_each(|f| println!("  wrote {}", f.display()));
    }
    // A typo in a rate name is an error, never silently ignored.
    let typo = DOCUMENT.replace("mu1 = 0.1", "mu_1 = 0.1");
    if let Err(e) = parse_config(&typo) {
        println!("rejected: {e}");
    }
    Ok(outcomes)
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out/config_demo"));
    run_example(out).map(|_| ())
}
