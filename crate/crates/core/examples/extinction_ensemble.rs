// Ensemble statistics below the extinction threshold: extinction
// probability, growth rates of `I + B`, and the stationary distribution of
// the susceptible cells.
//
// ```text
// cargo run --release --example extinction_ensemble
// ```

use viral_sde::config::preset;
use viral_sde::sim::{Ensemble, EnsembleConfig, Retention, run_ensemble};

pub fn run_example(n_paths: usize) -> viral_sde::Result<Ensemble> {
    let cfg = preset("example1")?;
    let ens_cfg = EnsembleConfig {
        retention: Retention::Thinned(10),
        ..EnsembleConfig::with_paths(n_paths, cfg.ensemble.base_seed)
    };
    let e = run_ensemble(
        &cfg.initial,
        &cfg.time_grid()?,
        &cfg.params,
        &cfg.noise,
        &ens_cfg,
        None,
    )?;
    let st = &e.stats;
    println!("paths: {}  extinct: {}", st.n_paths, st.extinct_paths);
    if let Some(l) = &st.lyapunov {
        println!("growth rate of I + B: mean {:?}  max {:?}", l.mean, l.max);
    }
    if let Some(h) = &st.s_histogram {
        println!(
            "S over the second half: mean {:.2}  sd {:.2}  ({} samples)",
            h.mean, h.std_dev, h.n_samples
        );
        let peak = h.counts.iter().copied().max().unwrap_or(1).max(1);
        for (k, &c) in h.counts.iter().enumerate().filter(|(_, c)| **c > 0) {
            let bar = "#".repeat((40 * c / peak) as usize);
            println!("{:>7.2} {bar}", 0.5 * (h.edges[k] + h.edges[k + 1]));
        }
    }
    for cp in st.checkpoints.iter().step_by(25) {
        println!(
            "t = {:>5.1}  mean ({:.3}, {:.3}, {:.3})",
            cp.t, cp.mean.s, cp.mean.i, cp.mean.b
        );
    }
    Ok(e)
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    run_example(500).map(|_| ())
}
