// One seeded Euler–Maruyama path written as CSV to stdout.
//
// The same `(base, stream)` seed always gives the same path, whatever else
// runs in the process.
//
// ```text
// cargo run --example single_path > path.csv
// ```

use viral_sde::io::write_trajectory;
use viral_sde::sim::{PathSeed, TimeGrid, Trajectory, simulate_path};
use viral_sde::{ModelParams, NoiseParams, SimState};

pub fn run_example() -> viral_sde::Result<Trajectory> {
    let grid = TimeGrid::new(0.0, 30.0, 0.01)?;
    let traj = simulate_path(
        &SimState::new(100.0, 100.0, 100.0),
        &grid,
        &ModelParams::persistent(),
        &NoiseParams::new(0.1, 0.1),
        PathSeed::new(2024, 0),
        None,
    )?;
    let again = simulate_path(
        traj.initial(),
        &grid,
        &ModelParams::persistent(),
        &NoiseParams::new(0.1, 0.1),
        PathSeed::new(2024, 0),
        None,
    )?;
    assert_eq!(traj.states, again.states);
    Ok(traj)
}

#[allow(dead_code)]
fn main() -> viral_sde::Result<()> {
    let traj = run_example()?;
    write_trajectory(std::io::stdout().lock(), &traj)?;
    eprintln!("clamp events: {}", traj.clamp_events);
    Ok(())
}
