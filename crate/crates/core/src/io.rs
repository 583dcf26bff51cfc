//! CSV and JSON writers.
//!
//! Floats are written with Rust's shortest round-trip formatting, so parsing a
//! CSV cell gives back the exact `f64` that was stored.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::control::{ControlField, ScenarioComparison};
use crate::error::{Error, Result};
use crate::model::SimState;
use crate::sim::{TimeGrid, Trajectory};

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn finish<W: Write>(w: csv::Writer<W>, path: &Path) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::io(path, e.into_error()))?
        .flush()
        .map_err(|e| Error::io(path, e))
}

fn cells(values: impl IntoIterator<Item = f64>) -> Vec<String> {
    values.into_iter().map(|v| v.to_string()).collect()
}

/// Write a trajectory as `t,S,I,B`, plus `u11,u12,u2` when it is controlled.
pub fn write_trajectory<W: Write>(out: W, trajectory: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let controlled = trajectory.controls.as_ref();
    let mut header = vec!["t", "S", "I", "B"];
    if controlled.is_some() {
        header.extend(["u11", "u12", "u2"]);
    }
    w.write_record(&header)?;
    for (k, (t, x)) in trajectory.times().zip(&trajectory.states).enumerate() {
        let mut row = cells([t, x.s, x.i, x.b]);
        if let Some(u) = controlled {
            row.extend(cells(u[k].to_array()));
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> Result<()> {
    let mut f = create(path)?;
    write_trajectory(&mut f, trajectory)?;
    f.flush().map_err(|e| Error::io(path, e))
}

/// Ensemble mean and variance on the full grid.
pub fn write_moments_csv(
    path: &Path,
    grid: &TimeGrid,
    mean: &[SimState],
    variance: &[SimState],
) -> Result<()> {
    if mean.len() != grid.len() || variance.len() != grid.len() {
        return Err(Error::LengthMismatch {
            what: "moment series",
            got: mean.len().min(variance.len()),
            expected: grid.len(),
        });
    }
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "S", "I", "B", "var_S", "var_I", "var_B"])?;
    for ((t, m), v) in grid.times().zip(mean).zip(variance) {
        w.write_record(cells([t, m.s, m.i, m.b, v.s, v.i, v.b]))?;
    }
    finish(w, path)
}

/// `t,u11,u12,u2`.
pub fn write_control_csv(path: &Path, field: &ControlField) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["t", "u11", "u12", "u2"])?;
    for (t, u) in field.grid().times().zip(field.values()) {
        let [a, b, c] = u.to_array();
        w.write_record(cells([t, a, b, c]))?;
    }
    finish(w, path)
}

/// Mean viral load and infected cells per scenario:
/// `t,B_none,B_immuno,...,I_none,I_immuno,...` in the order the scenarios
/// were run.
pub fn write_scenario_csv(path: &Path, comparison: &ScenarioComparison) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    let results = &comparison.results;
    let mut header = vec!["t".to_string()];
    for prefix in ["B", "I"] {
        header.extend(
            results
                .iter()
                .map(|r| format!("{prefix}_{}", r.scenario.label())),
        );
    }
    w.write_record(&header)?;
    for (k, t) in comparison.grid.times().enumerate() {
        let b = results.iter().map(|r| r.sweep.state_mean[k].b);
        let i = results.iter().map(|r| r.sweep.state_mean[k].i);
        w.write_record(cells(std::iter::once(t).chain(b).chain(i)))?;
    }
    finish(w, path)
}

/// A table of preformatted cells.
pub fn write_table_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    finish(w, path)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn write_json(path: &Path, value: &(impl Serialize + ?Sized)) -> Result<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelParams, NoiseParams};
    use crate::sim::{PathSeed, simulate_path};

    fn trajectory() -> Trajectory {
        let grid = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        simulate_path(
            &SimState::new(100.0, 100.0, 100.0),
            &grid,
            &ModelParams::reference(),
            &NoiseParams::new(0.1, 0.1),
            PathSeed::from(3),
            None,
        )
        .unwrap()
    }

    #[test]
    fn trajectory_csv_round_trips_exactly() {
        let traj = trajectory();
        let mut buf = Vec::new();
        write_trajectory(&mut buf, &traj).unwrap();
        let mut r = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(r.headers().unwrap(), vec!["t", "S", "I", "B"]);
        let rows: Vec<Vec<f64>> = r
            .records()
            .map(|rec| rec.unwrap().iter().map(|c| c.parse().unwrap()).collect())
            .collect();
        assert_eq!(rows.len(), traj.states.len());
        for (row, x) in rows.iter().zip(&traj.states) {
            assert_eq!(&row[1..], &[x.s, x.i, x.b]);
        }
    }

    #[test]
    fn files_land_in_new_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/traj.csv");
        write_trajectory_csv(&path, &trajectory()).unwrap();
        assert!(path.exists());
        let json = dir.path().join("c/x.json");
        write_json(&json, &[1.0, 2.0]).unwrap();
        let back: Vec<f64> = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(back, vec![1.0, 2.0]);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let err = write_json(&blocker.join("inner.json"), &1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
