//! Trajectory CSV, frame files and the run summary.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ChenError, Result};
use crate::geometry::GeometricReport;
use crate::io::save_curve;
use crate::stepper::{Record, RunOutput, StopReason};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Column order of the trajectory file.
pub const TRAJECTORY_COLUMNS: [&str; 11] = [
    "step", "sigma", "t", "L", "A", "omega", "Q", "R", "iso_ratio", "max_k", "equidist",
];

/// One trajectory row. Quantities that do not apply (area of a cocompact
/// curve, anything planar for space curves) are left empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub sigma: f64,
    pub t: f64,
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "A")]
    pub area: Option<f64>,
    pub omega: Option<i64>,
    #[serde(rename = "Q")]
    pub q: Option<f64>,
    #[serde(rename = "R")]
    pub r: Option<f64>,
    pub iso_ratio: Option<f64>,
    pub max_k: f64,
    pub equidist: f64,
}

impl TrajectoryRow {
    pub fn new(step: usize, sigma: f64, t: f64, report: &GeometricReport) -> Self {
        TrajectoryRow {
            step,
            sigma,
            t,
            length: report.length,
            area: report.area,
            omega: report.winding,
            q: report.q,
            r: report.r,
            iso_ratio: report.iso_ratio,
            max_k: report.max_curvature,
            equidist: report.equidist_ratio,
        }
    }
}

impl From<&Record> for TrajectoryRow {
    fn from(r: &Record) -> Self {
        TrajectoryRow::new(r.step, r.sigma, r.t, &r.report)
    }
}

pub fn frame_name(step: usize) -> String {
    format!("frame_{step:06}.csv")
}

fn csv_err(e: csv::Error) -> ChenError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => ChenError::Io(e),
        csv::ErrorKind::Deserialize { pos, err } => ChenError::Parse {
            line: pos.map_or(0, |p| p.line() as usize),
            message: err.to_string(),
        },
        other => ChenError::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_trajectory(path: impl AsRef<Path>, rows: &[TrajectoryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if rows.is_empty() {
        w.write_record(TRAJECTORY_COLUMNS).map_err(csv_err)?;
    }
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if header != TRAJECTORY_COLUMNS {
        return Err(ChenError::Parse {
            line: 1,
            message: format!("unexpected trajectory columns {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub shape: String,
    pub n: usize,
    pub topology: String,
    pub stop: StopReason,
    pub failure: Option<String>,
    pub steps: usize,
    pub sigma: f64,
    pub t: f64,
    pub delta_sigma: f64,
    pub initial: GeometricReport,
    #[serde(rename = "final")]
    pub final_report: GeometricReport,
    pub max_residual: f64,
    pub max_aux_drift: f64,
    pub equidist_warnings: usize,
    pub max_equidist: f64,
    pub frames: Vec<String>,
    pub seed: u64,
}

/// Writes the trajectory, any frames kept in the records, and returns the
/// frame file names.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let rows: Vec<TrajectoryRow> = out.records.iter().map(TrajectoryRow::from).collect();
    write_trajectory(dir.join(TRAJECTORY_FILE), &rows)?;
    let mut frames = Vec::new();
    for r in &out.records {
        if let Some(curve) = &r.curve {
            let name = frame_name(r.step);
            save_curve(dir.join(&name), curve)?;
            frames.push(name);
        }
    }
    Ok(frames)
}

pub fn write_summary(dir: &Path, summary: &RunSummary) -> Result<PathBuf> {
    let path = dir.join(SUMMARY_FILE);
    fs::write(&path, serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(path)
}

pub fn read_summary(dir: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(SUMMARY_FILE))?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(step: usize, area: Option<f64>) -> TrajectoryRow {
        TrajectoryRow {
            step,
            sigma: 0.1 * step as f64,
            t: 0.01 * step as f64,
            length: 6.25,
            area,
            omega: area.map(|_| 1),
            q: Some(1558.5),
            r: Some(39.4),
            iso_ratio: area.map(|_| 1e-4),
            max_k: 1.0,
            equidist: 1.0,
        }
    }

    #[test]
    fn header_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(TRAJECTORY_FILE);
        write_trajectory(&path, &[row(0, Some(2.5))]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "step,sigma,t,L,A,omega,Q,R,iso_ratio,max_k,equidist"
        );
        write_trajectory(&path, &[]).unwrap();
        assert_eq!(read_trajectory(&path).unwrap(), vec![]);
    }

    #[test]
    fn rows_round_trip_with_blanks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(TRAJECTORY_FILE);
        let rows = vec![row(0, Some(2.5)), row(5, None)];
        write_trajectory(&path, &rows).unwrap();
        assert!(fs::read_to_string(&path).unwrap().contains("0.5,0.05,6.25,,,"));
        assert_eq!(read_trajectory(&path).unwrap(), rows);
    }

    #[test]
    fn rejects_foreign_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(matches!(read_trajectory(&path), Err(ChenError::Parse { line: 1, .. })));
    }
}
