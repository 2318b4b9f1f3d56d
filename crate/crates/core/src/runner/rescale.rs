//! Rescaling a shrinking trajectory about its final point,
//!
//! ```text
//! γ̂(τ) = (4T)^{−1/4} e^{τ} (γ(T − T e^{−4τ}) − 𝒪) = (4(T − t))^{−1/4} (γ(t) − 𝒪).
//! ```
//!
//! `T` is estimated by a least-squares line through `L⁴` over the tail of the
//! trajectory and `𝒪` by the area centroid of the last frame. Both are
//! estimators, good to the resolution of the recorded tail.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::lemniscate;
use crate::error::{ChenError, Result};
use crate::geometry::{hausdorff_distance, CurveTopology, DiscreteCurve};
use crate::io::{load_curve, save_curve};
use crate::runner::export::{frame_name, read_summary, read_trajectory, TrajectoryRow, TRAJECTORY_FILE};

/// Fraction of the recorded states used for the `L⁴` fit.
pub const TAIL_FRACTION: f64 = 0.25;
const MIN_TAIL: usize = 3;
const LEMNISCATE_SAMPLES: usize = 2048;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaledFrame {
    pub step: usize,
    pub t: f64,
    /// `τ = −¼ ln(1 − t/T)`.
    pub tau: f64,
    pub length: f64,
    /// `‖k − k̄‖` in `L²(ds)` of the rescaled curve.
    pub oscillation: f64,
    pub iso_ratio: Option<f64>,
    /// Hausdorff distance to the self-similar lemniscate `33^{1/4} β`,
    /// reported for winding 0.
    pub lemniscate_distance: Option<f64>,
    #[serde(skip)]
    pub curve: Option<DiscreteCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RescaleResult {
    pub extinction_time: f64,
    pub final_point: [f64; 2],
    pub omega: i64,
    /// Slope of the fitted `L⁴(t)` line.
    pub l4_slope: f64,
    pub frames: Vec<RescaledFrame>,
}

/// `(T̂, slope)` from a least-squares fit of `L⁴` against `t` over the tail.
pub fn extinction_time(rows: &[TrajectoryRow]) -> Result<(f64, f64)> {
    if rows.iter().any(|r| r.omega.is_none()) {
        return Err(ChenError::NotApplicable(
            "trajectory is not of a closed planar curve".into(),
        ));
    }
    let take = ((rows.len() as f64 * TAIL_FRACTION).ceil() as usize).max(MIN_TAIL);
    if rows.len() < take {
        return Err(ChenError::NotApplicable(format!(
            "need at least {MIN_TAIL} recorded states, got {}",
            rows.len()
        )));
    }
    let tail = &rows[rows.len() - take..];
    let m = tail.len() as f64;
    let mt = tail.iter().map(|r| r.t).sum::<f64>() / m;
    let my = tail.iter().map(|r| r.length.powi(4)).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for r in tail {
        sxy += (r.t - mt) * (r.length.powi(4) - my);
        sxx += (r.t - mt).powi(2);
    }
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(ChenError::NotApplicable(format!(
            "trajectory is not shrinking (L⁴ slope {slope:e} over the tail)"
        )));
    }
    let t_hat = mt - my / slope;
    let last = rows.last().expect("tail is nonempty").t;
    if !(t_hat > last) {
        return Err(ChenError::NotApplicable(format!(
            "extrapolated extinction time {t_hat:e} precedes the last state at {last:e}"
        )));
    }
    Ok((t_hat, slope))
}

/// Curvature oscillation `‖k − k̄‖_{L²(ds)}`.
pub fn curvature_oscillation(curve: &DiscreteCurve) -> Result<f64> {
    let k = curve.signed_curvature()?.k;
    let (_, w) = curve.edge_and_vertex_lengths();
    let total: f64 = w.iter().sum();
    let mean = k.iter().zip(&w).map(|(k, w)| k * w).sum::<f64>() / total;
    Ok(k.iter().zip(&w).map(|(k, w)| (k - mean).powi(2) * w).sum::<f64>().sqrt())
}

fn self_similar_lemniscate() -> Vec<f64> {
    let scale = 33f64.powf(0.25);
    (0..LEMNISCATE_SAMPLES)
        .flat_map(|i| {
            let p = lemniscate(2.0 * std::f64::consts::PI * i as f64 / LEMNISCATE_SAMPLES as f64).position;
            [scale * p[0], scale * p[1]]
        })
        .collect()
}

/// Rescales `frames` (pairs of trajectory row and curve) about the final
/// point of the last frame.
pub fn rescale(rows: &[TrajectoryRow], frames: &[(usize, DiscreteCurve)]) -> Result<RescaleResult> {
    let (t_hat, slope) = extinction_time(rows)?;
    let (_, last) = frames
        .last()
        .ok_or_else(|| ChenError::NotApplicable("trajectory has no frames".into()))?;
    if !matches!(last.topology(), CurveTopology::Closed) || !last.is_planar() {
        return Err(ChenError::NotApplicable("final point needs a closed planar curve".into()));
    }
    let centre = last.area_centroid()?;
    let omega = rows.last().and_then(|r| r.omega).unwrap_or(0);
    let reference = (omega == 0).then(self_similar_lemniscate);

    let mut out = Vec::with_capacity(frames.len());
    for (step, curve) in frames {
        let row = rows
            .iter()
            .find(|r| r.step == *step)
            .ok_or_else(|| ChenError::InvalidConfig(format!("frame {step} has no trajectory row")))?;
        if row.t >= t_hat {
            continue;
        }
        let factor = (4.0 * (t_hat - row.t)).powf(-0.25);
        let shifted: Vec<f64> = curve
            .coords()
            .chunks_exact(2)
            .flat_map(|p| [factor * (p[0] - centre[0]), factor * (p[1] - centre[1])])
            .collect();
        let scaled = curve.with_points(shifted)?;
        let report = scaled.report()?;
        out.push(RescaledFrame {
            step: *step,
            t: row.t,
            tau: -0.25 * (-row.t / t_hat).ln_1p(),
            length: report.length,
            oscillation: curvature_oscillation(&scaled)?,
            iso_ratio: report.iso_ratio,
            lemniscate_distance: reference.as_ref().map(|r| hausdorff_distance(scaled.coords(), r)),
            curve: Some(scaled),
        });
    }
    Ok(RescaleResult {
        extinction_time: t_hat,
        final_point: centre,
        omega,
        l4_slope: slope,
        frames: out,
    })
}

fn step_of_frame(name: &str) -> Option<usize> {
    name.strip_prefix("frame_")?.strip_suffix(".csv")?.parse().ok()
}

/// Rescales a run directory written by [`crate::runner::run_config`].
pub fn rescale_dir(dir: &Path) -> Result<RescaleResult> {
    let summary = read_summary(dir)?;
    if summary.topology != "closed" {
        return Err(ChenError::NotApplicable(format!(
            "{} trajectory has no final point",
            summary.topology
        )));
    }
    let rows = read_trajectory(dir.join(TRAJECTORY_FILE))?;
    let mut frames = Vec::with_capacity(summary.frames.len());
    for name in &summary.frames {
        let step = step_of_frame(name)
            .ok_or_else(|| ChenError::InvalidConfig(format!("unexpected frame name '{name}'")))?;
        frames.push((step, load_curve(dir.join(name))?));
    }
    if frames.is_empty() {
        return Err(ChenError::NotApplicable(
            "run has no frames; set emit_frames to rescale".into(),
        ));
    }
    rescale(&rows, &frames)
}

/// Writes `rescaled/` with one curve per frame, `rescale.csv` with the
/// per-frame series and `rescale.json`.
pub fn write_rescaled(dir: &Path, result: &RescaleResult) -> Result<()> {
    let out = dir.join("rescaled");
    fs::create_dir_all(&out)?;
    let mut w = csv::Writer::from_path(out.join("rescale.csv")).map_err(|e| ChenError::Io(e.into()))?;
    w.write_record(["step", "t", "tau", "L", "oscillation", "iso_ratio", "lemniscate_distance"])
        .map_err(|e| ChenError::Io(e.into()))?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |v| v.to_string());
    for f in &result.frames {
        w.write_record([
            f.step.to_string(),
            f.t.to_string(),
            f.tau.to_string(),
            f.length.to_string(),
            f.oscillation.to_string(),
            opt(f.iso_ratio),
            opt(f.lemniscate_distance),
        ])
        .map_err(|e| ChenError::Io(e.into()))?;
        if let Some(c) = &f.curve {
            save_curve(out.join(frame_name(f.step)), c)?;
        }
    }
    w.flush()?;
    fs::write(out.join("rescale.json"), serde_json::to_string_pretty(result)? + "\n")?;
    Ok(())
}
