use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use chenflow_core::io::save_curve;
use chenflow_core::runner::export::{
    frame_name, write_summary, write_trajectory, RunSummary, TrajectoryRow, TRAJECTORY_FILE,
};
use chenflow_core::runner::rescale::{rescale_dir, write_rescaled};
use chenflow_core::runner::{run_config_in, scenario, RunConfig};
use chenflow_core::{ChenError, CurveTopology, DiscreteCurve, StopReason};

/// Writes the exact shrinking circle `r(t)⁴ = 1 − 4t`, centred at `c`,
/// as a run directory.
fn write_exact_circle(dir: &Path, n: usize, c: [f64; 2]) {
    let times: Vec<f64> = (0..=40).map(|k| 0.24 * k as f64 / 40.0).collect();
    let mut rows = Vec::new();
    let mut frames = Vec::new();
    for (step, &t) in times.iter().enumerate() {
        let r = (1.0 - 4.0 * t).powf(0.25);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let th = 2.0 * PI * i as f64 / n as f64;
                [c[0] + r * th.cos(), c[1] + r * th.sin()]
            })
            .collect();
        let curve = DiscreteCurve::from_planar(&pts, CurveTopology::Closed).unwrap();
        let report = curve.report().unwrap();
        rows.push(TrajectoryRow::new(step, t, t, &report));
        save_curve(dir.join(frame_name(step)), &curve).unwrap();
        frames.push(frame_name(step));
    }
    write_trajectory(dir.join(TRAJECTORY_FILE), &rows).unwrap();
    let first = rows[0].clone();
    let report = DiscreteCurve::from_planar(
        &[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [0.5, -0.9]],
        CurveTopology::Closed,
    )
    .unwrap()
    .report()
    .unwrap();
    let summary = RunSummary {
        shape: "circle".into(),
        n,
        topology: "closed".into(),
        stop: StopReason::TimeFinal,
        failure: None,
        steps: rows.len() - 1,
        sigma: first.sigma,
        t: times[times.len() - 1],
        delta_sigma: 0.0,
        initial: report,
        final_report: report,
        max_residual: 0.0,
        max_aux_drift: 0.0,
        equidist_warnings: 0,
        max_equidist: 1.0,
        frames,
        seed: 0,
    };
    write_summary(dir, &summary).unwrap();
}

#[test]
fn exact_circle_rescales_to_the_unit_circle() {
    let dir = tempfile::tempdir().unwrap();
    let centre = [0.3, -0.2];
    write_exact_circle(dir.path(), 256, centre);
    let result = rescale_dir(dir.path()).unwrap();
    assert!((result.extinction_time - 0.25).abs() < 1e-3, "{}", result.extinction_time);
    assert!((result.final_point[0] - centre[0]).abs() < 1e-12);
    assert!((result.final_point[1] - centre[1]).abs() < 1e-12);
    assert_eq!(result.omega, 1);
    for f in &result.frames {
        let c = f.curve.as_ref().unwrap();
        let worst = (0..c.len())
            .map(|i| {
                let p = c.point(i);
                (p[0].hypot(p[1]) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-3, "frame {}: {worst}", f.step);
    }
    write_rescaled(dir.path(), &result).unwrap();
    let csv = fs::read_to_string(dir.path().join("rescaled/rescale.csv")).unwrap();
    assert!(csv.starts_with("step,t,tau,L,oscillation,iso_ratio,lemniscate_distance\n"));
    assert!(dir.path().join("rescaled").join(frame_name(0)).exists());
}

#[test]
fn ellipse_isoperimetric_ratio_decays_after_rescaling() {
    let dir = tempfile::tempdir().unwrap();
    let config = scenario("ellipse").unwrap();
    let art = run_config_in(&config, dir.path()).unwrap();
    assert_eq!(art.summary.stop, StopReason::LengthFloor);
    let result = rescale_dir(dir.path()).unwrap();
    let iso: Vec<f64> = result.frames.iter().map(|f| f.iso_ratio.unwrap()).collect();
    // A regular N-gon has 1 − 4πA/L² = 1 − (π/N)/tan(π/N) > 0, which is
    // where the discrete ratio settles.
    let n = art.summary.n as f64;
    let floor = 1.0 - (PI / n) / (PI / n).tan();
    let tail = &iso[iso.len() / 2..];
    assert!(tail.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{tail:?}");
    assert!(tail[tail.len() - 1] - floor < 1e-3 * (iso[0] - floor));
    // The rescaled length stays near that of the unit circle.
    let last = result.frames.last().unwrap();
    assert!((last.length / (2.0 * PI) - 1.0).abs() < 0.05, "{}", last.length);
}

#[test]
fn flat_line_is_not_rescalable() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_json(
        r#"{"curve_spec": {"shape": {"kind": "cocompact_graph", "amplitude": 0.0}, "n": 32},
            "step": {"max_steps": 5}, "output_dir": "unused", "emit_frames": true}"#,
    )
    .unwrap();
    run_config_in(&config, dir.path()).unwrap();
    assert!(matches!(rescale_dir(dir.path()), Err(ChenError::NotApplicable(_))));
}

#[test]
fn growing_trajectory_is_not_rescalable() {
    let dir = tempfile::tempdir().unwrap();
    write_exact_circle(dir.path(), 32, [0.0, 0.0]);
    let path = dir.path().join(TRAJECTORY_FILE);
    let mut rows = chenflow_core::runner::export::read_trajectory(&path).unwrap();
    rows.reverse();
    for (i, r) in rows.iter_mut().enumerate() {
        r.t = i as f64;
    }
    write_trajectory(&path, &rows).unwrap();
    assert!(matches!(rescale_dir(dir.path()), Err(ChenError::NotApplicable(_))));
}

#[test]
fn reruns_are_bit_identical() {
    let config = RunConfig::from_json(
        r#"{"curve_spec": {"shape": {"kind": "star"}, "n": 64, "resample_to_arclength": true},
            "step": {"max_steps": 30, "record_every": 5}, "output_dir": "unused", "emit_frames": true}"#,
    )
    .unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_config_in(&config, a.path()).unwrap();
    run_config_in(&config, b.path()).unwrap();
    for name in [TRAJECTORY_FILE.to_string(), frame_name(30), "summary.json".into()] {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn trajectory_matches_golden_header() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig::from_json(
        r#"{"curve_spec": {"shape": {"kind": "circle"}, "n": 16},
            "step": {"max_steps": 2}, "output_dir": "unused"}"#,
    )
    .unwrap();
    let art = run_config_in(&config, dir.path()).unwrap();
    let text = fs::read_to_string(dir.path().join(TRAJECTORY_FILE)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,sigma,t,L,A,omega,Q,R,iso_ratio,max_k,equidist"));
    assert_eq!(lines.count(), 3);
    assert!(art.summary.frames.is_empty());
}

#[test]
fn dumbbell_runs_into_a_stop_without_crashing() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = scenario("dumbbell").unwrap();
    config.emit_frames = false;
    config.step.max_steps = Some(600);
    let art = run_config_in(&config, dir.path()).unwrap();
    assert_ne!(art.summary.stop, StopReason::SolverFailure);
    assert!(art.summary.final_report.length < art.summary.initial.length);
}
