//! Time stepping. One step from `(w_j, t_j)`:
//!
//! 1. `A_j = A(w_j)`
//! 2. solve `(I − Δσ A_j) k₁ = w_j`
//! 3. `t_{j+1} = t_j + Δσ (b(w_j) + b(k₁)) / 2`
//! 4. `Ã = A(k₁)`
//! 5. solve `((Δσ/2)(A_j + Ã) − (1+i) I) k₂ = i w_j` over complex scalars
//! 6. `w_{j+1} = −2 Re k₂`
//!
//! For a scalar constant operator `λ` this is `w ↦ w / (1 − z + z²/2)`,
//! `z = Δσλ`. Cocompact curves carry an affine term; the state is extended
//! by a coordinate fixed at 1 and the affine term becomes an extra matrix
//! column, so both stages act on a homogeneous linear system.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::convtest_sigma_final;
use crate::error::{ChenError, Result};
use crate::flowmodel::{assemble_operator, ModelParams};
use crate::geometry::{DiscreteCurve, GeometricReport};
use crate::linsolve::{CyclicBlockBanded, Factorization, Scalar, SolverOptions};

/// Default `c` in `Δσ = c / N`, the convergence-test rule `4σ_f / 25`.
pub fn default_step_constant() -> f64 {
    4.0 * convtest_sigma_final() / 25.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub step: usize,
    pub sigma: f64,
    pub t: f64,
    pub curve: DiscreteCurve,
}

impl FlowState {
    pub fn initial(curve: DiscreteCurve) -> Self {
        FlowState {
            step: 0,
            sigma: 0.0,
            t: 0.0,
            curve,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepConfig {
    /// Fixed `Δσ`; when absent, `step_constant / N`.
    pub delta_sigma: Option<f64>,
    pub step_constant: f64,
    pub sigma_final: Option<f64>,
    /// Stop once physical time reaches this value.
    pub t_final: Option<f64>,
    pub max_steps: Option<usize>,
    /// Absolute length floor; default `1e−3 · L₀`.
    pub stop_min_length: Option<f64>,
    /// Absolute curvature ceiling; default `1e6 / L₀`.
    pub stop_max_curvature: Option<f64>,
    pub record_every: usize,
    /// Halt instead of warning when the equidistribution threshold is crossed.
    pub strict_equidist: bool,
    /// Keep a copy of the curve in every record.
    pub keep_curves: bool,
    /// Dense elimination below this system size.
    pub dense_below: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        StepConfig {
            delta_sigma: None,
            step_constant: default_step_constant(),
            sigma_final: None,
            t_final: None,
            max_steps: None,
            stop_min_length: None,
            stop_max_curvature: None,
            record_every: 1,
            strict_equidist: false,
            keep_curves: false,
            dense_below: SolverOptions::default().dense_below,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ChenError::InvalidConfig(msg));
        if let Some(ds) = self.delta_sigma {
            if !(ds > 0.0 && ds.is_finite()) {
                return bad(format!("delta_sigma must be positive, got {ds}"));
            }
        }
        if !(self.step_constant > 0.0 && self.step_constant.is_finite()) {
            return bad(format!("step_constant must be positive, got {}", self.step_constant));
        }
        if self.sigma_final.is_none() && self.t_final.is_none() && self.max_steps.is_none() {
            return bad("set at least one of sigma_final, t_final, max_steps".into());
        }
        for (name, v) in [
            ("sigma_final", self.sigma_final),
            ("t_final", self.t_final),
            ("stop_min_length", self.stop_min_length),
            ("stop_max_curvature", self.stop_max_curvature),
        ] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return bad(format!("{name} must be positive, got {v}"));
                }
            }
        }
        if self.record_every == 0 {
            return bad("record_every must be at least 1".into());
        }
        Ok(())
    }

    pub fn delta_sigma_for(&self, n: usize) -> f64 {
        self.delta_sigma
            .unwrap_or(self.step_constant / n as f64)
    }

    fn solver(&self) -> SolverOptions {
        SolverOptions {
            dense_below: self.dense_below,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SigmaFinal,
    TimeFinal,
    MaxSteps,
    LengthFloor,
    CurvatureCeiling,
    SolverFailure,
    EquidistBreach,
}

/// Result of one step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: FlowState,
    /// Largest relative residual of the two linear solves.
    pub residual: f64,
    /// `|μ − 1|` of the homogenising coordinate after both stages
    /// (cocompact curves only).
    pub aux_drift: Option<f64>,
}

/// Stage 2: `w_{j+1} = −2 Re k₂` for given `A_j` and `Ã`.
fn pade_update(
    a_j: &CyclicBlockBanded<f64>,
    a_tilde: &CyclicBlockBanded<f64>,
    w: &[f64],
    dsigma: f64,
    opts: SolverOptions,
) -> Result<(Vec<f64>, f64)> {
    let m = a_j
        .add(a_tilde)?
        .map(Complex64::from_real)
        .scale_shift(Complex64::from_real(0.5 * dsigma), Complex64::new(-1.0, -1.0));
    let rhs: Vec<Complex64> = w.iter().map(|&x| Complex64::new(0.0, x)).collect();
    let k2 = Factorization::new(&m, opts)?.solve(&rhs)?;
    Ok((k2.x.iter().map(|z| -2.0 * z.re).collect(), k2.residual_ratio))
}

/// Stage 1: `k₁ = (I − Δσ A_j)⁻¹ w`.
fn implicit_stage(
    a_j: &CyclicBlockBanded<f64>,
    w: &[f64],
    dsigma: f64,
    opts: SolverOptions,
) -> Result<(Vec<f64>, f64)> {
    let m = a_j.scale_shift(-dsigma, 1.0);
    let k1 = Factorization::new(&m, opts)?.solve(w)?;
    Ok((k1.x, k1.residual_ratio))
}

/// Advances by `dsigma`.
pub fn step(
    state: &FlowState,
    params: &ModelParams,
    dsigma: f64,
    opts: SolverOptions,
) -> Result<StepOutcome> {
    let curve = &state.curve;
    let nd = curve.coords().len();
    let cocompact = !curve.topology().is_closed();
    let mut w = curve.coords().to_vec();
    if cocompact {
        w.push(1.0);
    }

    let op_j = assemble_operator(curve, params)?;
    let a_j = op_j.homogenized();
    let (k1, res1) = implicit_stage(&a_j, &w, dsigma, opts)?;
    let stage_curve = curve.with_points(k1[..nd].to_vec())?;
    let op_k1 = assemble_operator(&stage_curve, params)?;
    let t = state.t + 0.5 * dsigma * (op_j.sundman + op_k1.sundman);
    let (w_new, res2) = pade_update(&a_j, &op_k1.homogenized(), &w, dsigma, opts)?;

    let aux_drift = cocompact.then(|| (k1[nd] - 1.0).abs().max((w_new[nd] - 1.0).abs()));
    let curve = curve.with_points(w_new[..nd].to_vec())?;
    Ok(StepOutcome {
        state: FlowState {
            step: state.step + 1,
            sigma: state.sigma + dsigma,
            t,
            curve,
        },
        residual: res1.max(res2),
        aux_drift,
    })
}

/// A recorded state.
#[derive(Debug, Clone)]
pub struct Record {
    pub step: usize,
    pub sigma: f64,
    pub t: f64,
    pub report: GeometricReport,
    pub curve: Option<DiscreteCurve>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<Record>,
    pub final_state: FlowState,
    pub stop: StopReason,
    /// Message of the error that ended the run, for `SolverFailure`.
    pub failure: Option<String>,
    /// Largest linear-solve residual ratio seen during the run.
    pub max_residual: f64,
    /// Largest drift of the homogenising coordinate (cocompact runs).
    pub max_aux_drift: f64,
    /// Steps after which the equidistribution ratio exceeded the threshold.
    pub equidist_warnings: usize,
    pub max_equidist: f64,
}

pub fn run(initial: DiscreteCurve, params: &ModelParams, config: &StepConfig) -> Result<RunOutput> {
    run_with_observer(initial, params, config, |_| {})
}

/// Runs the flow, calling `observer` on the initial state and after every step.
pub fn run_with_observer(
    initial: DiscreteCurve,
    params: &ModelParams,
    config: &StepConfig,
    mut observer: impl FnMut(&FlowState),
) -> Result<RunOutput> {
    params.validate()?;
    config.validate()?;
    let l0 = initial.length();
    let dsigma = config.delta_sigma_for(initial.len());
    let min_length = config.stop_min_length.unwrap_or(1e-3 * l0);
    let max_curvature = config.stop_max_curvature.unwrap_or(1e6 / l0);
    let opts = config.solver();

    let record = |s: &FlowState| -> Result<Record> {
        Ok(Record {
            step: s.step,
            sigma: s.sigma,
            t: s.t,
            report: s.curve.report()?,
            curve: config.keep_curves.then(|| s.curve.clone()),
        })
    };

    let mut state = FlowState::initial(initial);
    observer(&state);
    let mut records = vec![record(&state)?];
    let mut max_residual: f64 = 0.0;
    let mut max_aux_drift: f64 = 0.0;
    let mut equidist_warnings = 0;
    let mut max_equidist = state.curve.equidist_ratio();
    let mut failure = None;

    let stop = loop {
        if config.max_steps.is_some_and(|m| state.step >= m) {
            break StopReason::MaxSteps;
        }
        let mut ds = dsigma;
        if let Some(sf) = config.sigma_final {
            let remaining = sf - state.sigma;
            if remaining <= 1e-9 * dsigma {
                break StopReason::SigmaFinal;
            }
            ds = ds.min(remaining);
        }
        let outcome = match step(&state, params, ds, opts) {
            Ok(o) => o,
            Err(e) if e.is_solver_failure() || matches!(e, ChenError::DegenerateEdge { .. } | ChenError::CoincidentNeighbours { .. }) => {
                log::error!("step {} failed: {e}", state.step + 1);
                failure = Some(e.to_string());
                break StopReason::SolverFailure;
            }
            Err(e) => return Err(e),
        };
        max_residual = max_residual.max(outcome.residual);
        if let Some(d) = outcome.aux_drift {
            max_aux_drift = max_aux_drift.max(d);
        }
        state = outcome.state;
        observer(&state);

        let ratio = state.curve.equidist_ratio();
        max_equidist = max_equidist.max(ratio);
        let breach = ratio > params.equidist_threshold;
        if breach {
            if equidist_warnings == 0 {
                log::warn!(
                    "equidistribution ratio {ratio:.3} exceeds {} at step {}; consider a smaller a",
                    params.equidist_threshold,
                    state.step
                );
            }
            equidist_warnings += 1;
        }

        let stop = if state.curve.length() < min_length {
            Some(StopReason::LengthFloor)
        } else if state.curve.max_curvature() > max_curvature {
            Some(StopReason::CurvatureCeiling)
        } else if breach && config.strict_equidist {
            Some(StopReason::EquidistBreach)
        } else if config.t_final.is_some_and(|tf| state.t >= tf) {
            Some(StopReason::TimeFinal)
        } else {
            None
        };
        if stop.is_some() || state.step.is_multiple_of(config.record_every) {
            records.push(record(&state)?);
        }
        if let Some(s) = stop {
            break s;
        }
    };
    if records.last().map(|r| r.step) != Some(state.step) {
        records.push(record(&state)?);
    }
    Ok(RunOutput {
        records,
        final_state: state,
        stop,
        failure,
        max_residual,
        max_aux_drift,
        equidist_warnings,
        max_equidist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveTopology;
    use crate::initialdata::{generate, CurveSpec, Shape};
    use std::f64::consts::PI;

    fn circle(n: usize) -> DiscreteCurve {
        generate(&CurveSpec::new(
            Shape::Circle {
                omega: 1,
                radius: Some(1.0),
                length: None,
            },
            n,
        ))
        .unwrap()
    }

    fn line(n: usize, amp: f64) -> DiscreteCurve {
        generate(&CurveSpec::new(
            Shape::CocompactGraph {
                amplitude: amp,
                frequency: 1,
            },
            n,
        ))
        .unwrap()
    }

    const BANDED: SolverOptions = SolverOptions { dense_below: 0 };

    #[test]
    fn scalar_surrogate_factor() {
        let lambda = 2.0;
        let dsigma = 0.05;
        let a = CyclicBlockBanded::<f64>::identity(5, 1)
            .unwrap()
            .scale_shift(lambda, 0.0);
        let w = vec![1.0, -2.0, 0.5, 3.0, 1.5];
        let (k1, _) = implicit_stage(&a, &w, dsigma, BANDED).unwrap();
        let (next, _) = pade_update(&a, &a, &w, dsigma, BANDED).unwrap();
        let z: f64 = dsigma * lambda;
        let factor = 1.0 / (1.0 - z + 0.5 * z * z);
        assert!((factor - 1.0 / 0.905).abs() < 1e-15);
        for i in 0..5 {
            assert!((k1[i] - w[i] / (1.0 - z)).abs() < 1e-14);
            assert!((next[i] - factor * w[i]).abs() < 1e-14);
        }
        assert!((factor - z.exp() + 1.98e-4).abs() < 1e-6);
    }

    #[test]
    fn flat_line_is_fixed_point() {
        let c = line(32, 0.0);
        let s = FlowState::initial(c.clone());
        let out = step(&s, &ModelParams::default(), 0.01, BANDED).unwrap();
        assert!((out.state.t - 0.01).abs() < 1e-15);
        for (a, b) in out.state.curve.coords().iter().zip(c.coords()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(out.aux_drift.unwrap() < 1e-12);
    }

    #[test]
    fn homogenising_coordinate_stays_one() {
        let mut s = FlowState::initial(line(64, 0.05));
        for _ in 0..10 {
            let out = step(&s, &ModelParams::default(), 1e-3, BANDED).unwrap();
            assert!(out.aux_drift.unwrap() <= 1e-12);
            s = out.state;
        }
    }

    #[test]
    fn circle_stays_round_and_shrinks() {
        let c = circle(256);
        let s = FlowState::initial(c);
        let out = step(&s, &ModelParams::default(), 1e-3, SolverOptions::default()).unwrap();
        let radii: Vec<f64> = out
            .state
            .curve
            .coords()
            .chunks_exact(2)
            .map(|p| p[0].hypot(p[1]))
            .collect();
        let (lo, hi) = radii
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        assert!((hi - lo) / hi < 1e-8);
        assert!(hi < 1.0);
        // b = 1/2 on the unit circle, so t ≈ Δσ/2.
        assert!((out.state.t - 5e-4).abs() < 1e-6);
    }

    #[test]
    fn second_order_in_sigma() {
        // Small convergence-test problem: final-state error vs a fine run.
        let initial = generate(&CurveSpec::new(Shape::ConvergenceTest, 32)).unwrap();
        let sigma_final = 0.02;
        let final_curve = |ds: f64| {
            let cfg = StepConfig {
                delta_sigma: Some(ds),
                sigma_final: Some(sigma_final),
                ..Default::default()
            };
            run(initial.clone(), &ModelParams::default(), &cfg)
                .unwrap()
                .final_state
                .curve
        };
        let reference = final_curve(sigma_final / 1280.0);
        let err = |ds: f64| {
            final_curve(ds)
                .coords()
                .iter()
                .zip(reference.coords())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (e1, e2) = (err(sigma_final / 10.0), err(sigma_final / 20.0));
        let ratio = e1 / e2;
        assert!((3.4..4.6).contains(&ratio), "{ratio}");
    }

    #[test]
    fn length_decreases_and_matches_dissipation() {
        let initial = generate(
            &CurveSpec::new(Shape::Ellipse { axis_ratio: 2.0 }, 128)
                .resampled()
                .with_length(2.0 * PI),
        )
        .unwrap();
        let cfg = StepConfig {
            delta_sigma: Some(1e-3),
            max_steps: Some(40),
            ..Default::default()
        };
        let out = run(initial, &ModelParams::default(), &cfg).unwrap();
        assert_eq!(out.stop, StopReason::MaxSteps);
        assert_eq!(out.records.len(), 41);
        for w in out.records.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            assert!(b.report.length < a.report.length);
            assert!(b.sigma > a.sigma && b.t >= a.t);
            let rate = (b.report.length - a.report.length) / (b.t - a.t);
            let mid = -0.5
                * (a.report.q.unwrap() / a.report.length.powi(3)
                    + b.report.q.unwrap() / b.report.length.powi(3));
            assert!((rate / mid - 1.0).abs() < 0.05, "{rate} vs {mid}");
        }
    }

    #[test]
    fn run_stops_and_validates() {
        let cfg = StepConfig {
            delta_sigma: Some(-1.0),
            max_steps: Some(1),
            ..Default::default()
        };
        assert!(run(circle(16), &ModelParams::default(), &cfg).is_err());
        assert!(run(circle(16), &ModelParams::default(), &StepConfig::default()).is_err());

        let cfg = StepConfig {
            sigma_final: Some(0.1),
            delta_sigma: Some(0.03),
            record_every: 2,
            ..Default::default()
        };
        let out = run(line(16, 0.0), &ModelParams::default(), &cfg).unwrap();
        assert_eq!(out.stop, StopReason::SigmaFinal);
        assert!((out.final_state.sigma - 0.1).abs() < 1e-15);
        let steps: Vec<usize> = out.records.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 2, 4]);
    }

    #[test]
    fn circle_hits_length_floor() {
        let cfg = StepConfig {
            sigma_final: Some(100.0),
            stop_min_length: Some(3.0),
            ..Default::default()
        };
        let out = run(circle(32), &ModelParams::default(), &cfg).unwrap();
        assert_eq!(out.stop, StopReason::LengthFloor);
        assert!(out.final_state.curve.length() < 3.0);
    }

    #[test]
    fn strict_equidist_halts() {
        // Vertices bunched on one side of a circle.
        let pts: Vec<[f64; 2]> = (0..32)
            .map(|i| {
                let u = i as f64 / 32.0;
                let th = 2.0 * PI * (u + 0.12 * (2.0 * PI * u).sin());
                [th.cos(), th.sin()]
            })
            .collect();
        let c = DiscreteCurve::from_planar(&pts, CurveTopology::Closed).unwrap();
        assert!(c.equidist_ratio() > 2.0);
        let cfg = StepConfig {
            max_steps: Some(1),
            strict_equidist: true,
            delta_sigma: Some(1e-6),
            ..Default::default()
        };
        let out = run(c, &ModelParams::default(), &cfg).unwrap();
        assert_eq!(out.stop, StopReason::EquidistBreach);
        assert_eq!(out.equidist_warnings, 1);
    }
}
