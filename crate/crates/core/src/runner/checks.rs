//! Theory checks: desk-scale simulations and closed-form evaluations whose
//! outcome is predicted by the analysis of the flow.

use std::f64::consts::PI;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{
    circle_radius, epsilon1, lemniscate, lemniscate_scale, lifespan_bound, LEMNISCATE_LIFESPAN,
};
use crate::error::{ChenError, Result};
use crate::flowmodel::ModelParams;
use crate::geometry::{hausdorff_distance, CurveTopology, DiscreteCurve};
use crate::initialdata::{cocompact_line, generate, CurveSpec, Shape};
use crate::linsolve::SolverOptions;
use crate::runner::export::TrajectoryRow;
use crate::runner::rescale::extinction_time;
use crate::stepper::{run, step, FlowState, RunOutput, StepConfig, StopReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Lemniscate,
    Lifespan,
    Cocompact,
    QMonotone,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Lemniscate, Suite::Lifespan, Suite::Cocompact, Suite::QMonotone];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemniscate => "lemniscate",
            Suite::Lifespan => "lifespan",
            Suite::Cocompact => "cocompact",
            Suite::QMonotone => "q-monotone",
        }
    }

    pub fn from_name(name: &str) -> Result<Vec<Suite>> {
        if name == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|s| s.name() == name)
            .map(|s| vec![*s])
            .ok_or_else(|| ChenError::InvalidConfig(format!("unknown suite '{name}'")))
    }

    pub fn run(self) -> Result<SuiteReport> {
        match self {
            Suite::Lemniscate => lemniscate_suite(),
            Suite::Lifespan => lifespan_suite(),
            Suite::Cocompact => cocompact_suite(),
            Suite::QMonotone => q_monotone_suite(),
        }
    }
}

/// One measured quantity against its limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance condition, e.g. `<= 1e-10`.
    pub condition: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check {
            name: name.into(),
            value,
            condition: format!("<= {limit:e}"),
            passed: value <= limit,
        }
    }

    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Check {
            name: name.into(),
            value,
            condition: format!("in [{lo}, {hi}]"),
            passed: (lo..=hi).contains(&value),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{mark}  {:<44} {:>12.5e}  {}", self.name, self.value, self.condition)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    /// Largest linear-solve residual ratio over the suite's simulations.
    pub max_residual: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}]", self.suite.name())?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

/// Runs the suites concurrently, reports in the given order.
pub fn run_suites(suites: &[Suite]) -> Result<Vec<SuiteReport>> {
    suites.par_iter().map(|s| s.run()).collect()
}

fn rows(out: &RunOutput) -> Vec<TrajectoryRow> {
    out.records.iter().map(TrajectoryRow::from).collect()
}

fn require_stop(out: &RunOutput, expected: StopReason) -> Result<()> {
    if out.stop == expected {
        Ok(())
    } else {
        Err(ChenError::RunStopped(format!(
            "expected {expected:?}, got {:?} {}",
            out.stop,
            out.failure.clone().unwrap_or_default()
        )))
    }
}

/// Samples of the lemniscate in `θ`, without resampling.
fn lemniscate_polygon(n: usize) -> Result<DiscreteCurve> {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|i| lemniscate(2.0 * PI * i as f64 / n as f64).position)
        .collect();
    DiscreteCurve::from_planar(&pts, CurveTopology::Closed)
}

/// Max deviation of the discrete curvature from `3 v cos θ`.
pub fn lemniscate_curvature_error(n: usize) -> Result<f64> {
    let k = lemniscate_polygon(n)?.signed_curvature()?.k;
    Ok(k.iter()
        .enumerate()
        .map(|(i, ki)| (ki - lemniscate(2.0 * PI * i as f64 / n as f64).curvature).abs())
        .fold(0.0, f64::max))
}

/// Max over `samples` angles of `|k_ss − 6⟨β,ν⟩|` and `|k³ + 27⟨β,ν⟩|`.
pub fn lemniscate_identities(samples: usize) -> (f64, f64) {
    (0..samples).fold((0.0f64, 0.0f64), |(a, b), i| {
        let s = lemniscate(2.0 * PI * i as f64 / samples as f64);
        (
            a.max((s.k_ss - 6.0 * s.support).abs()),
            b.max((s.k_cubed + 27.0 * s.support).abs()),
        )
    })
}

/// Self-similar shrinking of the lemniscate: worst `|L/L₀ − h|` and worst
/// Hausdorff distance of `γ/h` to the initial curve, relative to the
/// diameter 2, over `[0, t_end]`.
pub fn lemniscate_flow(n: usize, t_end: f64, record_every: usize) -> Result<(f64, f64, RunOutput)> {
    let initial = generate(&CurveSpec::new(Shape::BernoulliLemniscate { scale: 1.0 }, n).resampled())?;
    let config = StepConfig {
        t_final: Some(t_end),
        record_every,
        keep_curves: true,
        ..StepConfig::default()
    };
    let out = run(initial.clone(), &ModelParams::default(), &config)?;
    require_stop(&out, StopReason::TimeFinal)?;
    let l0 = out.records[0].report.length;
    let (mut length_dev, mut shape_dev) = (0.0f64, 0.0f64);
    for r in &out.records {
        // The last record may overshoot t_end by one step.
        let h = lemniscate_scale(r.t.min(t_end))?;
        length_dev = length_dev.max((r.report.length / l0 - h).abs());
        let curve = r.curve.as_ref().expect("curves are kept");
        let scaled: Vec<f64> = curve.coords().iter().map(|x| x / h).collect();
        shape_dev = shape_dev.max(hausdorff_distance(&scaled, initial.coords()) / 2.0);
    }
    Ok((length_dev, shape_dev, out))
}

fn lemniscate_suite() -> Result<SuiteReport> {
    let (kss, k3) = lemniscate_identities(10_000);
    let (e1, e2) = (lemniscate_curvature_error(256)?, lemniscate_curvature_error(512)?);
    let (length_dev, shape_dev, out) = lemniscate_flow(1024, 0.5 * LEMNISCATE_LIFESPAN, 20)?;
    Ok(SuiteReport {
        suite: Suite::Lemniscate,
        checks: vec![
            Check::at_most("k_ss - 6<beta,nu>", kss, 1e-10),
            Check::at_most("k^3 + 27<beta,nu>", k3, 1e-10),
            Check::within("discrete curvature error ratio N=256/512", e1 / e2, 3.5, 4.5),
            Check::at_most("|L/L0 - h| up to t=1/264", length_dev, 0.01),
            Check::at_most("shape distance / diameter up to t=1/264", shape_dev, 0.01),
            Check::at_most("solve residual", out.max_residual, 1e-10),
        ],
        max_residual: out.max_residual,
    })
}

/// Round-circle run: worst radius error at `t = 1/8`, the range of
/// `(L⁴)′/(−4Q)` and the extrapolated extinction time.
pub struct CircleRun {
    pub radius_error: f64,
    pub slope_ratio: (f64, f64),
    pub extinction: f64,
    pub output: RunOutput,
}

pub fn circle_run(n: usize) -> Result<CircleRun> {
    let initial = generate(&CurveSpec::new(
        Shape::Circle {
            omega: 1,
            radius: Some(1.0),
            length: None,
        },
        n,
    ))?;
    let t_end = 0.125;
    // The last step is shortened in σ so that t lands on t_end up to O(Δt²).
    let config = StepConfig {
        t_final: Some(t_end),
        ..StepConfig::default()
    };
    let out = run(initial, &ModelParams::default(), &config)?;
    require_stop(&out, StopReason::TimeFinal)?;
    let last = &out.final_state;
    let exact = circle_radius(1.0, last.t)?;
    let radius_error = (0..last.curve.len())
        .map(|i| {
            let p = last.curve.point(i);
            (p[0].hypot(p[1]) - exact).abs()
        })
        .fold(0.0, f64::max);
    let slope_ratio = l4_slope_ratio(&out)?;
    let (extinction, _) = extinction_time(&rows(&out))?;
    Ok(CircleRun {
        radius_error,
        slope_ratio,
        extinction,
        output: out,
    })
}

/// Range over interior records of the centred difference of `L⁴` divided
/// by `−4Q`.
pub fn l4_slope_ratio(out: &RunOutput) -> Result<(f64, f64)> {
    let r = &out.records;
    if r.len() < 3 {
        return Err(ChenError::NotApplicable("need three records for a slope".into()));
    }
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for w in r.windows(3) {
        let slope = (w[2].report.length.powi(4) - w[0].report.length.powi(4)) / (w[2].t - w[0].t);
        let q = w[1]
            .report
            .q
            .ok_or_else(|| ChenError::NotApplicable("Q needs a planar curve".into()))?;
        let ratio = slope / (-4.0 * q);
        range = (range.0.min(ratio), range.1.max(ratio));
    }
    Ok(range)
}

/// Extinction estimate for a length-one closed curve together with the
/// bound `L₀⁴/(64ω⁴π⁴)`.
pub fn lifespan_estimate(shape: Shape, n: usize) -> Result<(f64, f64, RunOutput)> {
    let initial = generate(&CurveSpec::new(shape, n).resampled().with_length(1.0))?;
    let omega = initial.report()?.winding.unwrap_or(1);
    let l0 = initial.length();
    // Coarser σ steps: only the tail of L⁴ is used.
    let config = StepConfig {
        step_constant: 10.0 * StepConfig::default().step_constant,
        max_steps: Some(20_000),
        stop_min_length: Some(0.05 * l0),
        record_every: 10,
        ..StepConfig::default()
    };
    let out = run(initial, &ModelParams::default(), &config)?;
    require_stop(&out, StopReason::LengthFloor)?;
    let (t_hat, _) = extinction_time(&rows(&out))?;
    Ok((t_hat, lifespan_bound(l0, omega), out))
}

fn lifespan_suite() -> Result<SuiteReport> {
    let circle = circle_run(256)?;
    let (t_ellipse, bound_ellipse, ellipse) = lifespan_estimate(Shape::Ellipse { axis_ratio: 2.0 }, 256)?;
    let (t_star, bound_star, star) = lifespan_estimate(Shape::Star { amp: 0.1, lobes: 5 }, 256)?;
    let max_residual = [&circle.output, &ellipse, &star]
        .iter()
        .map(|o| o.max_residual)
        .fold(0.0, f64::max);
    Ok(SuiteReport {
        suite: Suite::Lifespan,
        checks: vec![
            Check::at_most("circle radius error at t=1/8", circle.radius_error, 1e-4),
            Check::within("circle min (L^4)'/(-4Q)", circle.slope_ratio.0, 0.99, 1.01),
            Check::within("circle max (L^4)'/(-4Q)", circle.slope_ratio.1, 0.99, 1.01),
            Check::within("circle extinction estimate", circle.extinction, 0.2475, 0.2525),
            Check::at_most("ellipse extinction / lifespan bound", t_ellipse / bound_ellipse, 1.0),
            Check::at_most("star extinction / lifespan bound", t_star / bound_star, 1.0),
            Check::at_most("solve residual", max_residual, 1e-10),
        ],
        max_residual,
    })
}

/// Largest vertex displacement over `steps` steps of the flat line.
pub fn flat_line_drift(n: usize, steps: usize) -> Result<f64> {
    let mut state = FlowState::initial(cocompact_line(0.0, 1, n)?.curve);
    let params = ModelParams::default();
    let dsigma = StepConfig::default().delta_sigma_for(n);
    let mut drift = 0.0f64;
    for _ in 0..steps {
        let next = step(&state, &params, dsigma, SolverOptions::default())?.state;
        let moved = next
            .curve
            .coords()
            .iter()
            .zip(state.curve.coords())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        drift = drift.max(moved);
        state = next;
    }
    Ok(drift)
}

/// Decay of `ℛ` for a sine graph: `(ℛ(0), worst ℛ(t) / (ℛ(0) e^{−2t/L₀⁴}))`
/// up to `t = 3L₀⁴/4`.
pub fn cocompact_decay(amplitude: f64, n: usize) -> Result<(f64, f64, RunOutput)> {
    let line = cocompact_line(amplitude, 1, n)?;
    let l0 = line.curve.length();
    let l04 = l0.powi(4);
    let config = StepConfig {
        t_final: Some(0.75 * l04),
        record_every: 10,
        ..StepConfig::default()
    };
    let out = run(line.curve, &ModelParams::default(), &config)?;
    require_stop(&out, StopReason::TimeFinal)?;
    let r0 = line.r0;
    let worst = out
        .records
        .iter()
        .map(|rec| rec.report.r.unwrap_or(f64::NAN) / (r0 * (-2.0 * rec.t / l04).exp()))
        .fold(0.0, f64::max);
    Ok((r0, worst, out))
}

fn cocompact_suite() -> Result<SuiteReport> {
    let drift = flat_line_drift(64, 20)?;
    let (r0, worst, out) = cocompact_decay(0.02, 256)?;
    Ok(SuiteReport {
        suite: Suite::Cocompact,
        checks: vec![
            Check::at_most("flat line displacement per step", drift, 1e-12),
            Check::at_most("sine graph R(0)", r0, 0.75),
            Check::at_most("max R(t) / (R(0) exp(-2t/L0^4))", worst, 1.05),
            Check::at_most("homogenising coordinate drift", out.max_aux_drift, 1e-12),
            Check::at_most("solve residual", out.max_residual, 1e-10),
        ],
        max_residual: out.max_residual,
    })
}

/// Star perturbation with `Q(0) < 16π⁴ + ε₁(1)`, found by halving the
/// amplitude. Returns the amplitude, `Q(0)` and the run.
pub fn q_monotone_star(n: usize, steps: usize) -> Result<(f64, f64, RunOutput)> {
    let threshold = 16.0 * PI.powi(4) + epsilon1(1)?;
    let mut amp = 0.1;
    let initial = loop {
        let c = generate(&CurveSpec::new(Shape::Star { amp, lobes: 5 }, n).resampled().with_length(1.0))?;
        if c.report()?.q.unwrap_or(f64::INFINITY) < threshold {
            break c;
        }
        amp *= 0.5;
        if amp < 1e-8 {
            return Err(ChenError::Domain("no star amplitude meets the Q threshold".into()));
        }
    };
    let q0 = initial.report()?.q.unwrap_or(f64::NAN);
    let config = StepConfig {
        max_steps: Some(steps),
        ..StepConfig::default()
    };
    let out = run(initial, &ModelParams::default(), &config)?;
    Ok((amp, q0, out))
}

/// Worst relative increase `(Q_{j+1} − Q_j)/Q_j` over consecutive records.
pub fn worst_q_increase(out: &RunOutput) -> f64 {
    out.records
        .windows(2)
        .filter_map(|w| Some((w[1].report.q? - w[0].report.q?) / w[0].report.q?))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Worst relative deviation of `Q` from `16π⁴` along a circle run.
pub fn circle_q_deviation(n: usize, steps: usize) -> Result<(f64, RunOutput)> {
    let initial = generate(&CurveSpec::new(
        Shape::Circle {
            omega: 1,
            radius: Some(1.0),
            length: None,
        },
        n,
    ))?;
    let config = StepConfig {
        max_steps: Some(steps),
        ..StepConfig::default()
    };
    let out = run(initial, &ModelParams::default(), &config)?;
    let q_circle = 16.0 * PI.powi(4);
    let dev = out
        .records
        .iter()
        .map(|r| (r.report.q.unwrap_or(f64::NAN) / q_circle - 1.0).abs())
        .fold(0.0, f64::max);
    Ok((dev, out))
}

fn q_monotone_suite() -> Result<SuiteReport> {
    let (amp, q0, star) = q_monotone_star(256, 2000)?;
    let threshold = 16.0 * PI.powi(4) + epsilon1(1)?;
    let (circle_dev, circle) = circle_q_deviation(256, 500)?;
    let max_residual = star.max_residual.max(circle.max_residual);
    Ok(SuiteReport {
        suite: Suite::QMonotone,
        checks: vec![
            Check::at_most(&format!("star amp {amp} Q(0) - 16pi^4 - eps1"), q0 - threshold, 0.0),
            Check::at_most("worst relative Q increase per step", worst_q_increase(&star), 1e-6),
            Check::at_most("circle |Q/16pi^4 - 1|", circle_dev, 1e-3),
            Check::at_most("solve residual", max_residual, 1e-10),
        ],
        max_residual,
    })
}
