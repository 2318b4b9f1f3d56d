//! Convergence sweep against the exact solution of the test problem.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::{convtest_reference_at, convtest_sigma_final, eoc};
use crate::error::{ChenError, Result};
use crate::flowmodel::ModelParams;
use crate::geometry::DiscreteCurve;
use crate::initialdata::{generate, CurveSpec, Shape};
use crate::stepper::{run_with_observer, FlowState, StepConfig, StopReason};

/// Smallest `N` accepted by the sweep.
pub const EOC_MIN_N: usize = 16;

/// One row of the table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EocRow {
    pub n: usize,
    pub steps: usize,
    /// Max over iterates and vertices of the distance to the exact solution.
    pub error: f64,
    /// `None` for the first row.
    pub eoc: Option<f64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EocTable {
    pub sigma_final: f64,
    /// Rows of the members that completed.
    pub rows: Vec<EocRow>,
    /// First member failure, if any; the table is then partial.
    pub failure: Option<String>,
}

impl EocTable {
    /// Plain-text table: `N`, error, EOC.
    /// Writes `eoc.csv` and `eoc.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut csv = String::from("N,steps,error,EOC\n");
        for r in &self.rows {
            let eoc = r.eoc.map_or(String::new(), |e| e.to_string());
            csv.push_str(&format!("{},{},{},{eoc}\n", r.n, r.steps, r.error));
        }
        fs::write(dir.join("eoc.csv"), csv)?;
        fs::write(dir.join("eoc.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:>6}  {:>12}  {:>6}\n", "N", "error", "EOC");
        for r in &self.rows {
            let eoc = r.eoc.map_or("-".to_string(), |e| format!("{e:.2}"));
            out.push_str(&format!("{:>6}  {:>12.4e}  {:>6}\n", r.n, r.error, eoc));
        }
        out
    }
}

/// Checks that `ns` starts at 16 or more, doubles, and is divisible by 4
/// (so that `Δσ = 4σ_f/(25N)` gives a whole number of steps).
pub fn validate_ns(ns: &[usize]) -> Result<()> {
    let bad = |msg: String| Err(ChenError::InvalidConfig(msg));
    match ns.first() {
        None => return bad("empty N list".into()),
        Some(&n) if n < EOC_MIN_N => return bad(format!("N must be at least {EOC_MIN_N}, got {n}")),
        _ => {}
    }
    if let Some(w) = ns.windows(2).find(|w| w[1] != 2 * w[0]) {
        return bad(format!("N sequence must double, got {} then {}", w[0], w[1]));
    }
    if let Some(n) = ns.iter().find(|&&n| n % 4 != 0) {
        return bad(format!("N must be divisible by 4, got {n}"));
    }
    Ok(())
}

pub fn convtest_initial(n: usize) -> Result<DiscreteCurve> {
    generate(&CurveSpec::new(Shape::ConvergenceTest, n))
}

/// Distance from `state` to the exact solution at its `σ`, using the
/// numerically integrated `t`.
pub fn convtest_error(state: &FlowState) -> Result<f64> {
    let n = state.curve.len();
    (0..n).try_fold(0.0f64, |acc, i| {
        let exact = convtest_reference_at(i as f64 / n as f64, state.sigma, state.t)?;
        let p = state.curve.point(i);
        Ok(acc.max((p[0] - exact[0]).hypot(p[1] - exact[1])))
    })
}

/// Runs the test problem at `n` points with `Δσ = step_constant / n` to `σ_f`.
/// Returns the max error over all iterates, the number of steps and the
/// largest solve residual.
pub fn convtest_run(n: usize, step_constant: f64) -> Result<(f64, usize, f64)> {
    let config = StepConfig {
        step_constant,
        sigma_final: Some(convtest_sigma_final()),
        ..StepConfig::default()
    };
    let mut error = 0.0f64;
    let mut err = None;
    let out = run_with_observer(convtest_initial(n)?, &ModelParams::default(), &config, |s| {
        match convtest_error(s) {
            Ok(e) => error = error.max(e),
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    if out.stop != StopReason::SigmaFinal {
        return Err(ChenError::RunStopped(format!(
            "N = {n}: {:?} {}",
            out.stop,
            out.failure.unwrap_or_default()
        )));
    }
    Ok((error, out.final_state.step, out.max_residual))
}

/// Runs every `N` in parallel and assembles the table. A failing member
/// does not discard the others: its row is left out and the failure is
/// recorded on the table.
pub fn eoc_sweep(ns: &[usize]) -> Result<EocTable> {
    validate_ns(ns)?;
    let c = crate::stepper::default_step_constant();
    let results: Vec<Result<(f64, usize, f64)>> = ns.par_iter().map(|&n| convtest_run(n, c)).collect();
    let mut rows: Vec<EocRow> = Vec::with_capacity(ns.len());
    let mut failure = None;
    for (&n, r) in ns.iter().zip(results) {
        match r {
            Ok((error, steps, max_residual)) => {
                let eoc = rows
                    .last()
                    .filter(|prev| 2 * prev.n == n)
                    .map(|prev| eoc(&[prev.n, n], &[prev.error, error]))
                    .transpose()?
                    .map(|e| e[0]);
                rows.push(EocRow {
                    n,
                    steps,
                    error,
                    eoc,
                    max_residual,
                });
            }
            Err(e) => {
                log::error!("N = {n} failed: {e}");
                failure.get_or_insert(format!("N = {n}: {e}"));
            }
        }
    }
    Ok(EocTable {
        sigma_final: convtest_sigma_final(),
        rows,
        failure,
    })
}
