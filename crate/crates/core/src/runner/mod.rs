//! Scenario configs, trajectory export, EOC harness, checks, rescaling.

pub mod config;
pub mod checks;
pub mod eoc;
pub mod export;
pub mod rescale;

use std::path::Path;

use crate::error::Result;
use crate::geometry::CurveTopology;
use crate::initialdata::generate;
use crate::stepper::{run, RunOutput, StepConfig};

pub use config::{scenario, scenario_names, RunConfig};
pub use export::{RunSummary, TrajectoryRow};

/// Result of [`run_config`]: the raw output and the summary written to disk.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub output: RunOutput,
    pub summary: RunSummary,
}

/// Generates the initial curve, runs the flow and writes the trajectory,
/// optional frames and `summary.json` into `config.output_dir`.
pub fn run_config(config: &RunConfig) -> Result<RunArtifacts> {
    run_config_in(config, &config.output_dir)
}

/// As [`run_config`] with the output directory overridden.
pub fn run_config_in(config: &RunConfig, dir: &Path) -> Result<RunArtifacts> {
    config.validate()?;
    let curve = generate(&config.curve_spec)?;
    let n = curve.len();
    let topology = match curve.topology() {
        CurveTopology::Closed => "closed".to_string(),
        CurveTopology::Cocompact { .. } => "cocompact".to_string(),
    };
    let step = StepConfig {
        keep_curves: config.emit_frames,
        ..config.step.clone()
    };
    let output = run(curve, &config.model, &step)?;
    let frames = export::write_run(dir, &output)?;
    let summary = RunSummary {
        shape: config.curve_spec.shape.name().to_string(),
        n,
        topology,
        stop: output.stop,
        failure: output.failure.clone(),
        steps: output.final_state.step,
        sigma: output.final_state.sigma,
        t: output.final_state.t,
        delta_sigma: step.delta_sigma_for(n),
        initial: output.records[0].report,
        final_report: output.records.last().expect("initial state is recorded").report,
        max_residual: output.max_residual,
        max_aux_drift: output.max_aux_drift,
        equidist_warnings: output.equidist_warnings,
        max_equidist: output.max_equidist,
        frames,
        seed: config.seed,
    };
    export::write_summary(dir, &summary)?;
    Ok(RunArtifacts { output, summary })
}
