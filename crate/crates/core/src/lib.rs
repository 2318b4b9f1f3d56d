//! Numerical simulation of Chen's flow of curves, `∂ₜγ = −γ_{s⁴}`.
//!
//! The flow is integrated in a modified form: the tangential part of the
//! velocity is replaced by a parameter-space heat flow that keeps vertices
//! equidistributed, and time is reparameterised by a Sundman factor
//! `dt/dσ = a / (1 + ‖κ‖∞⁴)`. Space is discretised with arclength finite
//! differences, time with a two-stage semi-implicit Padé scheme that only
//! needs cyclic block-banded linear solves.
//!
//! Modules:
//! - [`geometry`]: discrete curves, arclength stencils, scalar diagnostics.
//! - [`flowmodel`]: the frozen-coefficient operator `A(w)` and Sundman factor.
//! - [`linsolve`]: real and complex cyclic block-banded direct solvers.
//! - [`stepper`]: the time step and the outer simulation loop.
//! - [`analytic`]: closed-form reference solutions and theory constants.
//! - [`initialdata`]: initial curve generators.
//! - [`runner`]: configs, trajectory export, EOC harness, checks, rescaling.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Index loops read more clearly in the banded kernels.
#![allow(clippy::needless_range_loop)]

pub mod analytic;
pub mod error;
pub mod flowmodel;
pub mod geometry;
pub mod initialdata;
pub mod io;
pub mod linsolve;
pub mod runner;
pub mod stepper;

pub use error::{ChenError, Result};
pub use flowmodel::{ModelParams, OperatorMatrix};
pub use geometry::{CurveTopology, DiscreteCurve, GeometricReport};
pub use initialdata::{CurveSpec, Shape};
pub use linsolve::CyclicBlockBanded;
pub use runner::RunConfig;
pub use stepper::{FlowState, RunOutput, StepConfig, StopReason};
