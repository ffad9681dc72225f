//! Extended (power-law) Blasius problem solved by the non-iterative
//! transformation method, with mesh refinement, Richardson extrapolation
//! and an independent shooting cross-check.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convergence;
pub mod integrator;
pub mod model;
pub mod nitm;
pub mod oracle;

pub use convergence::{
    certify, extrapolate, observed_order, run_study, Certification, RefinementStudy,
    RichardsonTableau, StudyConfig,
};
pub use integrator::{CurvaturePolicy, GridSpec, Trajectory};
pub use model::{make_params, ProblemParams, State};
pub use nitm::{solve, NitmResult, SolveOptions};
