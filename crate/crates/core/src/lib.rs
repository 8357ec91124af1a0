//! Radially symmetric finite-volume solver and diagnostic harness for the
//! two-dimensional quasilinear parabolic-parabolic chemotaxis system
//!
//! ```text
//! u_t = div(phi(u) grad u) - div(psi(u) grad v)
//! v_t = Lap v - v + u
//! ```
//!
//! on a disk with no-flux boundaries. The crate bundles
//!
//! * a catalog of nonlinearity models with their structural-condition
//!   checker and regime classifier ([`nonlinearity`], [`conditions`]),
//! * a conservative radial finite-volume integrator with adaptive time
//!   stepping and blowup detection ([`solver`]),
//! * energy/dissipation diagnostics along trajectories, including a
//!   blowup-time extrapolator ([`diagnostics`]),
//! * concentrated initial-data construction and energy-targeted search
//!   ([`initdata`]),
//! * run configuration, artifact output, and parameter sweeps
//!   ([`config`], [`report`], [`sweep`]).
//!
//! Parameter sweeps and refinement studies run on a rayon pool when the
//! default `parallel` feature is enabled and fall back to sequential
//! execution without it.

pub mod conditions;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod initdata;
pub mod nonlinearity;
pub mod quad;
pub mod report;
pub mod solver;
pub mod sweep;

pub use conditions::{
    check_conditions, check_raz_implies_gh, classify_regime, Condition, ConditionParams,
    ConditionReport, ConditionStatus, RegimeLabel,
};
pub use error::{Error, Result};
pub use grid::{RadialField, RadialMesh};
pub use nonlinearity::{parse_model_name, ModelKind, NonlinearityModel};
pub use solver::{RadialState, RunVerdict, SolverConfig, VerdictLabel};
