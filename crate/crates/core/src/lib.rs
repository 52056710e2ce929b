//! Steady vortex pairs in the half-plane as maximizers of kinetic energy over
//! rearrangements of a given vorticity, with an impulse constraint.
//!
//! The crate covers the discrete half-plane grid, the Green's operator, the
//! rearrangement machinery, the constrained ascent solver, a semi-Lagrangian
//! Euler integrator for stability experiments, and diagnostics.

pub mod diagnostics;
pub mod error;
pub mod euler;
pub mod greens;
pub mod grid;
pub mod io;
pub mod optimizer;
pub mod profiles;
pub mod rearrange;

pub use diagnostics::{
    best_disc, bound_report, cc_classify, concentration_profile, BoundReport, CCLabel, CCReport, CCThresholds,
};
pub use error::{Error, Result};
pub use euler::{
    orbit_distance, orbit_distance_continuous, stability_experiment, ConservationRecord, Euler, EulerConfig,
    EvolutionState, Interpolation, StabilityConfig, StabilityReport, Trajectory, VelocityTime,
};
pub use greens::{GreensOperator, StreamMethod, VelocityField};
pub use grid::{Domain, Field};
pub use optimizer::{
    first_variation_residual, linearized_max, solve, solve_lambda, FirstVariationFit, Solution, SolutionKind,
    Solver, SolverConfig, SolverState, TraceRecord,
};
pub use rearrange::{
    curtail, decreasing_rearrangement, is_rearrangement, precedes, steiner_symmetrize, Profile, SteinerSpec,
};
