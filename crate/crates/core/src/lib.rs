//! Planner for a secure UAV-aided integrated sensing-communication-computing
//! (ISCC) system.
//!
//! A rotary-wing UAV carrying a uniform planar array serves K ground users
//! that partially offload computation tasks over an uplink, while the same
//! array radiates a sensing beam toward an eavesdropper whose position is
//! only known to lie in a square region. The library minimizes total user
//! energy by alternating optimization over four blocks:
//!
//! * offload ratios (linear program),
//! * user scheduling (relaxed linear program + rounding),
//! * sensing-beam covariances (semidefinite program + rank-one recovery),
//! * UAV trajectory (successive convex approximation).
//!
//! Layers, bottom up:
//!
//! * [`config`] - scenario parameters, presets, file round-trip;
//! * [`model`] - closed-form channels, rates, energies, propulsion;
//! * [`conic`] - a small cone-program solver (zero / nonnegative /
//!   second-order / PSD cones) used by every subproblem;
//! * [`subproblems`] - the four block solvers and their convex surrogates;
//! * [`orchestrator`] - the alternating-optimization loop, benchmark
//!   schemes, and the end-to-end feasibility audit;
//! * [`report`] - CSV/JSON emission for batch experiments.

pub mod config;
pub mod conic;
pub mod model;
pub mod orchestrator;
pub mod subproblems;

pub use config::ScenarioConfig;
pub use conic::{solve_conic, ConicProblem, ConicSolution, SolveStatus};
pub use model::state::SolutionState;
pub use orchestrator::{
    audit_feasibility, initialize_state, run_algorithm1, AoTrace, AuditReport, OrchestratorError,
    Scheme,
};
