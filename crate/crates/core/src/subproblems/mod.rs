//! The four convex subproblems of the alternating loop.
//!
//! Each solver takes the other three blocks as data, builds a conic program
//! with [`crate::conic::ProblemBuilder`], and returns updated variables
//! together with diagnostics. Inner approximations are used wherever the
//! original constraint is nonconvex, so every returned iterate is feasible
//! for the original problem (up to solver tolerance) and the outer loop's
//! objective never increases.
//!
//! - [`offload`]: per-user task split (a linear program).
//! - [`scheduling`]: user-slot assignment (relaxed LP plus rounding).
//! - [`beamforming`]: per-slot sensing covariance (semidefinite programs
//!   plus Gaussian randomization).
//! - [`trajectory`]: UAV path (a second-order cone program around the
//!   previous path).
//! - [`surrogate`]: the shared linearizations with their validity ranges.
//! - [`eligibility`]: which user-slot pairs can satisfy the hard
//!   protection and sensing thresholds at all.

pub mod beamforming;
pub mod eligibility;
pub mod offload;
pub mod scheduling;
pub mod surrogate;
pub mod trajectory;

use thiserror::Error;

/// Failure modes shared by the subproblem solvers.
#[derive(Debug, Error)]
pub enum SubproblemError {
    /// The conic program admits no feasible point; the message names the
    /// constraint family that cannot be met.
    #[error("subproblem infeasible: {0}")]
    Infeasible(String),
    /// The solver stopped before reaching the required accuracy.
    #[error("subproblem accuracy not reached: {0}")]
    Accuracy(String),
    /// A model evaluation failed (degenerate geometry or empty region).
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

pub use beamforming::{solve_beamforming_sdp, BeamCache, BeamformingOutcome, BeamformingRef};
pub use eligibility::{build_eligibility, EligibilityMask};
pub use offload::{solve_offload_lp, OffloadOutcome};
pub use scheduling::{solve_scheduling_lp, SchedulingOutcome};
pub use surrogate::{
    dist_sq_tangent, log2_chords, rate_surrogate_lower, surrogate_kinematics,
    taylor_rate_in_interference, SurrogateCoeffs,
};
pub use trajectory::{solve_trajectory_sca, TrajectoryOutcome};
