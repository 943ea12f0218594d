//! Closed-form system model: steering vectors, channels, rates, computing
//! times and energies, and rotary-wing propulsion power.
//!
//! Everything here is a pure function of its inputs; no shared state, safe
//! to call from any number of threads.

pub mod channel;
pub mod computing;
pub mod energy;
pub mod propulsion;
pub mod region;
pub mod state;
pub mod steering;

use thiserror::Error;

pub use channel::{
    beampattern_gain, eve_rate_worst_case, g2a_channel_gain, offload_rate_hat, user_sinr,
    worst_case_ses_power,
};
pub use computing::{computing_times, slot_offload_capacity, ComputingTimes};
pub use energy::{
    energy_report, rate_table, uav_energy, user_energy, EnergyReport, UavEnergy, UserEnergy,
};
pub use propulsion::{flight_energy, propulsion_power, segment_speeds};
pub use region::EveRegion;
pub use state::{BeamCovariance, SlackBundle, SolutionState};
pub use steering::{steering_vector, ArrayDims, SteeringVector};

/// Domain errors for the closed-form model functions.
#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("zero distance between array and target")]
    ZeroDistance,
    #[error("eavesdropper region has no sample points")]
    EmptyRegion,
    #[error("positive offload in slot {slot} but the uplink rate is zero")]
    ZeroRateWithOffload { slot: usize },
}

/// Squared horizontal distance between two ground-plane points.
#[inline]
pub(crate) fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

/// Squared slant distance from the UAV above `q_s` to ground point `q_g`.
#[inline]
pub(crate) fn slant2(q_s: [f64; 2], q_g: [f64; 2], altitude: f64) -> f64 {
    dist2(q_s, q_g) + altitude * altitude
}
