//! Energy decomposition for users and the UAV.

use nalgebra::DMatrix;

use crate::config::ScenarioConfig;

use super::channel::offload_rate_hat;
use super::propulsion::flight_energy;
use super::region::EveRegion;
use super::state::{BeamCovariance, SolutionState};

/// Breakdown of one user's energy, joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserEnergy {
    pub local_j: f64,
    pub offload_j: f64,
    pub total_j: f64,
}

/// Breakdown of the UAV's energy, joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UavEnergy {
    pub flight_j: f64,
    pub sensing_j: f64,
    pub compute_j: f64,
    pub total_j: f64,
}

/// Per-user and UAV energy decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub per_user: Vec<UserEnergy>,
    pub uav: UavEnergy,
    /// Sum of user totals: the outer-loop objective.
    pub total_user_j: f64,
}

/// Per-user energies from offload matrix `a`, scheduling `b`, and the
/// per-(user, slot) uplink rate table.
pub fn user_energy(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    rates: &DMatrix<f64>,
    cfg: &ScenarioConfig,
) -> Vec<UserEnergy> {
    let (k_cnt, n_cnt) = (a.nrows(), a.ncols());
    let mut out = Vec::with_capacity(k_cnt);
    for k in 0..k_cnt {
        let offloaded: f64 = (0..n_cnt).map(|n| b[(k, n)] * a[(k, n)]).sum();
        let local_j = cfg.cpu_eff
            * (1.0 - offloaded)
            * cfg.task_bits
            * cfg.cycles_per_bit_user
            * cfg.cpu_freq_user_hz
            * cfg.cpu_freq_user_hz;
        let mut offload_j = 0.0;
        for n in 0..n_cnt {
            let sent = b[(k, n)] * a[(k, n)];
            if sent > 0.0 {
                offload_j += cfg.user_tx_power_w * sent * cfg.task_bits
                    / (cfg.bandwidth_hz * rates[(k, n)]);
            }
        }
        out.push(UserEnergy { local_j, offload_j, total_j: local_j + offload_j });
    }
    out
}

/// UAV-side energies: propulsion along the trajectory, sensing beam
/// radiation over all slots, and edge computing for the offloaded bits.
pub fn uav_energy(
    b: &DMatrix<f64>,
    a: &DMatrix<f64>,
    wset: &[BeamCovariance],
    qs: &[[f64; 2]],
    cfg: &ScenarioConfig,
) -> UavEnergy {
    let flight_j = flight_energy(qs, cfg);
    let sensing_j: f64 = wset.iter().map(|w| cfg.slot_len_s * w.trace()).sum();
    let mut compute_j = 0.0;
    for k in 0..a.nrows() {
        for n in 0..a.ncols() {
            compute_j += b[(k, n)]
                * cfg.cpu_eff
                * a[(k, n)]
                * cfg.task_bits
                * cfg.cycles_per_bit_uav
                * cfg.cpu_freq_uav_hz
                * cfg.cpu_freq_uav_hz;
        }
    }
    UavEnergy { flight_j, sensing_j, compute_j, total_j: flight_j + sensing_j + compute_j }
}

/// Uplink rate of every (user, slot) pair given the state's beams and
/// trajectory; sensing counts as on in slots with a scheduled user.
pub fn rate_table(state: &SolutionState, region: &EveRegion, cfg: &ScenarioConfig) -> DMatrix<f64> {
    let (k_cnt, n_cnt) = (state.a.nrows(), state.a.ncols());
    let mut rates = DMatrix::zeros(k_cnt, n_cnt);
    for n in 0..n_cnt {
        let sensing_on = state.slot_active(n);
        for k in 0..k_cnt {
            rates[(k, n)] = offload_rate_hat(
                state.qs[n],
                cfg.user_pos_m[k],
                &state.w[n],
                region,
                sensing_on,
                cfg,
            )
            .expect("region built from config is never empty");
        }
    }
    rates
}

/// Full energy report for a state (rates recomputed from the state).
pub fn energy_report(state: &SolutionState, cfg: &ScenarioConfig) -> EnergyReport {
    let region = EveRegion::from_config(cfg);
    let rates = rate_table(state, &region, cfg);
    let per_user = user_energy(&state.a, &state.b, &rates, cfg);
    let uav = uav_energy(&state.b, &state.a, &state.w, &state.qs, cfg);
    let total_user_j = per_user.iter().map(|u| u.total_j).sum();
    EnergyReport { per_user, uav, total_user_j }
}
