//! Channel gains, beampattern gain, uplink rate, and worst-case
//! eavesdropper quantities.
//!
//! Ground-to-air links are line-of-sight with gain `ref_gain / d^2`; the
//! ground eavesdropper link is Rayleigh with unit-variance fading, so its
//! averaged power gain is the pure path loss `ref_gain / ||q_k - q_e||^2`.
//! The sensing round trip S -> E -> S carries `rcs * ref_gain / d_se^4`.
//! Under single-user scheduling the inter-user interference sums vanish.

use super::region::EveRegion;
use super::state::BeamCovariance;
use super::steering::{steering_vector, ArrayDims};
use super::{slant2, ModelError};
use crate::config::ScenarioConfig;

/// Power gain of the uplink user channel, `||h_sk||^2 = ref_gain * M /
/// d_sk^2`. Strictly positive and decreasing in the slant distance.
pub fn g2a_channel_gain(q_s: [f64; 2], q_k: [f64; 2], cfg: &ScenarioConfig) -> f64 {
    cfg.ref_gain * cfg.m() as f64 / slant2(q_s, q_k, cfg.altitude_m)
}

/// Transmit beampattern gain toward `q_e`: `a_T^H W a_T`, watts.
///
/// Real for Hermitian W; tiny negative values from finite-precision
/// covariances are reported as-is.
pub fn beampattern_gain(
    wn: &BeamCovariance,
    q_s: [f64; 2],
    q_e: [f64; 2],
    cfg: &ScenarioConfig,
) -> f64 {
    let a = steering_vector(q_s, q_e, cfg.altitude_m, ArrayDims::from(cfg))
        .expect("positive altitude keeps the distance nonzero");
    let m = wn.side();
    let mut acc = 0.0;
    for i in 0..m {
        for j in 0..m {
            // conj(a_i) * W_ij * a_j, accumulated as a real number.
            let prod = a.entries[i].conj() * wn.0[(i, j)] * a.entries[j];
            acc += prod.re;
        }
    }
    acc
}

/// Round-trip sensing interference at one candidate eavesdropper point:
/// `tr(h_ses W h_ses^H) = rcs * ref_gain * M * (a_T^H W a_T) / d_se^4`.
fn ses_power_at(
    wn: &BeamCovariance,
    q_s: [f64; 2],
    q_e: [f64; 2],
    cfg: &ScenarioConfig,
) -> f64 {
    let d2 = slant2(q_s, q_e, cfg.altitude_m);
    let gain = beampattern_gain(wn, q_s, q_e, cfg).max(0.0);
    cfg.rcs * cfg.ref_gain * cfg.m() as f64 * gain / (d2 * d2)
}

/// Worst-case round-trip interference over the uncertainty region,
/// `max_e tr(h_ses W h_ses^H)`.
pub fn worst_case_ses_power(
    wn: &BeamCovariance,
    q_s: [f64; 2],
    region: &EveRegion,
    cfg: &ScenarioConfig,
) -> Result<f64, ModelError> {
    if region.is_empty() {
        return Err(ModelError::EmptyRegion);
    }
    Ok(region
        .samples
        .iter()
        .map(|&q_e| ses_power_at(wn, q_s, q_e, cfg))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Legitimate uplink SINR of a solely-active user:
/// `P_u ||h_sk||^2 / (theta_r * P_ses + noise_s)`.
pub fn user_sinr(
    q_s: [f64; 2],
    q_k: [f64; 2],
    wn: &BeamCovariance,
    region: &EveRegion,
    sensing_on: bool,
    cfg: &ScenarioConfig,
) -> Result<f64, ModelError> {
    let interference = if sensing_on {
        worst_case_ses_power(wn, q_s, region, cfg)?
    } else {
        0.0
    };
    Ok(cfg.user_tx_power_w * g2a_channel_gain(q_s, q_k, cfg) / (interference + cfg.noise_s_w))
}

/// Conservative uplink rate `log2(1 + user_sinr)`, bits/s/Hz.
pub fn offload_rate_hat(
    q_s: [f64; 2],
    q_k: [f64; 2],
    wn: &BeamCovariance,
    region: &EveRegion,
    sensing_on: bool,
    cfg: &ScenarioConfig,
) -> Result<f64, ModelError> {
    Ok((1.0 + user_sinr(q_s, q_k, wn, region, sensing_on, cfg)?).log2())
}

/// Averaged eavesdropper SINR on user `q_k`'s signal for one candidate
/// point of the region.
pub fn eve_sinr_at(
    q_k: [f64; 2],
    wn: &BeamCovariance,
    q_s: [f64; 2],
    q_e: [f64; 2],
    sensing_on: bool,
    cfg: &ScenarioConfig,
) -> f64 {
    let signal = cfg.user_tx_power_w * cfg.ref_gain / super::dist2(q_k, q_e);
    let jam = if sensing_on {
        let d2 = slant2(q_s, q_e, cfg.altitude_m);
        cfg.ref_gain * beampattern_gain(wn, q_s, q_e, cfg).max(0.0) / d2
    } else {
        0.0
    };
    signal / (jam + cfg.noise_e_w)
}

/// Worst-case eavesdropping rate over the region,
/// `max_e log2(1 + eve_sinr_at(e))`, bits/s/Hz.
pub fn eve_rate_worst_case(
    q_k: [f64; 2],
    wn: &BeamCovariance,
    q_s: [f64; 2],
    region: &EveRegion,
    sensing_on: bool,
    cfg: &ScenarioConfig,
) -> Result<f64, ModelError> {
    if region.is_empty() {
        return Err(ModelError::EmptyRegion);
    }
    Ok(region
        .samples
        .iter()
        .map(|&q_e| (1.0 + eve_sinr_at(q_k, wn, q_s, q_e, sensing_on, cfg)).log2())
        .fold(f64::NEG_INFINITY, f64::max))
}
