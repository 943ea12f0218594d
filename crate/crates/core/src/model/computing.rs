//! Partial-offloading computing times and slot capacity.
//!
//! Each user holds `task_bits` of work. The part not offloaded during the
//! flight runs locally; offloaded fractions must finish uplink plus edge
//! processing within their slot.

use crate::config::ScenarioConfig;

use super::ModelError;

/// Time decomposition for one user across the flight.
#[derive(Debug, Clone, PartialEq)]
pub struct ComputingTimes {
    /// Local processing time of the non-offloaded remainder, seconds.
    pub t_loc: f64,
    /// Per-slot uplink transmission time, seconds.
    pub t_offload: Vec<f64>,
    /// Per-slot edge processing time at the UAV, seconds.
    pub t_com: Vec<f64>,
}

/// Times for one user given its offload ratios `alpha`, scheduling row
/// `theta`, and per-slot uplink rates (bits/s/Hz).
///
/// Errors when a slot offloads a positive fraction at zero rate.
pub fn computing_times(
    alpha: &[f64],
    theta: &[f64],
    rates: &[f64],
    cfg: &ScenarioConfig,
) -> Result<ComputingTimes, ModelError> {
    let n = alpha.len();
    assert_eq!(theta.len(), n);
    assert_eq!(rates.len(), n);
    let offloaded: f64 = (0..n).map(|i| theta[i] * alpha[i]).sum();
    let t_loc =
        (1.0 - offloaded) * cfg.task_bits * cfg.cycles_per_bit_user / cfg.cpu_freq_user_hz;
    let mut t_offload = Vec::with_capacity(n);
    let mut t_com = Vec::with_capacity(n);
    for slot in 0..n {
        let sent = theta[slot] * alpha[slot];
        if sent > 0.0 {
            if rates[slot] <= 0.0 {
                return Err(ModelError::ZeroRateWithOffload { slot });
            }
            t_offload.push(sent * cfg.task_bits / (cfg.bandwidth_hz * rates[slot]));
        } else {
            t_offload.push(0.0);
        }
        t_com.push(alpha[slot] * cfg.task_bits * cfg.cycles_per_bit_uav / cfg.cpu_freq_uav_hz);
    }
    Ok(ComputingTimes { t_loc, t_offload, t_com })
}

/// Largest offload ratio a single active slot can carry at uplink rate
/// `rate`: transmission plus edge processing must fit in the slot.
/// Returns 0 for nonpositive rates; the caller still clamps to [0, 1].
pub fn slot_offload_capacity(rate: f64, cfg: &ScenarioConfig) -> f64 {
    if rate <= 0.0 {
        return 0.0;
    }
    let per_alpha = cfg.task_bits / (cfg.bandwidth_hz * rate)
        + cfg.task_bits * cfg.cycles_per_bit_uav / cfg.cpu_freq_uav_hz;
    cfg.slot_len_s / per_alpha
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::preset("scenario1").unwrap()
    }

    #[test]
    fn all_local_takes_200_seconds() {
        let c = cfg();
        let zeros = vec![0.0; c.num_slots];
        let rates = vec![10.0; c.num_slots];
        let t = computing_times(&zeros, &zeros, &rates, &c).unwrap();
        assert_relative_eq!(t.t_loc, 200.0, max_relative = 1e-12);
        assert!(t.t_offload.iter().all(|&x| x == 0.0));
        assert!(t.t_com.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn full_offload_edge_time_is_4_seconds() {
        let c = cfg();
        let mut alpha = vec![0.0; c.num_slots];
        let mut theta = vec![0.0; c.num_slots];
        alpha[3] = 1.0;
        theta[3] = 1.0;
        let rates = vec![18.0; c.num_slots];
        let t = computing_times(&alpha, &theta, &rates, &c).unwrap();
        assert_relative_eq!(t.t_com[3], 4.0, max_relative = 1e-12);
        assert_relative_eq!(t.t_loc, 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            t.t_offload[3],
            2e7 / (1e6 * 18.0),
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_rate_with_offload_is_an_error() {
        let c = cfg();
        let alpha = vec![0.5, 0.0];
        let theta = vec![1.0, 0.0];
        let rates = vec![0.0, 0.0];
        let err = computing_times(&alpha, &theta, &rates, &c).unwrap_err();
        assert_eq!(err, ModelError::ZeroRateWithOffload { slot: 0 });
    }

    #[test]
    fn capacity_binds_transmission_plus_processing_to_the_slot() {
        let c = cfg();
        let rate = 18.117792450072976;
        let cap = slot_offload_capacity(rate, &c);
        // cap * (D/(B*R) + D*F_s/f_s) = slot length.
        let spent = cap * (2e7 / (1e6 * rate) + 4.0);
        assert_relative_eq!(spent, 1.0, max_relative = 1e-12);
        assert_relative_eq!(cap, 0.19592909324280857, max_relative = 1e-9);
        assert_eq!(slot_offload_capacity(0.0, &c), 0.0);
        assert_eq!(slot_offload_capacity(-1.0, &c), 0.0);
    }
}
