//! Which user-slot pairs can be scheduled at all.
//!
//! A pair (k, n) survives only if, with user k solely active in slot n and
//! the sensing beam on, all three hard thresholds hold: the user's uplink
//! SINR clears the service floor, the worst-case eavesdropper SINR over
//! the uncertainty region stays under the secrecy ceiling, and the
//! beampattern gain meets the perception threshold at every region sample.
//! The mask must be rebuilt whenever the beams or the trajectory move.

use crate::config::ScenarioConfig;
use crate::model::region::EveRegion;
use crate::model::state::BeamCovariance;
use crate::model::{channel, slant2, ModelError};

/// Scheduling admissibility per user-slot pair plus per-slot sensing
/// feasibility.
#[derive(Debug, Clone, PartialEq)]
pub struct EligibilityMask {
    /// `user_slot[k][n]`: user k may be scheduled in slot n.
    pub user_slot: Vec<Vec<bool>>,
    /// `slot_sensing[n]`: the slot's beam meets the perception threshold
    /// at all region samples.
    pub slot_sensing: Vec<bool>,
}

impl EligibilityMask {
    pub fn eligible(&self, k: usize, n: usize) -> bool {
        self.user_slot[k][n]
    }

    /// Number of eligible pairs.
    pub fn count(&self) -> usize {
        self.user_slot
            .iter()
            .map(|row| row.iter().filter(|&&e| e).count())
            .sum()
    }

    /// Whether any user can be scheduled in slot n.
    pub fn slot_has_candidates(&self, n: usize) -> bool {
        self.user_slot.iter().any(|row| row[n])
    }
}

/// Evaluates the three admissibility thresholds for every pair, assuming
/// sole activity and an active sensing beam.
pub fn build_eligibility(
    qs: &[[f64; 2]],
    wset: &[BeamCovariance],
    cfg: &ScenarioConfig,
) -> Result<EligibilityMask, ModelError> {
    let region = EveRegion::from_config(cfg);
    let n_slots = cfg.num_slots;
    let mut slot_sensing = vec![false; n_slots];
    let mut slot_eve_ceiling_ok: Vec<Vec<bool>> = vec![Vec::new(); n_slots];

    for n in 0..n_slots {
        // Perception threshold: gain >= d_se^2 * Gamma_sen at all samples.
        slot_sensing[n] = region.samples.iter().all(|&q_e| {
            let gain = channel::beampattern_gain(&wset[n], qs[n], q_e, cfg).max(0.0);
            gain >= slant2(qs[n], q_e, cfg.altitude_m) * cfg.gamma_sen
        });
        // Worst-case eavesdropper SINR per user, against this slot's beam.
        slot_eve_ceiling_ok[n] = (0..cfg.num_users)
            .map(|k| {
                region.samples.iter().all(|&q_e| {
                    channel::eve_sinr_at(cfg.user_pos_m[k], &wset[n], qs[n], q_e, true, cfg)
                        <= cfg.gamma_e
                })
            })
            .collect();
    }

    let mut user_slot = vec![vec![false; n_slots]; cfg.num_users];
    for (k, row) in user_slot.iter_mut().enumerate() {
        for (n, cell) in row.iter_mut().enumerate() {
            if !slot_sensing[n] || !slot_eve_ceiling_ok[n][k] {
                continue;
            }
            let sinr =
                channel::user_sinr(qs[n], cfg.user_pos_m[k], &wset[n], &region, true, cfg)?;
            *cell = sinr >= cfg.gamma_s;
        }
    }

    Ok(EligibilityMask {
        user_slot,
        slot_sensing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::state::SolutionState;
    use crate::model::steering::{steering_vector, ArrayDims};
    use nalgebra::DVector;

    fn aimed_covariance(
        q_s: [f64; 2],
        target: [f64; 2],
        trace_w: f64,
        cfg: &ScenarioConfig,
    ) -> BeamCovariance {
        let a = steering_vector(q_s, target, cfg.altitude_m, ArrayDims::from(cfg)).unwrap();
        let amp = (trace_w / cfg.m() as f64).sqrt();
        let beam = DVector::from_iterator(cfg.m(), a.entries.iter().map(|&e| e * amp));
        BeamCovariance::from_beam(&beam)
    }

    #[test]
    fn vacuous_thresholds_make_every_pair_eligible() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.gamma_s = 0.0;
        cfg.gamma_e = f64::INFINITY;
        cfg.gamma_sen = 0.0;
        let state = SolutionState::empty(&cfg);
        let mask = build_eligibility(&state.qs, &state.w, &cfg).unwrap();
        assert_eq!(mask.count(), cfg.num_users * cfg.num_slots);
        assert!(mask.slot_sensing.iter().all(|&s| s));
    }

    #[test]
    fn zero_beam_with_positive_threshold_blocks_everything() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        let state = SolutionState::empty(&cfg);
        let mask = build_eligibility(&state.qs, &state.w, &cfg).unwrap();
        assert_eq!(mask.count(), 0);
        assert!(mask.slot_sensing.iter().all(|&s| !s));
    }

    #[test]
    fn start_corner_pair_matches_brute_force_over_grid() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        let mut state = SolutionState::empty(&cfg);
        let q_s = [0.0, 0.0];
        state.qs = vec![q_s; cfg.num_slots];
        let w = aimed_covariance(q_s, cfg.eve_center_m, 1.0, &cfg);
        state.w = vec![w.clone(); cfg.num_slots];

        let mask = build_eligibility(&state.qs, &state.w, &cfg).unwrap();

        // Recompute the three threshold inequalities sample by sample.
        let region = EveRegion::from_config(&cfg);
        let sensing_ok = region.samples.iter().all(|&q_e| {
            channel::beampattern_gain(&w, q_s, q_e, &cfg).max(0.0)
                >= slant2(q_s, q_e, cfg.altitude_m) * cfg.gamma_sen
        });
        for k in 0..cfg.num_users {
            let eve_ok = region.samples.iter().all(|&q_e| {
                channel::eve_sinr_at(cfg.user_pos_m[k], &w, q_s, q_e, true, &cfg) <= cfg.gamma_e
            });
            let sinr_ok = channel::user_sinr(q_s, cfg.user_pos_m[k], &w, &region, true, &cfg)
                .unwrap()
                >= cfg.gamma_s;
            assert_eq!(
                mask.eligible(k, 1),
                sensing_ok && eve_ok && sinr_ok,
                "user {k} mismatch"
            );
        }
        assert_eq!(mask.slot_sensing[1], sensing_ok);
    }
}
