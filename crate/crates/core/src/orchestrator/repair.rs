//! Absorbing a trajectory update into the state.
//!
//! The trajectory subproblem freezes each beam's gain pattern at the
//! reference path; once the platform actually moves, the steering vectors
//! toward the region samples drift and the true perception and jamming
//! floors can slip. Absorption re-scales each active slot's covariance by
//! the smallest factor that restores the floors at the new positions,
//! verifies the whole candidate with the exact-expression audit, and damps
//! the step toward the reference path when the full move cannot be made
//! feasible or cheaper.

use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::model::energy::energy_report;
use crate::model::state::SolutionState;
use crate::model::{channel, dist2, slant2, EveRegion};

use super::audit::audit_feasibility;

/// Accepted candidate after a trajectory update.
pub(crate) struct AbsorbedTrajectory {
    pub state: SolutionState,
    pub objective_j: f64,
    /// Number of halvings applied to the step (0 = full step).
    pub damping: u32,
}

const MAX_HALVINGS: u32 = 10;
const ACCEPT_TOL: f64 = 1e-5;

/// Tries the proposed path, then geometrically damped versions of it, and
/// returns the first candidate that passes the audit without raising the
/// objective. `None` keeps the previous state.
pub(crate) fn absorb_trajectory(
    state: &SolutionState,
    proposed: &[[f64; 2]],
    objective_j: f64,
    cfg: &ScenarioConfig,
) -> Option<AbsorbedTrajectory> {
    let region = EveRegion::from_config(cfg);
    for damping in 0..=MAX_HALVINGS {
        let t = 0.5f64.powi(damping as i32);
        let qs: Vec<[f64; 2]> = state
            .qs
            .iter()
            .zip(proposed)
            .map(|(&r, &p)| [r[0] + t * (p[0] - r[0]), r[1] + t * (p[1] - r[1])])
            .collect();
        let dbg = std::env::var("ISCC_ABSORB_DEBUG").is_ok();
        let Some(mut cand) = rescaled_for(state, &qs, &region, cfg) else {
            if dbg {
                eprintln!("[absorb] damping {damping}: rescale failed");
            }
            continue;
        };
        cand.qs = qs;
        let report = audit_feasibility(&cand, cfg);
        if report.worst() > ACCEPT_TOL {
            if dbg {
                let fv = report.first_violated(ACCEPT_TOL).unwrap();
                eprintln!(
                    "[absorb] damping {damping}: audit {} = {:.3e}",
                    fv.family, fv.violation
                );
            }
            continue;
        }
        let cand_obj = energy_report(&cand, cfg).total_user_j;
        if cand_obj <= objective_j + 1e-12 {
            return Some(AbsorbedTrajectory { state: cand, objective_j: cand_obj, damping });
        }
        if dbg {
            eprintln!(
                "[absorb] damping {damping}: objective {cand_obj:.9} vs {objective_j:.9}"
            );
        }
    }
    None
}

/// Clone of the state whose active-slot covariances are scaled by the
/// smallest factor >= 1 restoring the true perception and jamming floors
/// at `qs`. `None` when a needed scale breaks the transmit cap.
fn rescaled_for(
    state: &SolutionState,
    qs: &[[f64; 2]],
    region: &EveRegion,
    cfg: &ScenarioConfig,
) -> Option<SolutionState> {
    let mut cand = state.clone();
    for n in 0..cfg.num_slots {
        let Some(k) = state.active_user(n) else { continue };
        let mut rho = 1.0f64;
        for &q_e in &region.samples {
            let gain = channel::beampattern_gain(&state.w[n], qs[n], q_e, cfg).max(0.0);
            let d_se2 = slant2(qs[n], q_e, cfg.altitude_m);
            if cfg.gamma_sen > 0.0 {
                if gain <= 0.0 {
                    return None;
                }
                rho = rho.max(d_se2 * cfg.gamma_sen / gain);
            }
            let need = cfg.user_tx_power_w * cfg.ref_gain
                / (dist2(cfg.user_pos_m[k], q_e) * cfg.gamma_e)
                - cfg.noise_e_w;
            if need > 0.0 {
                if gain <= 0.0 {
                    return None;
                }
                rho = rho.max(need * d_se2 / (cfg.ref_gain * gain));
            }
        }
        if rho > 1.0 {
            if rho * state.w[n].trace() > cfg.p_max_w * (1.0 + 1e-12) {
                return None;
            }
            cand.w[n] = crate::model::state::BeamCovariance(
                &state.w[n].0 * Complex64::new(rho, 0.0),
            );
            cand.beams[n] = state.beams[n]
                .as_ref()
                .map(|beam| beam.map(|z| z * Complex64::new(rho.sqrt(), 0.0)));
        }
    }
    Some(cand)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orchestrator::initialize_state;

    #[test]
    fn identity_step_is_absorbed_unchanged() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        let state = initialize_state(&cfg).unwrap();
        let obj = energy_report(&state, &cfg).total_user_j;
        let got = absorb_trajectory(&state, &state.qs.clone(), obj, &cfg).unwrap();
        assert_eq!(got.damping, 0);
        assert_eq!(got.state.qs, state.qs);
        assert!(got.objective_j <= obj + 1e-12);
    }

    #[test]
    fn a_small_drift_is_repaired_back_to_feasibility() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        let state = initialize_state(&cfg).unwrap();
        let obj = energy_report(&state, &cfg).total_user_j;
        // Nudge the whole path toward the users; the frozen beams then sit
        // slightly off their floors until the rescale restores them.
        let proposed: Vec<[f64; 2]> = state
            .qs
            .iter()
            .enumerate()
            .map(|(i, &q)| if i == 0 || i == 39 { q } else { [q[0] + 1.0, q[1] - 1.0] })
            .collect();
        if let Some(got) = absorb_trajectory(&state, &proposed, obj, &cfg) {
            assert!(audit_feasibility(&got.state, &cfg).worst() <= 1e-5);
            assert!(got.objective_j <= obj + 1e-12);
        }
    }
}
