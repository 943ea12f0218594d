//! Feasibility audit with the true system expressions.
//!
//! Every hard constraint of the planning problem is re-evaluated from
//! scratch with the exact channel, computing, and propulsion formulas,
//! never the convex surrogates, across the full eavesdropper sample grid.
//! Violations are reported per family as relative excess: 0.125 means the
//! worst offender sits 12.5% beyond its bound, and a feasible state shows
//! numerical noise at most.

use crate::config::ScenarioConfig;
use crate::model::state::SolutionState;
use crate::model::{channel, dist2, energy, slant2, EveRegion};

/// Worst relative violation of one constraint family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyViolation {
    pub family: &'static str,
    pub violation: f64,
}

/// Per-family worst violations, in a fixed reporting order.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub families: Vec<FamilyViolation>,
}

impl AuditReport {
    /// Largest violation across all families.
    pub fn worst(&self) -> f64 {
        self.families.iter().map(|f| f.violation).fold(0.0, f64::max)
    }

    /// Violation of a named family, if audited.
    pub fn get(&self, family: &str) -> Option<f64> {
        self.families.iter().find(|f| f.family == family).map(|f| f.violation)
    }

    /// First family exceeding `tol`, in reporting order.
    pub fn first_violated(&self, tol: f64) -> Option<&FamilyViolation> {
        self.families.iter().find(|f| f.violation > tol)
    }
}

/// Audits a state against every original constraint and returns the worst
/// relative violation per family.
///
/// Families: `endpoints` (meters of drift from the required start and end
/// points), `speed`, `power`, `psd` (covariance shape), `schedule-sum`,
/// `binary`, `ratio-bounds`, `whole-task`, `perception` (active slots,
/// all region samples), `secrecy-ceiling`, `service-floor`, `slot-time`,
/// `battery`, and `deadline` when the config enforces one.
pub fn audit_feasibility(state: &SolutionState, cfg: &ScenarioConfig) -> AuditReport {
    let region = EveRegion::from_config(cfg);
    let (k_cnt, n_cnt) = (state.a.nrows(), state.a.ncols());
    let dt = cfg.slot_len_s;
    let mut families: Vec<(&'static str, f64)> = Vec::new();

    let drift = dist2(state.qs[0], cfg.uav_start_m)
        .sqrt()
        .max(dist2(*state.qs.last().expect("at least one slot"), cfg.uav_end_m).sqrt());
    families.push(("endpoints", drift));

    let step_cap = cfg.v_max_mps * dt;
    let mut speed = 0.0f64;
    for w in state.qs.windows(2) {
        let step = dist2(w[0], w[1]).sqrt();
        speed = speed.max((step - step_cap) / step_cap.max(1e-9));
    }
    families.push(("speed", speed));

    let mut power = 0.0f64;
    let mut psd = 0.0f64;
    for w in &state.w {
        power = power.max((w.trace() - cfg.p_max_w) / cfg.p_max_w.max(1e-9));
        if w.trace() != 0.0 {
            psd = psd.max(w.hermitian_error());
            psd = psd.max(-w.min_eigenvalue() / w.trace().abs().max(1e-12));
        }
    }
    families.push(("power", power));
    families.push(("psd", psd));

    let mut sched = 0.0f64;
    for n in 0..n_cnt {
        let slot_sum: f64 = (0..k_cnt).map(|k| state.b[(k, n)]).sum();
        sched = sched.max(slot_sum - 1.0);
    }
    families.push(("schedule-sum", sched));

    let binary =
        state.b.iter().map(|&v| v.abs().min((v - 1.0).abs())).fold(0.0, f64::max);
    families.push(("binary", binary));

    let ratio = state.a.iter().map(|&v| (-v).max(v - 1.0)).fold(0.0, f64::max);
    families.push(("ratio-bounds", ratio));

    let whole = (0..k_cnt).map(|k| state.offload_total(k) - 1.0).fold(0.0, f64::max);
    families.push(("whole-task", whole));

    let mut perception = 0.0f64;
    let mut secrecy = 0.0f64;
    let mut service = 0.0f64;
    let mut slot_time = 0.0f64;
    for n in 0..n_cnt {
        let Some(k) = state.active_user(n) else { continue };
        for &q_e in &region.samples {
            if cfg.gamma_sen > 0.0 {
                let bound = slant2(state.qs[n], q_e, cfg.altitude_m) * cfg.gamma_sen;
                let gain =
                    channel::beampattern_gain(&state.w[n], state.qs[n], q_e, cfg).max(0.0);
                perception = perception.max((bound - gain) / bound);
            }
            let eve =
                channel::eve_sinr_at(cfg.user_pos_m[k], &state.w[n], state.qs[n], q_e, true, cfg);
            secrecy = secrecy.max((eve - cfg.gamma_e) / cfg.gamma_e.max(1e-30));
        }
        let sinr =
            channel::user_sinr(state.qs[n], cfg.user_pos_m[k], &state.w[n], &region, true, cfg)
                .expect("region built from config is never empty");
        if cfg.gamma_s > 0.0 {
            service = service.max((cfg.gamma_s - sinr) / cfg.gamma_s);
        }
        let alpha = state.a[(k, n)];
        if alpha > 0.0 {
            let rate = (1.0 + sinr).log2();
            let spent = if rate > 0.0 {
                alpha * cfg.task_bits / (cfg.bandwidth_hz * rate)
                    + alpha * cfg.task_bits * cfg.cycles_per_bit_uav / cfg.cpu_freq_uav_hz
            } else {
                f64::INFINITY
            };
            slot_time = slot_time.max((spent - dt) / dt);
        }
    }
    families.push(("perception", perception));
    families.push(("secrecy-ceiling", secrecy));
    families.push(("service-floor", service));
    families.push(("slot-time", slot_time));

    let uav = energy::uav_energy(&state.b, &state.a, &state.w, &state.qs, cfg);
    families.push(("battery", (uav.total_j - cfg.e_max_j) / cfg.e_max_j.max(1e-9)));

    if cfg.enforce_deadline {
        let mut deadline = 0.0f64;
        for k in 0..k_cnt {
            let t_loc = (1.0 - state.offload_total(k)) * cfg.task_bits * cfg.cycles_per_bit_user
                / cfg.cpu_freq_user_hz;
            deadline = deadline.max((t_loc - cfg.total_time_s) / cfg.total_time_s);
        }
        families.push(("deadline", deadline));
    }

    AuditReport {
        families: families
            .into_iter()
            .map(|(family, violation)| FamilyViolation { family, violation: violation.max(0.0) })
            .collect(),
    }
}
