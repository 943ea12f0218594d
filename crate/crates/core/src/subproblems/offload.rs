//! Offload-ratio block: a linear program over the split ratios.
//!
//! With scheduling, beams, and trajectory fixed, each user's energy is
//! affine in its ratios: every offloaded fraction trades the local
//! computing energy for transmit energy at the slot's uplink rate. The
//! feasible set is a box (slot capacity), a per-user simplex cap (whole
//! task at most once), the UAV battery budget, and optionally the local
//! task deadline.

use nalgebra::DMatrix;

use crate::config::ScenarioConfig;
use crate::conic::{solve_conic, LinExpr, ProblemBuilder, SolveStatus};
use crate::model::region::EveRegion;
use crate::model::state::BeamCovariance;
use crate::model::{channel, computing, propulsion};

use super::SubproblemError;

/// Result of the offload LP.
#[derive(Debug, Clone)]
pub struct OffloadOutcome {
    /// Offload ratios, `K x N`; zero on unscheduled pairs.
    pub a: DMatrix<f64>,
    /// Per-pair offload energies (the epigraph values), joules.
    pub eta: DMatrix<f64>,
    /// Total user energy at the returned ratios, joules.
    pub objective: f64,
}

struct ActivePair {
    user: usize,
    slot: usize,
    /// Offload energy per unit ratio, joules.
    offload_j: f64,
    /// Upper bound from the slot time budget and the per-slot cap.
    upper: f64,
}

/// Minimizes total user energy over the offload ratios for a fixed
/// schedule `b`, beams, and trajectory.
///
/// Errors with an explanation when the battery budget is already exceeded
/// by flight plus sensing, or when the local-computing deadline (if
/// enforced) cannot be met with the scheduled slots.
pub fn solve_offload_lp(
    b: &DMatrix<f64>,
    wset: &[BeamCovariance],
    qs: &[[f64; 2]],
    cfg: &ScenarioConfig,
) -> Result<OffloadOutcome, SubproblemError> {
    let region = EveRegion::from_config(cfg);
    let local_j = cfg.cpu_eff
        * cfg.task_bits
        * cfg.cycles_per_bit_user
        * cfg.cpu_freq_user_hz
        * cfg.cpu_freq_user_hz;
    let edge_j = cfg.cpu_eff
        * cfg.task_bits
        * cfg.cycles_per_bit_uav
        * cfg.cpu_freq_uav_hz
        * cfg.cpu_freq_uav_hz;

    let mut pairs = Vec::new();
    for n in 0..cfg.num_slots {
        for k in 0..cfg.num_users {
            if b[(k, n)] < 0.5 {
                continue;
            }
            let rate = channel::offload_rate_hat(
                qs[n],
                cfg.user_pos_m[k],
                &wset[n],
                &region,
                true,
                cfg,
            )?;
            let upper = computing::slot_offload_capacity(rate, cfg).min(1.0);
            let offload_j = if rate > 0.0 {
                cfg.user_tx_power_w * cfg.task_bits / (cfg.bandwidth_hz * rate)
            } else {
                0.0
            };
            pairs.push(ActivePair { user: k, slot: n, offload_j, upper });
        }
    }

    let flight_j = propulsion::flight_energy(qs, cfg);
    let sensing_j: f64 = wset.iter().map(|w| cfg.slot_len_s * w.trace()).sum();
    let compute_budget = cfg.e_max_j - flight_j - sensing_j;
    if compute_budget < 0.0 {
        return Err(SubproblemError::Infeasible(format!(
            "battery budget: flight {flight_j:.1} J plus sensing {sensing_j:.1} J \
             already exceed the {:.1} J limit",
            cfg.e_max_j
        )));
    }

    // Deadline pre-check: even offloading at every scheduled slot's cap
    // must reach the required fraction.
    if cfg.enforce_deadline {
        let t_full = cfg.task_bits * cfg.cycles_per_bit_user / cfg.cpu_freq_user_hz;
        let required = 1.0 - cfg.total_time_s / t_full;
        if required > 0.0 {
            for k in 0..cfg.num_users {
                let reachable: f64 = pairs
                    .iter()
                    .filter(|p| p.user == k)
                    .map(|p| p.upper)
                    .sum();
                if reachable < required {
                    return Err(SubproblemError::Infeasible(format!(
                        "deadline: user {k} must offload at least {required:.3} of its task \
                         but the scheduled slots carry at most {reachable:.3}"
                    )));
                }
            }
        }
    }

    let mut pb = ProblemBuilder::new();
    let alpha: Vec<usize> = pairs
        .iter()
        .map(|p| pb.var(format!("alpha_u{}_n{}", p.user, p.slot)))
        .collect();

    // Objective: sum of user energies, constants dropped. Each unit of
    // ratio removes local_j and adds the pair's transmit energy.
    let mut obj = LinExpr::constant(0.0);
    for (p, &v) in pairs.iter().zip(&alpha) {
        obj = obj.plus(&LinExpr::term(v, p.offload_j - local_j));
    }
    pb.minimize(obj);

    for (p, &v) in pairs.iter().zip(&alpha) {
        pb.require_ge0(LinExpr::var(v));
        pb.require_le(LinExpr::var(v), LinExpr::constant(p.upper));
    }
    for k in 0..cfg.num_users {
        let vars: Vec<usize> = pairs
            .iter()
            .zip(&alpha)
            .filter(|(p, _)| p.user == k)
            .map(|(_, &v)| v)
            .collect();
        if vars.is_empty() {
            continue;
        }
        let total = vars
            .iter()
            .fold(LinExpr::constant(0.0), |e, &v| e.plus(&LinExpr::var(v)));
        pb.require_le(total.clone(), LinExpr::constant(1.0));
        if cfg.enforce_deadline {
            let t_full = cfg.task_bits * cfg.cycles_per_bit_user / cfg.cpu_freq_user_hz;
            let required = 1.0 - cfg.total_time_s / t_full;
            if required > 0.0 {
                pb.require_le(LinExpr::constant(required), total);
            }
        }
    }
    // Battery: edge computing for all offloaded bits fits what flight and
    // sensing left over.
    let spend = alpha
        .iter()
        .fold(LinExpr::constant(0.0), |e, &v| e.plus(&LinExpr::term(v, edge_j)));
    pb.require_le(spend, LinExpr::constant(compute_budget));

    let problem = pb.build().expect("offload LP shapes are consistent");
    let sol = solve_conic(&problem, 1e-8, 200_000);
    let tolerable =
        sol.primal_residual.max(sol.dual_residual).max(sol.gap.abs()) <= 1e-6;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => {
            return Err(SubproblemError::Infeasible(
                "offload ratios: deadline and battery budget cannot hold together \
                 with the current schedule"
                    .into(),
            ));
        }
        _ if tolerable => {}
        other => {
            return Err(SubproblemError::Accuracy(format!(
                "offload LP stopped with {other:?} at residuals {:.2e}/{:.2e}",
                sol.primal_residual, sol.dual_residual
            )));
        }
    }

    let mut a = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    let mut eta = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    for (p, &v) in pairs.iter().zip(&alpha) {
        let val = sol.x[v].clamp(0.0, p.upper);
        a[(p.user, p.slot)] = val;
        eta[(p.user, p.slot)] = val * p.offload_j;
    }
    let objective = (0..cfg.num_users)
        .map(|k| {
            let offloaded: f64 = (0..cfg.num_slots).map(|n| a[(k, n)]).sum();
            local_j * (1.0 - offloaded)
                + (0..cfg.num_slots).map(|n| eta[(k, n)]).sum::<f64>()
        })
        .sum();
    Ok(OffloadOutcome { a, eta, objective })
}
