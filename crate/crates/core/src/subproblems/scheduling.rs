//! Scheduling block: relaxed assignment LP plus rounding and repair.
//!
//! With the ratios fixed, at most one user per slot, and the indicator
//! relaxed to [0, 1] on eligible pairs only, the problem is a plain LP:
//! the hard thresholds were folded into the eligibility mask and the slot
//! time limit divides out of the indicator on active pairs. Rounding picks
//! the strongest fractional candidate per slot; a repair pass then
//! deactivates the least valuable slots until the whole-task and battery
//! limits hold, the ratios are re-optimized for the rounded schedule, and
//! the incoming schedule is kept whenever it scores better.

use nalgebra::DMatrix;

use crate::config::ScenarioConfig;
use crate::conic::{solve_conic, LinExpr, ProblemBuilder, SolveStatus};
use crate::model::region::EveRegion;
use crate::model::state::BeamCovariance;
use crate::model::{channel, computing, energy, propulsion};

use super::eligibility::EligibilityMask;
use super::offload::solve_offload_lp;
use super::SubproblemError;

/// Result of the scheduling step.
#[derive(Debug, Clone)]
pub struct SchedulingOutcome {
    /// Binary schedule, `K x N`.
    pub b: DMatrix<f64>,
    /// Ratios re-optimized for `b`.
    pub a: DMatrix<f64>,
    /// Offload energies for (`a`, `b`), joules.
    pub eta: DMatrix<f64>,
    /// Total user energy at the returned pair, joules.
    pub objective: f64,
    /// Fractional relaxation values, for diagnostics.
    pub relaxed: DMatrix<f64>,
}

struct Candidate {
    user: usize,
    slot: usize,
    alpha: f64,
    /// Objective change per unit indicator: transmit minus saved local
    /// energy, joules (negative is good).
    coef: f64,
}

/// Solves the relaxed assignment problem and returns a binary schedule
/// that never scores worse than the incoming one.
pub fn solve_scheduling_lp(
    a_in: &DMatrix<f64>,
    b_in: &DMatrix<f64>,
    wset: &[BeamCovariance],
    qs: &[[f64; 2]],
    mask: &EligibilityMask,
    cfg: &ScenarioConfig,
) -> Result<SchedulingOutcome, SubproblemError> {
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

    // Admissible pairs: eligible, and the fixed ratio fits the slot once
    // the indicator divides out of the time limit.
    let mut cands = Vec::new();
    for n in 0..cfg.num_slots {
        for k in 0..cfg.num_users {
            if !mask.eligible(k, n) {
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
            let cap = computing::slot_offload_capacity(rate, cfg).min(1.0);
            let alpha = a_in[(k, n)];
            if alpha > cap + 1e-9 {
                continue;
            }
            let coef = if alpha > 0.0 {
                alpha * (cfg.user_tx_power_w * cfg.task_bits / (cfg.bandwidth_hz * rate)
                    - local_j)
            } else {
                0.0
            };
            cands.push(Candidate { user: k, slot: n, alpha, coef });
        }
    }

    let mut relaxed = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    let mut b_cand = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    if !cands.is_empty() {
        let mut pb = ProblemBuilder::new();
        let theta: Vec<usize> = cands
            .iter()
            .map(|c| pb.var(format!("theta_u{}_n{}", c.user, c.slot)))
            .collect();
        let mut obj = LinExpr::constant(0.0);
        for (c, &v) in cands.iter().zip(&theta) {
            obj = obj.plus(&LinExpr::term(v, c.coef));
            pb.require_ge0(LinExpr::var(v));
            pb.require_le(LinExpr::var(v), LinExpr::constant(1.0));
        }
        pb.minimize(obj);
        for n in 0..cfg.num_slots {
            let slot_sum = cands
                .iter()
                .zip(&theta)
                .filter(|(c, _)| c.slot == n)
                .fold(LinExpr::constant(0.0), |e, (_, &v)| e.plus(&LinExpr::var(v)));
            if !slot_sum.terms.is_empty() {
                pb.require_le(slot_sum, LinExpr::constant(1.0));
            }
        }
        for k in 0..cfg.num_users {
            let task_sum = cands
                .iter()
                .zip(&theta)
                .filter(|(c, _)| c.user == k && c.alpha > 0.0)
                .fold(LinExpr::constant(0.0), |e, (c, &v)| {
                    e.plus(&LinExpr::term(v, c.alpha))
                });
            if !task_sum.terms.is_empty() {
                pb.require_le(task_sum, LinExpr::constant(1.0));
            }
        }
        let spend = cands
            .iter()
            .zip(&theta)
            .fold(LinExpr::constant(0.0), |e, (c, &v)| {
                e.plus(&LinExpr::term(v, c.alpha * edge_j))
            });
        pb.require_le(spend, LinExpr::constant(compute_budget));

        let problem = pb.build().expect("scheduling LP shapes are consistent");
        let sol = solve_conic(&problem, 1e-9, 200_000);
        match sol.status {
            SolveStatus::Optimal => {}
            SolveStatus::PrimalInfeasible => {
                return Err(SubproblemError::Infeasible(
                    "scheduling relaxation admits no point under the battery budget".into(),
                ));
            }
            other => {
                return Err(SubproblemError::Accuracy(format!(
                    "scheduling LP stopped with {other:?} at residuals {:.2e}/{:.2e}",
                    sol.primal_residual, sol.dual_residual
                )));
            }
        }
        for (c, &v) in cands.iter().zip(&theta) {
            relaxed[(c.user, c.slot)] = sol.x[v].clamp(0.0, 1.0);
        }

        // Rounding: strongest fractional candidate per slot, ties to the
        // smaller user index.
        for n in 0..cfg.num_slots {
            let mut best: Option<(usize, f64)> = None;
            for k in 0..cfg.num_users {
                let frac = relaxed[(k, n)];
                if frac > 1e-6 && best.map_or(true, |(_, bf)| frac > bf) {
                    best = Some((k, frac));
                }
            }
            if let Some((k, _)) = best {
                b_cand[(k, n)] = 1.0;
            }
        }
        repair_schedule(&mut b_cand, &cands, compute_budget, edge_j, cfg);
    }

    // Score both schedules with ratios re-optimized for the candidate.
    let cand = solve_offload_lp(&b_cand, wset, qs, cfg)?;
    let incoming_obj = fixed_ratio_objective(a_in, b_in, wset, qs, &region, cfg);
    if cand.objective <= incoming_obj {
        Ok(SchedulingOutcome {
            b: b_cand,
            a: cand.a,
            eta: cand.eta,
            objective: cand.objective,
            relaxed,
        })
    } else {
        let keep = solve_offload_lp(b_in, wset, qs, cfg)?;
        Ok(SchedulingOutcome {
            b: b_in.clone(),
            a: keep.a,
            eta: keep.eta,
            objective: keep.objective,
            relaxed,
        })
    }
}

/// Deactivates least valuable slots until the per-user whole-task limit
/// and the battery budget hold for the binary schedule.
fn repair_schedule(
    b: &mut DMatrix<f64>,
    cands: &[Candidate],
    compute_budget: f64,
    edge_j: f64,
    cfg: &ScenarioConfig,
) {
    let alpha_of = |k: usize, n: usize| {
        cands
            .iter()
            .find(|c| c.user == k && c.slot == n)
            .map_or(0.0, |c| c.alpha)
    };
    let benefit_of = |k: usize, n: usize| {
        cands
            .iter()
            .find(|c| c.user == k && c.slot == n)
            .map_or(0.0, |c| -c.coef)
    };
    // Whole-task limit per user.
    for k in 0..cfg.num_users {
        loop {
            let total: f64 =
                (0..cfg.num_slots).map(|n| b[(k, n)] * alpha_of(k, n)).sum();
            if total <= 1.0 + 1e-12 {
                break;
            }
            let drop = (0..cfg.num_slots)
                .filter(|&n| b[(k, n)] > 0.5 && alpha_of(k, n) > 0.0)
                .min_by(|&x, &y| {
                    benefit_of(k, x).partial_cmp(&benefit_of(k, y)).unwrap()
                })
                .expect("violated limit implies an active slot");
            b[(k, drop)] = 0.0;
        }
    }
    // Battery budget.
    loop {
        let spend: f64 = (0..cfg.num_users)
            .flat_map(|k| (0..cfg.num_slots).map(move |n| (k, n)))
            .map(|(k, n)| b[(k, n)] * alpha_of(k, n) * edge_j)
            .sum();
        if spend <= compute_budget + 1e-9 {
            break;
        }
        let drop = (0..cfg.num_users)
            .flat_map(|k| (0..cfg.num_slots).map(move |n| (k, n)))
            .filter(|&(k, n)| b[(k, n)] > 0.5 && alpha_of(k, n) > 0.0)
            .min_by(|&x, &y| {
                benefit_of(x.0, x.1).partial_cmp(&benefit_of(y.0, y.1)).unwrap()
            })
            .expect("violated budget implies an active slot");
        b[(drop.0, drop.1)] = 0.0;
    }
}

/// Total user energy at fixed ratios and schedule.
fn fixed_ratio_objective(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    wset: &[BeamCovariance],
    qs: &[[f64; 2]],
    region: &EveRegion,
    cfg: &ScenarioConfig,
) -> f64 {
    let mut rates = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    for n in 0..cfg.num_slots {
        for k in 0..cfg.num_users {
            if b[(k, n)] > 0.5 {
                rates[(k, n)] = channel::offload_rate_hat(
                    qs[n],
                    cfg.user_pos_m[k],
                    &wset[n],
                    region,
                    true,
                    cfg,
                )
                .expect("region from config is nonempty");
            }
        }
    }
    energy::user_energy(a, b, &rates, cfg)
        .iter()
        .map(|u| u.total_j)
        .sum()
}
