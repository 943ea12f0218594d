//! The alternating-optimization loop, benchmark schemes, and the audit.
//!
//! One outer iteration updates the four blocks in order: offload ratios,
//! user scheduling, sensing covariances, trajectory. Every block update is
//! accepted only if the updated state passes the exact-expression audit
//! and does not raise the true objective (total user energy recomputed
//! from the state, never a surrogate optimum), so the objective sequence
//! is nonincreasing and every reported iterate is feasible. The loop stops
//! when the objective change falls below the configured tolerance or the
//! iteration cap is hit; a block that turns infeasible mid-run stops the
//! loop with the last feasible state and a flag in the trace.

mod audit;
mod init;
mod repair;

use std::time::Instant;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::config::ScenarioConfig;
use crate::model::energy::energy_report;
use crate::model::state::{BeamCovariance, SolutionState};
use crate::model::{channel, computing, dist2, propulsion, EveRegion, ModelError};
use crate::subproblems::{
    build_eligibility, solve_beamforming_sdp, solve_offload_lp, solve_scheduling_lp,
    solve_trajectory_sca, BeamCache, BeamformingRef, SubproblemError,
};

pub use audit::{audit_feasibility, AuditReport, FamilyViolation};
pub use init::initialize_state;

/// Failures surfaced before the loop can produce a feasible state.
#[derive(Debug, Error)]
pub enum OrchestratorError {
    /// The configuration admits no feasible starting point; the message
    /// names the first unsatisfiable constraint.
    #[error("initialization failed: {0}")]
    Init(String),
    #[error(transparent)]
    Subproblem(#[from] SubproblemError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Which quantities stay frozen during the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Full alternating optimization over all four blocks.
    Proposed,
    /// The flight path stays at its initialization.
    FixedTrajectory,
    /// Scheduling and offload ratios stay at a frozen heuristic split.
    FixedSchedulingOffload,
    /// No sensing signal at all: covariances pinned to zero.
    NoSensing,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::Proposed,
        Scheme::FixedTrajectory,
        Scheme::FixedSchedulingOffload,
        Scheme::NoSensing,
    ];

    /// Stable identifier used on the command line and in result files.
    pub fn id(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::FixedTrajectory => "bench1-fixed-trajectory",
            Scheme::FixedSchedulingOffload => "bench2-fixed-scheduling-offload",
            Scheme::NoSensing => "bench3-no-sensing",
        }
    }

    pub fn from_id(s: &str) -> Option<Scheme> {
        Scheme::ALL.into_iter().find(|sch| sch.id() == s)
    }

    fn runs_offload(self) -> bool {
        self != Scheme::FixedSchedulingOffload
    }

    fn runs_scheduling(self) -> bool {
        self != Scheme::FixedSchedulingOffload
    }

    fn runs_beamforming(self) -> bool {
        self != Scheme::NoSensing
    }

    fn runs_trajectory(self) -> bool {
        self != Scheme::FixedTrajectory
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

/// One block update inside an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: &'static str,
    /// "ok", "kept previous (...)", or "failed: ...".
    pub status: String,
    pub wall_s: f64,
}

/// One outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub m: usize,
    /// True objective after the iteration, joules.
    pub objective_j: f64,
    /// Worst audit violation after the iteration.
    pub audit_worst: f64,
    pub steps: Vec<StepRecord>,
}

/// Convergence bookkeeping for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct AoTrace {
    /// True objective of the initialized state, joules.
    pub initial_objective_j: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
    /// Set when a block failed mid-run and the loop stopped early.
    pub flagged: Option<String>,
}

impl AoTrace {
    /// Number of completed iterations.
    pub fn m(&self) -> usize {
        self.iterations.len()
    }

    /// Objective after the last completed iteration (initial if none).
    pub fn final_objective_j(&self) -> f64 {
        self.iterations.last().map_or(self.initial_objective_j, |it| it.objective_j)
    }
}

/// Audit bound below which a candidate state counts as feasible.
const ACCEPT_TOL: f64 = 1e-5;
/// Absolute slack (joules) when comparing candidate objectives.
const OBJ_SLACK: f64 = 1e-12;

/// Runs the alternating loop for a scheme until the objective change
/// drops to the configured tolerance or `max_iters` is reached.
///
/// `seed` fixes the covariance randomization, making reruns bit-identical.
pub fn run_algorithm1(
    cfg: &ScenarioConfig,
    scheme: Scheme,
    max_iters: usize,
    seed: u64,
) -> Result<(SolutionState, AoTrace), OrchestratorError> {
    let mut cfg = cfg.clone();
    if scheme == Scheme::NoSensing {
        // Without a sensing signal the perception floor is off.
        cfg.gamma_sen = 0.0;
    }
    let mut state = initialize_state(&cfg)?;
    match scheme {
        Scheme::NoSensing => force_dark(&mut state, &cfg)?,
        Scheme::FixedSchedulingOffload => freeze_schedule_and_split(&mut state, &cfg)?,
        _ => {}
    }
    if let Some(fv) = audit_feasibility(&state, &cfg).first_violated(ACCEPT_TOL) {
        return Err(OrchestratorError::Init(format!(
            "scheme setup violates the {} constraint family by {:.3e}",
            fv.family, fv.violation
        )));
    }

    let region = EveRegion::from_config(&cfg);
    let mut beam_cache = BeamCache::new(cfg.num_slots);
    let mut traj_warm: Option<(Vec<f64>, Vec<f64>, Vec<f64>)> = None;
    let mut obj = energy_report(&state, &cfg).total_user_j;
    let mut trace = AoTrace {
        initial_objective_j: obj,
        iterations: Vec::new(),
        converged: false,
        flagged: None,
    };

    for m in 1..=max_iters {
        let prev_obj = obj;
        let mut steps = Vec::new();
        let mut failed = false;

        if scheme.runs_offload() {
            failed |= !attempt("offload", &mut state, &mut obj, &cfg, &mut steps, &mut trace.flagged, |st| {
                let out = solve_offload_lp(&st.b, &st.w, &st.qs, &cfg)?;
                let mut cand = st.clone();
                cand.a = out.a;
                cand.slacks.eta = matrix_rows(&out.eta);
                Ok(cand)
            });
        }
        if !failed && scheme.runs_scheduling() {
            failed |= !attempt("scheduling", &mut state, &mut obj, &cfg, &mut steps, &mut trace.flagged, |st| {
                let mask = build_eligibility(&st.qs, &st.w, &cfg)?;
                let out = solve_scheduling_lp(&st.a, &st.b, &st.w, &st.qs, &mask, &cfg)?;
                let mut cand = st.clone();
                cand.a = out.a;
                cand.b = out.b;
                cand.slacks.eta = matrix_rows(&out.eta);
                Ok(cand)
            });
        }
        if !failed && scheme.runs_beamforming() {
            let cache = &mut beam_cache;
            let slot_seed = seed.wrapping_add(1009 * m as u64);
            failed |= !attempt("beamforming", &mut state, &mut obj, &cfg, &mut steps, &mut trace.flagged, |st| {
                let x_ref_w = st
                    .w
                    .iter()
                    .zip(&st.qs)
                    .map(|(w, &q)| {
                        channel::worst_case_ses_power(w, q, &region, &cfg)
                            .map(|p| p.max(0.0) + cfg.noise_s_w)
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                let ref_point = BeamformingRef { x_ref_w };
                let out =
                    solve_beamforming_sdp(&st.a, &st.b, &st.qs, &cfg, &ref_point, slot_seed, cache)?;
                let mut cand = st.clone();
                cand.w = out.wset;
                cand.beams = out.beams;
                cand.slacks.eta = matrix_rows(&out.eta);
                Ok(cand)
            });
        }
        if !failed && scheme.runs_trajectory() {
            let t0 = Instant::now();
            match solve_trajectory_sca(&state.a, &state.b, &state.w, &cfg, &state.qs, &mut traj_warm)
            {
                Ok(out) => {
                    let status = match repair::absorb_trajectory(&state, &out.qs, obj, &cfg) {
                        Some(got) => {
                            state = got.state;
                            obj = got.objective_j;
                            if got.damping == 0 {
                                "ok".to_string()
                            } else {
                                format!("ok (step damped {}x)", got.damping)
                            }
                        }
                        None => "kept previous (no feasible step)".to_string(),
                    };
                    steps.push(StepRecord {
                        step: "trajectory",
                        status,
                        wall_s: t0.elapsed().as_secs_f64(),
                    });
                }
                Err(e) => {
                    steps.push(StepRecord {
                        step: "trajectory",
                        status: format!("failed: {e}"),
                        wall_s: t0.elapsed().as_secs_f64(),
                    });
                    trace.flagged = Some(format!("trajectory: {e}"));
                    failed = true;
                }
            }
        }

        let audit_worst = audit_feasibility(&state, &cfg).worst();
        trace.iterations.push(IterationRecord { m, objective_j: obj, audit_worst, steps });
        if failed {
            break;
        }
        if (prev_obj - obj).abs() <= cfg.conv_tol {
            trace.converged = true;
            break;
        }
    }
    Ok((state, trace))
}

/// Runs one block update; the candidate replaces the state only when it
/// stays audit-feasible and does not raise the true objective. Returns
/// false when the block failed (loop must stop).
fn attempt<F>(
    label: &'static str,
    state: &mut SolutionState,
    obj: &mut f64,
    cfg: &ScenarioConfig,
    steps: &mut Vec<StepRecord>,
    flagged: &mut Option<String>,
    build: F,
) -> bool
where
    F: FnOnce(&SolutionState) -> Result<SolutionState, SubproblemError>,
{
    let t0 = Instant::now();
    let outcome = build(state);
    let wall_s = t0.elapsed().as_secs_f64();
    match outcome {
        Ok(cand) => {
            let status = if audit_feasibility(&cand, cfg).worst() > ACCEPT_TOL {
                "kept previous (audit)".to_string()
            } else {
                let cand_obj = energy_report(&cand, cfg).total_user_j;
                if cand_obj > *obj + OBJ_SLACK {
                    "kept previous (objective)".to_string()
                } else {
                    *state = cand;
                    *obj = cand_obj;
                    "ok".to_string()
                }
            };
            steps.push(StepRecord { step: label, status, wall_s });
            true
        }
        Err(e) => {
            steps.push(StepRecord { step: label, status: format!("failed: {e}"), wall_s });
            *flagged = Some(format!("{label}: {e}"));
            false
        }
    }
}

/// K x N matrix as per-user rows (diagnostic slack layout).
pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|k| (0..m.ncols()).map(|n| m[(k, n)]).collect()).collect()
}

/// Pins every covariance to zero and rebuilds schedule and ratios for the
/// beamless world.
fn force_dark(state: &mut SolutionState, cfg: &ScenarioConfig) -> Result<(), OrchestratorError> {
    state.w = (0..cfg.num_slots).map(|_| BeamCovariance::zeros(cfg.m())).collect();
    state.beams = vec![None; cfg.num_slots];
    let mask = build_eligibility(&state.qs, &state.w, cfg)?;
    state.b = init::nearest_eligible_schedule(&state.qs, &mask, cfg);
    let off = solve_offload_lp(&state.b, &state.w, &state.qs, cfg)?;
    state.a = off.a;
    state.slacks.eta = matrix_rows(&off.eta);
    Ok(())
}

/// Freezes scheduling to a round-robin of eligible users and the ratios
/// to an equal split over each user's active slots, capped by the slot
/// capacity at the frozen rates and scaled down if edge computing would
/// overrun the battery.
fn freeze_schedule_and_split(
    state: &mut SolutionState,
    cfg: &ScenarioConfig,
) -> Result<(), OrchestratorError> {
    let region = EveRegion::from_config(cfg);
    let mask = build_eligibility(&state.qs, &state.w, cfg)?;
    let mut b = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    for n in 0..cfg.num_slots {
        let turn = n % cfg.num_users;
        let pick = if mask.eligible(turn, n) {
            Some(turn)
        } else {
            (0..cfg.num_users).filter(|&k| mask.eligible(k, n)).min_by(|&i, &j| {
                dist2(state.qs[n], cfg.user_pos_m[i])
                    .partial_cmp(&dist2(state.qs[n], cfg.user_pos_m[j]))
                    .expect("finite distances")
            })
        };
        if let Some(k) = pick {
            b[(k, n)] = 1.0;
        }
    }

    let counts: Vec<usize> =
        (0..cfg.num_users).map(|k| (0..cfg.num_slots).filter(|&n| b[(k, n)] > 0.5).count()).collect();
    let mut a = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    for n in 0..cfg.num_slots {
        for k in 0..cfg.num_users {
            if b[(k, n)] > 0.5 {
                let rate = channel::offload_rate_hat(
                    state.qs[n],
                    cfg.user_pos_m[k],
                    &state.w[n],
                    &region,
                    true,
                    cfg,
                )?;
                let cap = computing::slot_offload_capacity(rate, cfg).min(1.0);
                a[(k, n)] = cap.min(1.0 / counts[k] as f64);
            }
        }
    }

    // Battery: edge computing must fit what flight and sensing leave over.
    let edge_j = cfg.cpu_eff
        * cfg.task_bits
        * cfg.cycles_per_bit_uav
        * cfg.cpu_freq_uav_hz
        * cfg.cpu_freq_uav_hz;
    let flight = propulsion::flight_energy(&state.qs, cfg);
    let sensing: f64 = state.w.iter().map(|w| cfg.slot_len_s * w.trace()).sum();
    let budget = (cfg.e_max_j - flight - sensing).max(0.0);
    let spend: f64 = a.iter().sum::<f64>() * edge_j;
    if spend > budget {
        let scale = if spend > 0.0 { budget / spend * (1.0 - 1e-12) } else { 0.0 };
        a.iter_mut().for_each(|v| *v *= scale);
    }
    state.b = b;
    state.a = a;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Small instance: short diagonal flight, two-point region grid.
    fn tiny_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.num_slots = 6;
        cfg.total_time_s = 6.0;
        cfg.uav_end_m = [28.0, 28.0];
        cfg.user_pos_m = vec![[10.0, 5.0], [15.0, 20.0], [5.0, 15.0], [20.0, 10.0]];
        cfg.eve_center_m = [60.0, 60.0];
        cfg.eve_grid_points = 2;
        cfg.validate().unwrap();
        cfg
    }

    #[test]
    fn scheme_ids_round_trip() {
        for scheme in Scheme::ALL {
            assert_eq!(Scheme::from_id(scheme.id()), Some(scheme));
            assert_eq!(scheme.to_string(), scheme.id());
        }
        assert_eq!(Scheme::from_id("bench4"), None);
    }

    #[test]
    fn infinite_tolerance_stops_after_one_iteration() {
        let mut cfg = tiny_cfg();
        cfg.conv_tol = f64::INFINITY;
        let (state, trace) = run_algorithm1(&cfg, Scheme::Proposed, 7, 11).unwrap();
        assert_eq!(trace.m(), 1);
        assert!(trace.converged, "{trace:#?}");
        assert!(trace.flagged.is_none());
        assert!(trace.final_objective_j() <= trace.initial_objective_j + 1e-9);
        assert!(trace.iterations[0].audit_worst <= 1e-5);
        assert!(audit_feasibility(&state, &cfg).worst() <= 1e-5);
    }

    #[test]
    fn objective_never_increases_across_iterations() {
        let mut cfg = tiny_cfg();
        cfg.conv_tol = 1e-9;
        let (_, trace) = run_algorithm1(&cfg, Scheme::Proposed, 2, 5).unwrap();
        let mut prev = trace.initial_objective_j;
        for it in &trace.iterations {
            assert!(
                it.objective_j <= prev + 1e-6 * trace.initial_objective_j,
                "iteration {} rose from {prev} to {}",
                it.m,
                it.objective_j
            );
            prev = it.objective_j;
        }
    }

    #[test]
    fn no_sensing_blocks_offloading_under_stock_secrecy() {
        let mut cfg = tiny_cfg();
        cfg.conv_tol = 0.001;
        let (state, trace) = run_algorithm1(&cfg, Scheme::NoSensing, 5, 3).unwrap();
        // Unjammed eavesdropping keeps every pair ineligible, so every
        // user computes locally and the objective is the local energy.
        assert!(state.w.iter().all(|w| w.trace() == 0.0));
        for k in 0..cfg.num_users {
            assert!(state.offload_total(k) <= 0.05, "user {k} offloads");
        }
        let report = energy_report(&state, &cfg);
        assert!((report.total_user_j - 8.0).abs() < 1e-9);
        assert!(trace.converged);
    }

    #[test]
    fn fixed_split_scheme_keeps_its_ratios() {
        let mut cfg = tiny_cfg();
        cfg.conv_tol = f64::INFINITY;
        let (state, trace) =
            run_algorithm1(&cfg, Scheme::FixedSchedulingOffload, 4, 9).unwrap();
        assert!(trace.converged, "{trace:#?}");
        // Every scheduled user splits its task evenly over its slots,
        // capped by slot capacity; ratios stay put through the run.
        for k in 0..cfg.num_users {
            let slots: Vec<usize> =
                (0..cfg.num_slots).filter(|&n| state.b[(k, n)] > 0.5).collect();
            for &n in &slots {
                assert!(state.a[(k, n)] <= 1.0 / slots.len() as f64 + 1e-12);
            }
        }
        assert!(audit_feasibility(&state, &cfg).worst() <= 1e-5);
    }

    #[test]
    fn fixed_trajectory_scheme_never_moves_the_path() {
        let mut cfg = tiny_cfg();
        cfg.conv_tol = f64::INFINITY;
        let init_path = initialize_state(&cfg).unwrap().qs;
        let (state, _) = run_algorithm1(&cfg, Scheme::FixedTrajectory, 4, 2).unwrap();
        assert_eq!(state.qs, init_path);
    }
}
