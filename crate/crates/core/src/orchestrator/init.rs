//! Feasible starting point: trajectory, beams, schedule, and ratios.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::ScenarioConfig;
use crate::model::state::{BeamCovariance, SlackBundle, SolutionState};
use crate::model::steering::{steering_vector, ArrayDims};
use crate::model::{channel, dist2, slant2, EveRegion};
use crate::subproblems::{build_eligibility, solve_offload_lp, EligibilityMask};

use super::{audit_feasibility, matrix_rows, OrchestratorError};

/// Builds a state that passes the full feasibility audit, or explains
/// which constraint cannot be met.
///
/// The trajectory is the straight start-to-end line at constant speed
/// (with `init_tour`, a closed tour through the users). Each slot gets a
/// beam aimed at the uncertainty region's center, scaled to the smallest
/// power that satisfies the perception floor, then raised (within the
/// transmit cap) until the slot's nearest user clears all three
/// admissibility thresholds. Scheduling takes the nearest eligible user
/// per slot, and the ratios come from a feasible offload split.
pub fn initialize_state(cfg: &ScenarioConfig) -> Result<SolutionState, OrchestratorError> {
    cfg.validate().map_err(|e| OrchestratorError::Init(e.to_string()))?;
    let qs = initial_trajectory(cfg);
    let (w, beams) = initial_beams(&qs, cfg)?;
    let mask = build_eligibility(&qs, &w, cfg)?;
    let b = nearest_eligible_schedule(&qs, &mask, cfg);
    let off = solve_offload_lp(&b, &w, &qs, cfg)
        .map_err(|e| OrchestratorError::Init(format!("initial offload split failed: {e}")))?;
    let state = SolutionState {
        a: off.a,
        b,
        w,
        beams,
        qs,
        slacks: SlackBundle { eta: matrix_rows(&off.eta), ..SlackBundle::default() },
    };
    let report = audit_feasibility(&state, cfg);
    if let Some(fv) = report.first_violated(1e-5) {
        return Err(OrchestratorError::Init(format!(
            "initial state violates the {} constraint family by {:.3e}",
            fv.family, fv.violation
        )));
    }
    Ok(state)
}

/// N positions: a constant-speed straight line, or a closed user tour
/// when the config asks for one.
pub(crate) fn initial_trajectory(cfg: &ScenarioConfig) -> Vec<[f64; 2]> {
    let n = cfg.num_slots;
    if !cfg.init_tour {
        let (s, e) = (cfg.uav_start_m, cfg.uav_end_m);
        return (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                [s[0] + t * (e[0] - s[0]), s[1] + t * (e[1] - s[1])]
            })
            .collect();
    }
    let reach = (n - 1) as f64 * cfg.slot_len_s * cfg.v_max_mps;
    // Users in counterclockwise order around their centroid, starting from
    // the start point's bearing, then back toward the end point.
    let k = cfg.user_pos_m.len() as f64;
    let centroid = cfg
        .user_pos_m
        .iter()
        .fold([0.0, 0.0], |c, u| [c[0] + u[0] / k, c[1] + u[1] / k]);
    let bearing = |p: [f64; 2]| (p[1] - centroid[1]).atan2(p[0] - centroid[0]);
    let start_bearing = bearing(cfg.uav_start_m);
    let mut ordered = cfg.user_pos_m.clone();
    ordered.sort_by(|&u, &v| {
        let key = |p| {
            let mut d: f64 = bearing(p) - start_bearing;
            while d < 0.0 {
                d += std::f64::consts::TAU;
            }
            d
        };
        key(u).partial_cmp(&key(v)).expect("finite bearings")
    });
    let mut waypoints = Vec::with_capacity(ordered.len() + 2);
    waypoints.push(cfg.uav_start_m);
    waypoints.extend(ordered);
    waypoints.push(cfg.uav_end_m);

    // Shrink the interior waypoints toward the start until the tour fits
    // the speed budget; the start-to-end chord fits by config validation.
    if polyline_length(&waypoints) > reach {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if polyline_length(&shrunk(&waypoints, cfg.uav_start_m, mid)) > reach {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        waypoints = shrunk(&waypoints, cfg.uav_start_m, lo);
    }
    sample_polyline(&waypoints, n)
}

fn polyline_length(pts: &[[f64; 2]]) -> f64 {
    pts.windows(2).map(|w| dist2(w[0], w[1]).sqrt()).sum()
}

/// Interior waypoints pulled toward `anchor` by factor `t`; both ends stay.
fn shrunk(pts: &[[f64; 2]], anchor: [f64; 2], t: f64) -> Vec<[f64; 2]> {
    let last = pts.len() - 1;
    pts.iter()
        .enumerate()
        .map(|(i, &p)| {
            if i == 0 || i == last {
                p
            } else {
                [anchor[0] + t * (p[0] - anchor[0]), anchor[1] + t * (p[1] - anchor[1])]
            }
        })
        .collect()
}

/// N points at equal arc spacing along the polyline.
fn sample_polyline(pts: &[[f64; 2]], n: usize) -> Vec<[f64; 2]> {
    let total = polyline_length(pts);
    if total <= 1e-12 {
        return vec![pts[0]; n];
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut target = total * i as f64 / (n - 1) as f64;
        let mut point = *pts.last().expect("nonempty polyline");
        for w in pts.windows(2) {
            let seg = dist2(w[0], w[1]).sqrt();
            if target <= seg || seg <= 0.0 {
                let t = if seg > 0.0 { target / seg } else { 0.0 };
                point = [w[0][0] + t * (w[1][0] - w[0][0]), w[0][1] + t * (w[1][1] - w[0][1])];
                break;
            }
            target -= seg;
        }
        out.push(point);
    }
    out
}

/// Per-slot center-aimed beams: the perception-minimal power, raised to
/// the nearest user's admissibility point when the transmit cap allows.
pub(crate) fn initial_beams(
    qs: &[[f64; 2]],
    cfg: &ScenarioConfig,
) -> Result<(Vec<BeamCovariance>, Vec<Option<DVector<Complex64>>>), OrchestratorError> {
    let region = EveRegion::from_config(cfg);
    let dims = ArrayDims::from(cfg);
    let m_f = cfg.m() as f64;
    let mut wset = Vec::with_capacity(qs.len());
    let mut beams = Vec::with_capacity(qs.len());

    for (n, &q) in qs.iter().enumerate() {
        let aim = steering_vector(q, cfg.eve_center_m, cfg.altitude_m, dims)
            .map_err(|e| OrchestratorError::Init(format!("slot {n}: {e}")))?;
        let unit = DVector::from_iterator(cfg.m(), aim.entries.iter().copied());
        let unit_cov = BeamCovariance::from_beam(&unit);
        let gains: Vec<f64> = region
            .samples
            .iter()
            .map(|&q_e| channel::beampattern_gain(&unit_cov, q, q_e, cfg).max(0.0))
            .collect();

        // Smallest scaling of the aimed beam that meets the perception
        // floor at every region sample.
        let mut rho_sen = 0.0f64;
        if cfg.gamma_sen > 0.0 {
            for (e, &q_e) in region.samples.iter().enumerate() {
                let bound = slant2(q, q_e, cfg.altitude_m) * cfg.gamma_sen;
                if gains[e] <= 0.0 {
                    return Err(OrchestratorError::Init(format!(
                        "slot {n}: the center-aimed beam has no gain toward a region \
                         sample, so the perception floor cannot be met"
                    )));
                }
                rho_sen = rho_sen.max(bound / gains[e]);
            }
            if rho_sen * m_f > cfg.p_max_w * (1.0 + 1e-12) {
                return Err(OrchestratorError::Init(format!(
                    "slot {n}: the perception floor needs {:.3} W of sensing power but \
                     the transmit cap is {:.3} W",
                    rho_sen * m_f,
                    cfg.p_max_w
                )));
            }
        }

        // Raise toward the nearest user's secrecy jamming floor; keep the
        // raise only if the cap and the user's own service floor allow it.
        let near = (0..cfg.num_users)
            .min_by(|&i, &j| {
                dist2(q, cfg.user_pos_m[i])
                    .partial_cmp(&dist2(q, cfg.user_pos_m[j]))
                    .expect("finite distances")
            })
            .expect("at least one user");
        let mut rho_eve = rho_sen;
        for (e, &q_e) in region.samples.iter().enumerate() {
            let need = cfg.user_tx_power_w * cfg.ref_gain
                / (dist2(cfg.user_pos_m[near], q_e) * cfg.gamma_e)
                - cfg.noise_e_w;
            if need > 0.0 {
                if gains[e] <= 0.0 {
                    rho_eve = f64::INFINITY;
                } else {
                    rho_eve =
                        rho_eve.max(need * slant2(q, q_e, cfg.altitude_m) / (cfg.ref_gain * gains[e]));
                }
            }
        }
        let mut rho = rho_sen;
        if rho_eve.is_finite() && rho_eve * m_f <= cfg.p_max_w {
            let scaled = BeamCovariance(&unit_cov.0 * Complex64::new(rho_eve, 0.0));
            let sinr = channel::user_sinr(q, cfg.user_pos_m[near], &scaled, &region, true, cfg)
                .expect("region built from config is never empty");
            if sinr >= cfg.gamma_s {
                rho = rho_eve;
            }
        }

        if rho > 0.0 {
            let beam = DVector::from_iterator(cfg.m(), unit.iter().map(|&z| z * rho.sqrt()));
            wset.push(BeamCovariance::from_beam(&beam));
            beams.push(Some(beam));
        } else {
            wset.push(BeamCovariance::zeros(cfg.m()));
            beams.push(None);
        }
    }
    Ok((wset, beams))
}

/// One user per slot: the nearest among the eligible, none when the slot
/// has no candidate.
pub(crate) fn nearest_eligible_schedule(
    qs: &[[f64; 2]],
    mask: &EligibilityMask,
    cfg: &ScenarioConfig,
) -> DMatrix<f64> {
    let mut b = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    for (n, &q) in qs.iter().enumerate() {
        let pick = (0..cfg.num_users).filter(|&k| mask.eligible(k, n)).min_by(|&i, &j| {
            dist2(q, cfg.user_pos_m[i])
                .partial_cmp(&dist2(q, cfg.user_pos_m[j]))
                .expect("finite distances")
        });
        if let Some(k) = pick {
            b[(k, n)] = 1.0;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn coincident_endpoints_hover_in_place() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.uav_start_m = [120.0, 30.0];
        cfg.uav_end_m = [120.0, 30.0];
        let qs = initial_trajectory(&cfg);
        assert!(qs.iter().all(|&q| q == [120.0, 30.0]));
    }

    #[test]
    fn straight_line_covers_the_diagonal_at_constant_step() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        let state = initialize_state(&cfg).unwrap();
        assert_eq!(state.qs[0], [0.0, 0.0]);
        assert_eq!(state.qs[39], [200.0, 200.0]);
        let expected = 200.0 * std::f64::consts::SQRT_2 / 39.0;
        for w in state.qs.windows(2) {
            let step = dist2(w[0], w[1]).sqrt();
            assert_relative_eq!(step, expected, max_relative = 1e-9);
            assert!(step <= cfg.v_max_mps * cfg.slot_len_s);
        }
        assert!(audit_feasibility(&state, &cfg).worst() <= 1e-5);
    }

    #[test]
    fn closed_tour_passes_every_user_and_returns() {
        let cfg = ScenarioConfig::preset("scenario3").unwrap();
        let qs = initial_trajectory(&cfg);
        assert_eq!(qs[0], cfg.uav_start_m);
        assert_eq!(qs[39], cfg.uav_start_m);
        let cap = cfg.v_max_mps * cfg.slot_len_s;
        for w in qs.windows(2) {
            assert!(dist2(w[0], w[1]).sqrt() <= cap * (1.0 + 1e-9));
        }
        for &user in &cfg.user_pos_m {
            let closest = qs.iter().map(|&q| dist2(q, user).sqrt()).fold(f64::INFINITY, f64::min);
            assert!(closest <= cap, "user {user:?} missed by {closest:.2} m");
        }
    }

    #[test]
    fn oversized_tour_shrinks_to_the_speed_budget() {
        let mut cfg = ScenarioConfig::preset("scenario3").unwrap();
        cfg.v_max_mps = 9.0;
        let qs = initial_trajectory(&cfg);
        let cap = cfg.v_max_mps * cfg.slot_len_s;
        for w in qs.windows(2) {
            assert!(dist2(w[0], w[1]).sqrt() <= cap * (1.0 + 1e-9));
        }
        assert_eq!(qs[0], cfg.uav_start_m);
        assert_eq!(qs[39], cfg.uav_start_m);
    }

    #[test]
    fn fresh_initialization_passes_the_audit_on_every_preset() {
        for name in ["scenario1", "scenario2", "scenario3"] {
            let cfg = ScenarioConfig::preset(name).unwrap();
            let state = initialize_state(&cfg).unwrap();
            let report = audit_feasibility(&state, &cfg);
            assert!(report.worst() <= 1e-5, "{name}: worst {:.3e}", report.worst());
            // The aimed beams make at least some slots schedulable.
            assert!(state.b.iter().sum::<f64>() > 0.0, "{name}: empty schedule");
        }
    }

    #[test]
    fn impossible_perception_floor_names_the_problem() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.gamma_sen = 1.0;
        let err = initialize_state(&cfg).unwrap_err().to_string();
        assert!(err.contains("perception floor"), "{err}");
        assert!(err.contains("transmit cap"), "{err}");
    }
}
