//! Linearizations shared by the convex subproblems.
//!
//! Every surrogate here is a global under-estimator of the quantity it
//! replaces (rates, kinematic slack) or an over-estimator of what it must
//! dominate, and touches the original function at the expansion point. That
//! one-sidedness is what makes each solved iterate feasible for the
//! original problem and the outer objective monotone.

use std::f64::consts::LN_2;

use nalgebra::DMatrix;

use crate::config::ScenarioConfig;
use crate::model::region::EveRegion;
use crate::model::state::SolutionState;
use crate::model::steering::{steering_vector, ArrayDims, SteeringVector};
use crate::model::{channel, ModelError};

/// Frozen expansion-point data consumed by the beamforming and trajectory
/// subproblems. Built once per outer iteration from the current iterate.
#[derive(Debug, Clone)]
pub struct SurrogateCoeffs {
    /// Per-slot interference-plus-noise at the UAV receiver at the
    /// expansion point, watts. Noise-only on idle slots.
    pub x_ref_w: Vec<f64>,
    /// Per-slot worst-case round-trip interference at the expansion point,
    /// watts. Zero on idle slots.
    pub d_se_ref: Vec<f64>,
    /// Expansion trajectory, metres.
    pub q_ref_m: Vec<[f64; 2]>,
    /// Per-slot induced-power slack at the expansion trajectory
    /// (dimensionless, 1.0 while hovering).
    pub v2_ref: Vec<f64>,
    /// Receive steering toward the scheduled user, per slot.
    pub a_rk: Vec<Option<SteeringVector>>,
    /// Receive steering toward each region sample, per active slot.
    pub a_re: Vec<Vec<SteeringVector>>,
    /// Transmit steering toward each region sample, per active slot. Equal
    /// entrywise to the receive vectors because the same aperture serves
    /// both directions.
    pub a_te: Vec<Vec<SteeringVector>>,
    /// Frozen round-trip numerators `rcs * ref_gain * M * a_T^H W a_T` per
    /// slot and region sample, watt m^4. Dividing by the fourth power of
    /// the slant distance recovers the interference power.
    pub z1: Vec<Vec<f64>>,
    /// Uplink numerator `P_u * ref_gain * M` per slot, watt m^2.
    pub z2: Vec<f64>,
    /// Normalized offload volume `theta * alpha * D / B` per user and
    /// slot, bit/Hz.
    pub c: DMatrix<f64>,
}

impl SurrogateCoeffs {
    /// Freezes all expansion-point data at the given iterate.
    pub fn build(
        state: &SolutionState,
        region: &EveRegion,
        cfg: &ScenarioConfig,
    ) -> Result<Self, ModelError> {
        let n = cfg.num_slots;
        let k_users = cfg.num_users;
        let dims = ArrayDims::from(cfg);
        let m = cfg.m() as f64;

        let mut x_ref_w = vec![cfg.noise_s_w; n];
        let mut d_se_ref = vec![0.0; n];
        let mut v2_ref = vec![1.0; n];
        let mut a_rk = vec![None; n];
        let mut a_re: Vec<Vec<SteeringVector>> = vec![Vec::new(); n];
        let mut a_te: Vec<Vec<SteeringVector>> = vec![Vec::new(); n];
        let mut z1: Vec<Vec<f64>> = vec![Vec::new(); n];
        let z2 = vec![cfg.user_tx_power_w * cfg.ref_gain * m; n];
        let mut c = DMatrix::zeros(k_users, n);

        for slot in 0..n {
            let q_s = state.qs[slot];
            if slot + 1 < n {
                let dq = [
                    state.qs[slot + 1][0] - q_s[0],
                    state.qs[slot + 1][1] - q_s[1],
                ];
                v2_ref[slot] = induced_speed_slack(dq[0] * dq[0] + dq[1] * dq[1], cfg);
            }
            let Some(k) = state.active_user(slot) else {
                continue;
            };
            a_rk[slot] =
                Some(steering_vector(q_s, cfg.user_pos_m[k], cfg.altitude_m, dims)?);
            let mut gains = Vec::with_capacity(region.len());
            for &q_e in &region.samples {
                let a = steering_vector(q_s, q_e, cfg.altitude_m, dims)?;
                let gain = channel::beampattern_gain(&state.w[slot], q_s, q_e, cfg).max(0.0);
                gains.push(cfg.rcs * cfg.ref_gain * m * gain);
                a_re[slot].push(a.clone());
                a_te[slot].push(a);
            }
            z1[slot] = gains;
            d_se_ref[slot] = channel::worst_case_ses_power(&state.w[slot], q_s, region, cfg)?;
            x_ref_w[slot] = d_se_ref[slot] + cfg.noise_s_w;
            c[(k, slot)] =
                state.b[(k, slot)] * state.a[(k, slot)] * cfg.task_bits / cfg.bandwidth_hz;
        }

        Ok(SurrogateCoeffs {
            x_ref_w,
            d_se_ref,
            q_ref_m: state.qs.clone(),
            v2_ref,
            a_rk,
            a_re,
            a_te,
            z1,
            z2,
            c,
        })
    }
}

/// First-order lower bound of the uplink rate in the interference power.
///
/// `log2(1 + gain / x)` is convex in the interference-plus-noise `x`, so
/// its tangent at `x_ref` never exceeds it:
/// `log2(1 + gain/x_ref) - gain * (x - x_ref) / (ln2 * (x_ref^2 + x_ref * gain))`,
/// bits/s/Hz, with equality at `x = x_ref`. `gain` is the received signal
/// power `P_u * ||h_sk||^2`, watts.
pub fn taylor_rate_in_interference(x_w1: f64, x_w1_ref: f64, gain: f64) -> f64 {
    (1.0 + gain / x_w1_ref).log2()
        - gain * (x_w1 - x_w1_ref) / (LN_2 * (x_w1_ref * x_w1_ref + x_w1_ref * gain))
}

/// Rate lower bound in the distance slacks, bits/s/Hz.
///
/// `d_sk_t` under-estimates the inverse squared user slant distance
/// (1/m^2), `d_se_t` over-estimates the round-trip interference (watts).
/// The concave `-log2` of the denominator is replaced by its tangent at
/// `d_se_ref`:
/// `log2(d_se_t + z2 * d_sk_t + noise) - log2(d_se_ref + noise)
///  - (d_se_t - d_se_ref) / ((d_se_ref + noise) * ln2)`.
/// Never exceeds the exact rate at valid slacks; equality at the expansion
/// point.
pub fn rate_surrogate_lower(
    d_sk_t: f64,
    d_se_t: f64,
    d_se_ref: f64,
    z2: f64,
    noise_w: f64,
) -> f64 {
    (d_se_t + z2 * d_sk_t + noise_w).log2()
        - (d_se_ref + noise_w).log2()
        - (d_se_t - d_se_ref) / ((d_se_ref + noise_w) * LN_2)
}

/// Tangent of the inverse squared slant distance `1 / (u + H^2)` in the
/// squared ground distance `u`, evaluated at `u` around `u_ref`, 1/m^2.
///
/// The function is convex and decreasing in `u`, so the tangent lies below
/// it everywhere and over-estimating `u` only tightens a `<=` constraint
/// against it.
pub fn dist_sq_tangent(u: f64, u_ref: f64, altitude_m: f64) -> f64 {
    let s_ref = u_ref + altitude_m * altitude_m;
    1.0 / s_ref - (u - u_ref) / (s_ref * s_ref)
}

/// Affine lower bound of the kinematic left side
/// `v2^2 + ||dq||^2 / (v0^2 dt^2)` expanded at `(v2_ref, dq_ref)`.
pub fn kinematics_linearized_lhs(
    v2: f64,
    v2_ref: f64,
    dq: [f64; 2],
    dq_ref: [f64; 2],
    cfg: &ScenarioConfig,
) -> f64 {
    let scale = cfg.rotor_speed_mps * cfg.rotor_speed_mps * cfg.slot_len_s * cfg.slot_len_s;
    let dq_ref_sq = dq_ref[0] * dq_ref[0] + dq_ref[1] * dq_ref[1];
    v2_ref * v2_ref
        + 2.0 * v2_ref * (v2 - v2_ref)
        + (dq_ref_sq + 2.0 * (dq_ref[0] * (dq[0] - dq_ref[0]) + dq_ref[1] * (dq[1] - dq_ref[1])))
            / scale
}

/// Residual of the linearized induced-power inequality: linearized left
/// side minus `1 / v2^2`. Nonnegative residual means the surrogate
/// constraint holds at the point.
///
/// `q_pair` holds the slot's start and end positions, metres.
pub fn surrogate_kinematics(
    v2: f64,
    v2_ref: f64,
    q_pair: ([f64; 2], [f64; 2]),
    q_pair_ref: ([f64; 2], [f64; 2]),
    cfg: &ScenarioConfig,
) -> f64 {
    let dq = [q_pair.1[0] - q_pair.0[0], q_pair.1[1] - q_pair.0[1]];
    let dq_ref = [
        q_pair_ref.1[0] - q_pair_ref.0[0],
        q_pair_ref.1[1] - q_pair_ref.0[1],
    ];
    kinematics_linearized_lhs(v2, v2_ref, dq, dq_ref, cfg) - 1.0 / (v2 * v2)
}

/// Exact induced-power slack for a slot displacement: the positive root of
/// `v2^4 + (||dq|| / (v0 dt))^2 * v2^2 = 1`. Equals 1 while hovering, and
/// `p_induced_w * v2` is exactly the induced propulsion power.
pub fn induced_speed_slack(dq_norm_sq: f64, cfg: &ScenarioConfig) -> f64 {
    let scale = cfg.rotor_speed_mps * cfg.rotor_speed_mps * cfg.slot_len_s * cfg.slot_len_s;
    let beta = dq_norm_sq / scale;
    (((beta * beta + 4.0).sqrt() - beta) / 2.0).sqrt()
}

/// Piecewise-linear under-approximation of `log2` on a geometric knot grid
/// centred at `z_ref`.
#[derive(Debug, Clone)]
pub struct Log2Chords {
    /// `(slope, intercept)` per chord; `min_i(slope_i * z + intercept_i)`
    /// under-estimates `log2(z)` on `[z_lo, z_hi]` and matches it at every
    /// knot.
    pub chords: Vec<(f64, f64)>,
    /// Validity range; outside it the chords can overshoot the concave
    /// log, so callers must also bound the argument.
    pub z_lo: f64,
    pub z_hi: f64,
}

/// Builds the chords of `log2` between knots `z_ref * 2^(j / per_octave)`
/// for `j = -octaves * per_octave ..= octaves * per_octave`. One knot sits
/// exactly at `z_ref`, so the bound is tight at the expansion point.
pub fn log2_chords(z_ref: f64, octaves: u32, per_octave: u32) -> Log2Chords {
    assert!(z_ref > 0.0 && octaves > 0 && per_octave > 0);
    let j_max = (octaves * per_octave) as i32;
    let knots: Vec<f64> = (-j_max..=j_max)
        .map(|j| z_ref * (j as f64 / per_octave as f64).exp2())
        .collect();
    let chords = knots
        .windows(2)
        .map(|w| {
            let (z0, z1) = (w[0], w[1]);
            let slope = (z1.log2() - z0.log2()) / (z1 - z0);
            (slope, z0.log2() - slope * z0)
        })
        .collect();
    Log2Chords {
        chords,
        z_lo: knots[0],
        z_hi: *knots.last().expect("nonempty knot grid"),
    }
}

impl Log2Chords {
    /// `min_i(slope_i * z + intercept_i)`, the value the row constraints
    /// allow at `z`.
    pub fn eval(&self, z: f64) -> f64 {
        self.chords
            .iter()
            .map(|&(s, b)| s * z + b)
            .fold(f64::INFINITY, f64::min)
    }
}
