//! Beamforming block: one semidefinite program per active slot.
//!
//! The slot covariance enters every constraint through real linear forms
//! of its entries, so each slot solves a small SDP over the Hermitian
//! matrix (real embedding of side 2M), the receiver interference epigraph,
//! and the offload-energy epigraph. The uplink rate appears through its
//! tangent in the interference, keeping rows affine. Afterwards a rank-one
//! beam is recovered from the dominant eigenvector and Gaussian draws,
//! each rescaled by the smallest factor that restores every constraint;
//! the best feasible candidate by true objective wins, otherwise the
//! matrix itself is kept and flagged.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::ScenarioConfig;
use crate::conic::{
    solve_conic_warm, LinExpr, ProblemBuilder, SolveStatus, SolverSettings, WarmStart,
};
use crate::model::region::EveRegion;
use crate::model::state::BeamCovariance;
use crate::model::steering::{steering_vector, ArrayDims, SteeringVector};
use crate::model::{dist2, propulsion, slant2};

use super::SubproblemError;

/// Expansion-point data: per-slot interference-plus-noise from the
/// previous covariances, watts.
#[derive(Debug, Clone)]
pub struct BeamformingRef {
    pub x_ref_w: Vec<f64>,
}

/// Per-slot warm starts carried across outer iterations.
#[derive(Debug, Clone, Default)]
pub struct BeamCache {
    slots: Vec<Option<(Vec<f64>, Vec<f64>, Vec<f64>)>>,
}

impl BeamCache {
    pub fn new(num_slots: usize) -> Self {
        BeamCache { slots: vec![None; num_slots] }
    }
}

/// Result of the beamforming step.
#[derive(Debug, Clone)]
pub struct BeamformingOutcome {
    pub wset: Vec<BeamCovariance>,
    /// Recovered rank-one beams; `None` where the matrix was kept.
    pub beams: Vec<Option<DVector<Complex64>>>,
    /// Offload energies at the returned covariances, joules.
    pub eta: DMatrix<f64>,
    /// Whether each slot's returned covariance is rank-one.
    pub rank_one: Vec<bool>,
    /// Relative gap between the recovered solution and the relaxation
    /// bound, per slot.
    pub sdr_gap: Vec<f64>,
    /// Sum of offload-energy epigraphs, joules.
    pub objective: f64,
}

/// Variable layout of one Hermitian matrix: diagonal, then the real and
/// imaginary parts of the strict upper triangle in column-major order.
struct WVarMap {
    m: usize,
    diag: Vec<usize>,
    re_off: Vec<usize>,
    im_off: Vec<usize>,
}

/// Strict-upper-triangle position of (i, j), i < j, column-major.
fn tri(i: usize, j: usize) -> usize {
    j * (j - 1) / 2 + i
}

impl WVarMap {
    fn new(pb: &mut ProblemBuilder, m: usize) -> Self {
        WVarMap {
            m,
            diag: pb.vars("w_d", m),
            re_off: pb.vars("w_re", m * (m - 1) / 2),
            im_off: pb.vars("w_im", m * (m - 1) / 2),
        }
    }

    /// Beampattern gain `a^H W a` as a linear form of the entries.
    fn gain_expr(&self, a: &SteeringVector) -> LinExpr {
        let mut terms = Vec::with_capacity(self.m * self.m);
        for i in 0..self.m {
            terms.push((self.diag[i], a.entries[i].norm_sqr()));
        }
        for j in 1..self.m {
            for i in 0..j {
                let c = a.entries[i].conj() * a.entries[j];
                terms.push((self.re_off[tri(i, j)], 2.0 * c.re));
                terms.push((self.im_off[tri(i, j)], -2.0 * c.im));
            }
        }
        LinExpr { terms, constant: 0.0 }
    }

    fn trace_expr(&self) -> LinExpr {
        LinExpr {
            terms: self.diag.iter().map(|&v| (v, 1.0)).collect(),
            constant: 0.0,
        }
    }

    /// Entry of the real part, upper triangle (i <= j).
    fn re_entry(&self, i: usize, j: usize) -> LinExpr {
        if i == j {
            LinExpr::var(self.diag[i])
        } else {
            LinExpr::var(self.re_off[tri(i, j)])
        }
    }

    /// Entry `-Im W[a][j]` of the embedding's upper-right block.
    fn neg_im_entry(&self, a: usize, j: usize) -> LinExpr {
        use std::cmp::Ordering;
        match a.cmp(&j) {
            Ordering::Less => LinExpr::term(self.im_off[tri(a, j)], -1.0),
            Ordering::Greater => LinExpr::term(self.im_off[tri(j, a)], 1.0),
            Ordering::Equal => LinExpr::constant(0.0),
        }
    }

    /// Scaled upper-triangle vectorization of the real embedding
    /// `[[Re W, -Im W], [Im W, Re W]]`, side 2m.
    fn embedding_svec(&self) -> Vec<LinExpr> {
        let side = 2 * self.m;
        let mut out = Vec::with_capacity(side * (side + 1) / 2);
        for b in 0..side {
            for a in 0..=b {
                let e = if b < self.m {
                    self.re_entry(a, b)
                } else if a < self.m {
                    self.neg_im_entry(a, b - self.m)
                } else {
                    self.re_entry(a - self.m, b - self.m)
                };
                out.push(if a == b { e } else { e.scaled(std::f64::consts::SQRT_2) });
            }
        }
        out
    }

    /// Hermitian matrix from the solved variable vector.
    fn extract(&self, x: &[f64]) -> DMatrix<Complex64> {
        let mut w = DMatrix::zeros(self.m, self.m);
        for i in 0..self.m {
            w[(i, i)] = Complex64::new(x[self.diag[i]], 0.0);
        }
        for j in 1..self.m {
            for i in 0..j {
                let z = Complex64::new(x[self.re_off[tri(i, j)]], x[self.im_off[tri(i, j)]]);
                w[(i, j)] = z;
                w[(j, i)] = z.conj();
            }
        }
        w
    }
}

/// Frozen geometry of one slot used both for rows and for candidate
/// rescaling.
struct SlotGeometry {
    user: usize,
    alpha: f64,
    /// Steering, squared slant range to the platform, and squared ground
    /// range to the user, per region sample.
    samples: Vec<(SteeringVector, f64, f64)>,
    /// Received uplink signal power `P_u ||h_sk||^2`, watts.
    sig_w: f64,
    /// Normalized offload volume `alpha D / B`, bit/Hz.
    c_bits: f64,
    /// Rate floor from the slot time limit, bits/s/Hz (0 when alpha = 0).
    r_need: f64,
}

impl SlotGeometry {
    fn build(
        user: usize,
        alpha: f64,
        q_s: [f64; 2],
        region: &EveRegion,
        cfg: &ScenarioConfig,
    ) -> Result<Self, SubproblemError> {
        let dims = ArrayDims::from(cfg);
        let samples = region
            .samples
            .iter()
            .map(|&q_e| {
                let a = steering_vector(q_s, q_e, cfg.altitude_m, dims)?;
                Ok((
                    a,
                    slant2(q_s, q_e, cfg.altitude_m),
                    dist2(cfg.user_pos_m[user], q_e),
                ))
            })
            .collect::<Result<Vec<_>, crate::model::ModelError>>()?;
        let d_sk2 = slant2(q_s, cfg.user_pos_m[user], cfg.altitude_m);
        let sig_w = cfg.user_tx_power_w * cfg.ref_gain * cfg.m() as f64 / d_sk2;
        let c_bits = alpha * cfg.task_bits / cfg.bandwidth_hz;
        let r_need = if alpha > 0.0 {
            let t_com = alpha * cfg.task_bits * cfg.cycles_per_bit_uav / cfg.cpu_freq_uav_hz;
            c_bits / (cfg.slot_len_s - t_com)
        } else {
            0.0
        };
        Ok(SlotGeometry { user, alpha, samples, sig_w, c_bits, r_need })
    }

    /// Round-trip interference per unit beampattern gain at sample `e`.
    fn ses_coef(&self, e: usize, cfg: &ScenarioConfig) -> f64 {
        let d2 = self.samples[e].1;
        cfg.rcs * cfg.ref_gain * cfg.m() as f64 / (d2 * d2)
    }

    /// Required jamming power floor at sample `e` (watts at the
    /// eavesdropper), or `None` when vacuous.
    fn jam_floor(&self, e: usize, cfg: &ScenarioConfig) -> Option<f64> {
        if !cfg.gamma_e.is_finite() {
            return None;
        }
        let need =
            cfg.user_tx_power_w * cfg.ref_gain / (self.samples[e].2 * cfg.gamma_e)
                - cfg.noise_e_w;
        (need > 0.0).then_some(need)
    }

    /// Cap on the receiver interference-plus-noise implied by the SINR
    /// floor and the slot time limit, watts.
    fn x_cap(&self, cfg: &ScenarioConfig) -> f64 {
        let mut cap = f64::INFINITY;
        if cfg.gamma_s > 0.0 {
            cap = cap.min(self.sig_w / cfg.gamma_s);
        }
        if self.alpha > 0.0 {
            cap = cap.min(self.sig_w / (self.r_need.exp2() - 1.0));
        }
        cap
    }
}

/// One candidate beam: the smallest feasible power rescaling and its
/// score (offload energy when bits flow, trace otherwise).
fn rescale_candidate(
    dir: &[Complex64],
    geo: &SlotGeometry,
    cfg: &ScenarioConfig,
) -> Option<(f64, f64)> {
    let norm2: f64 = dir.iter().map(|z| z.norm_sqr()).sum();
    if norm2 <= 0.0 {
        return None;
    }
    let gains: Vec<f64> = geo
        .samples
        .iter()
        .map(|(a, _, _)| {
            a.entries
                .iter()
                .zip(dir)
                .map(|(ai, wi)| ai.conj() * wi)
                .sum::<Complex64>()
                .norm_sqr()
        })
        .collect();

    let mut rho_lo: f64 = 0.0;
    let mut ses_coef_max: f64 = 0.0;
    for e in 0..geo.samples.len() {
        let d_se2 = geo.samples[e].1;
        if cfg.gamma_sen > 0.0 {
            if gains[e] <= 0.0 {
                return None;
            }
            rho_lo = rho_lo.max(d_se2 * cfg.gamma_sen / gains[e]);
        }
        if let Some(need) = geo.jam_floor(e, cfg) {
            if gains[e] <= 0.0 {
                return None;
            }
            rho_lo = rho_lo.max(need * d_se2 / (cfg.ref_gain * gains[e]));
        }
        ses_coef_max = ses_coef_max.max(geo.ses_coef(e, cfg) * gains[e]);
    }

    let mut rho_hi = cfg.p_max_w / norm2;
    let x_cap = geo.x_cap(cfg);
    if x_cap.is_finite() {
        if x_cap < cfg.noise_s_w {
            return None;
        }
        if ses_coef_max > 0.0 {
            rho_hi = rho_hi.min((x_cap - cfg.noise_s_w) / ses_coef_max);
        }
    }
    if rho_lo > rho_hi * (1.0 + 1e-12) {
        return None;
    }
    let rho = rho_lo;
    let score = if geo.alpha > 0.0 {
        let x = rho * ses_coef_max + cfg.noise_s_w;
        let rate = (1.0 + geo.sig_w / x).log2();
        cfg.user_tx_power_w * geo.c_bits / rate
    } else {
        rho * norm2
    };
    Some((rho, score))
}

/// Complex square-root factor of a Hermitian PSD matrix through its real
/// embedding: returns (factor, dominant unit eigenvector, top eigenvalue).
fn embedding_sqrt(w: &DMatrix<Complex64>) -> (DMatrix<f64>, Vec<Complex64>, f64) {
    let m = w.nrows();
    let mut real = DMatrix::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let z = w[(i, j)];
            real[(i, j)] = z.re;
            real[(i + m, j + m)] = z.re;
            real[(i, j + m)] = -z.im;
            real[(i + m, j)] = z.im;
        }
    }
    let sym = (&real + real.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut top = 0;
    for i in 0..2 * m {
        if eig.eigenvalues[i] > eig.eigenvalues[top] {
            top = i;
        }
    }
    let dom: Vec<Complex64> = (0..m)
        .map(|i| Complex64::new(eig.eigenvectors[(i, top)], eig.eigenvectors[(i + m, top)]))
        .collect();
    let mut factor = eig.eigenvectors.clone();
    for c in 0..2 * m {
        let s = eig.eigenvalues[c].max(0.0).sqrt();
        factor.column_mut(c).scale_mut(s);
    }
    (factor, dom, eig.eigenvalues[top])
}

/// Standard normal draw by Box-Muller; deterministic under the seeded
/// generator.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

const RANDOMIZATION_DRAWS: usize = 200;
/// Trace tie-break on the energy objective; small enough to stay within
/// solver tolerance, large enough to suppress stray orthogonal power.
const TRACE_TIEBREAK: f64 = 1e-8;

struct SlotSolution {
    w: DMatrix<Complex64>,
    beam: Option<DVector<Complex64>>,
    eta: f64,
    rank_one: bool,
    gap: f64,
    trace: f64,
}

/// Solves one active slot at the given trace penalty and recovers a
/// rank-one beam.
#[allow(clippy::too_many_arguments)]
fn solve_slot(
    geo: &SlotGeometry,
    x_ref: f64,
    lambda: f64,
    seed: u64,
    cfg: &ScenarioConfig,
    warm: &mut Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
) -> Result<SlotSolution, SubproblemError> {
    let m = cfg.m();
    let mut pb = ProblemBuilder::new();
    let wv = WVarMap::new(&mut pb, m);
    let x_var = pb.var("x_rcv");
    let eta_var = (geo.alpha > 0.0).then(|| pb.var("eta"));

    // The interference variable is kept in units of the expansion point,
    // so the epigraph, cap, and tangent rows all carry coefficients within
    // a few orders of one; watt units would spread the rows by 1e13 and a
    // noise unit still leaves a 1e5 gap that masks energy-cone violations
    // inside the normalized residual.
    let noise = cfg.noise_s_w;
    let unit = x_ref.max(noise);
    let taylor = |x_expr: LinExpr| -> LinExpr {
        // Affine form of the rate tangent in the interference variable;
        // the expansion point sits at x = 1 by construction.
        let g = geo.sig_w / unit;
        let a1 = g / (std::f64::consts::LN_2 * (1.0 + g));
        x_expr.scaled(-a1).shifted((1.0 + g).log2() + a1)
    };

    for e in 0..geo.samples.len() {
        let gain = wv.gain_expr(&geo.samples[e].0);
        let d_se2 = geo.samples[e].1;
        // Receiver interference epigraph: x >= round-trip echo + noise.
        pb.require_le(
            gain.clone().scaled(geo.ses_coef(e, cfg) / unit).shifted(noise / unit),
            LinExpr::var(x_var),
        );
        if cfg.gamma_sen > 0.0 {
            pb.require_le(LinExpr::constant(d_se2 * cfg.gamma_sen), gain.clone());
        }
        if let Some(need) = geo.jam_floor(e, cfg) {
            pb.require_le(
                LinExpr::constant(need * d_se2 / cfg.ref_gain),
                gain,
            );
        }
    }
    let x_cap = geo.x_cap(cfg);
    if x_cap.is_finite() {
        pb.require_le(LinExpr::var(x_var), LinExpr::constant(x_cap / unit));
    }
    pb.require_le(wv.trace_expr(), LinExpr::constant(cfg.p_max_w));
    pb.require_ge0(LinExpr::var(x_var).shifted(-(noise / unit)));

    if let Some(eta) = eta_var {
        // eta * rate >= P_u c through the rotated cone; also pins the
        // tangent rate nonnegative.
        pb.require_rsoc(
            LinExpr::var(eta),
            taylor(LinExpr::var(x_var)),
            vec![LinExpr::constant(
                (2.0 * cfg.user_tx_power_w * geo.c_bits).sqrt(),
            )],
        );
        pb.minimize(
            LinExpr::var(eta).plus(&wv.trace_expr().scaled(TRACE_TIEBREAK + lambda)),
        );
    } else {
        pb.minimize(wv.trace_expr().scaled(1.0 + lambda));
    }
    pb.require_psd_svec(2 * m, wv.embedding_svec());

    let problem = pb.build().expect("beamforming SDP shapes are consistent");
    let settings = SolverSettings { tol: 1e-7, max_iter: 40_000, ..Default::default() };
    let warm_ref = warm.as_ref().and_then(|(x, y, s)| {
        (x.len() == problem.num_vars() && y.len() == problem.num_rows())
            .then_some(WarmStart { x, y, s })
    });
    let sol = solve_conic_warm(&problem, &settings, warm_ref);
    // The recovered beam is rescaled against exact constraint arithmetic
    // below, so the relaxation only has to pin down a good direction.
    let tolerable = sol.primal_residual <= 1e-5
        && sol.dual_residual <= 1e-4
        && sol.gap.abs() <= 1e-3;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::PrimalInfeasible => {
            return Err(SubproblemError::Infeasible(
                "slot covariance: protection, rate, and power limits conflict at \
                 this expansion point"
                    .into(),
            ));
        }
        _ if tolerable => {}
        other => {
            return Err(SubproblemError::Accuracy(format!(
                "slot SDP stopped with {other:?} at residuals {:.2e}/{:.2e}, gap {:.2e}",
                sol.primal_residual, sol.dual_residual, sol.gap
            )));
        }
    }
    *warm = Some((sol.x.clone(), sol.y.clone(), sol.s.clone()));

    let w_star = wv.extract(&sol.x);
    let sdr_bound = if let Some(eta) = eta_var {
        sol.x[eta]
    } else {
        wv.diag.iter().map(|&v| sol.x[v]).sum()
    };
    // Rank-one recovery: dominant eigenvector, then Gaussian draws.
    let (factor, dom, _) = embedding_sqrt(&w_star);
    let mut best: Option<(f64, Vec<Complex64>, f64)> = None;
    let mut consider = |dir: &[Complex64]| {
        if let Some((rho, score)) = rescale_candidate(dir, geo, cfg) {
            if best.as_ref().map_or(true, |(s, _, _)| score < *s) {
                best = Some((score, dir.to_vec(), rho));
            }
        }
    };
    consider(&dom);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOMIZATION_DRAWS {
        let g: Vec<f64> = (0..2 * m).map(|_| normal(&mut rng)).collect();
        let c = &factor * DVector::from_vec(g);
        let dir: Vec<Complex64> = (0..m)
            .map(|i| Complex64::new(c[i], c[i + m]))
            .collect();
        consider(&dir);
    }

    if let Some((score, dir, rho)) = best {
        let beam = DVector::from_iterator(m, dir.iter().map(|&z| z * rho.sqrt()));
        let cov = BeamCovariance::from_beam(&beam);
        let trace = cov.trace();
        let eta = if geo.alpha > 0.0 { score } else { 0.0 };
        let gap = (score - sdr_bound) / sdr_bound.abs().max(1e-12);
        Ok(SlotSolution {
            w: cov.0,
            beam: Some(beam),
            eta,
            rank_one: true,
            gap,
            trace,
        })
    } else {
        // Keep the matrix; covariance transmission stays feasible.
        let trace = (0..m).map(|i| w_star[(i, i)].re).sum();
        let eta = if geo.alpha > 0.0 {
            let x = (sol.x[x_var] * unit).max(noise);
            let rate = (1.0 + geo.sig_w / x).log2();
            cfg.user_tx_power_w * geo.c_bits / rate
        } else {
            0.0
        };
        Ok(SlotSolution { w: w_star, beam: None, eta, rank_one: false, gap: 0.0, trace })
    }
}

/// Minimizes total offload energy over the per-slot covariances for fixed
/// ratios, schedule, and trajectory.
///
/// When the sensing radiation would break the battery budget, a uniform
/// trace penalty is raised by bisection until the budget holds; if even
/// the minimum-power feasible beams exceed it, the step reports
/// infeasibility.
pub fn solve_beamforming_sdp(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    qs: &[[f64; 2]],
    cfg: &ScenarioConfig,
    ref_point: &BeamformingRef,
    seed: u64,
    cache: &mut BeamCache,
) -> Result<BeamformingOutcome, SubproblemError> {
    let region = EveRegion::from_config(cfg);
    if cache.slots.len() != cfg.num_slots {
        *cache = BeamCache::new(cfg.num_slots);
    }

    let mut geos: Vec<Option<SlotGeometry>> = Vec::with_capacity(cfg.num_slots);
    for n in 0..cfg.num_slots {
        let user = (0..cfg.num_users).find(|&k| b[(k, n)] > 0.5);
        geos.push(match user {
            Some(k) => Some(SlotGeometry::build(k, a[(k, n)], qs[n], &region, cfg)?),
            None => None,
        });
    }

    let edge_j = cfg.cpu_eff
        * cfg.task_bits
        * cfg.cycles_per_bit_uav
        * cfg.cpu_freq_uav_hz
        * cfg.cpu_freq_uav_hz;
    let compute_j: f64 = geos
        .iter()
        .flatten()
        .map(|g| g.alpha * edge_j)
        .sum();
    let flight_j = propulsion::flight_energy(qs, cfg);
    let sensing_budget = cfg.e_max_j - flight_j - compute_j;
    if sensing_budget < 0.0 {
        return Err(SubproblemError::Infeasible(format!(
            "battery budget: flight {flight_j:.1} J plus edge computing {compute_j:.1} J \
             already exceed the {:.1} J limit",
            cfg.e_max_j
        )));
    }

    let solve_all = |lambda: f64,
                     cache: &mut BeamCache|
     -> Result<Vec<Option<SlotSolution>>, SubproblemError> {
        geos.iter()
            .enumerate()
            .map(|(n, geo)| {
                geo.as_ref()
                    .map(|g| {
                        solve_slot(
                            g,
                            ref_point.x_ref_w[n],
                            lambda,
                            seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                            cfg,
                            &mut cache.slots[n],
                        )
                    })
                    .transpose()
            })
            .collect()
    };
    let radiated = |slots: &[Option<SlotSolution>]| -> f64 {
        slots.iter().flatten().map(|s| cfg.slot_len_s * s.trace).sum()
    };

    // Closed-form bound under the floors: a steered gain never exceeds
    // M * trace, so each threshold implies a minimum radiated power.
    let m_f = cfg.m() as f64;
    let floor_lb_j: f64 = geos
        .iter()
        .flatten()
        .map(|g| {
            let mut tr = 0.0f64;
            for e in 0..g.samples.len() {
                let d_se2 = g.samples[e].1;
                if cfg.gamma_sen > 0.0 {
                    tr = tr.max(d_se2 * cfg.gamma_sen / m_f);
                }
                if let Some(need) = g.jam_floor(e, cfg) {
                    tr = tr.max(need * d_se2 / (cfg.ref_gain * m_f));
                }
            }
            cfg.slot_len_s * tr
        })
        .sum();
    if floor_lb_j > sensing_budget + 1e-9 {
        return Err(SubproblemError::Infeasible(format!(
            "sensing power floor of at least {floor_lb_j:.3} J exceeds the \
             {sensing_budget:.3} J left by flight and computing"
        )));
    }

    let mut slots = solve_all(0.0, cache)?;
    if radiated(&slots) > sensing_budget + 1e-9 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        loop {
            let r = radiated(&solve_all(hi, cache)?);
            if r <= sensing_budget + 1e-9 {
                break;
            }
            hi *= 10.0;
            if hi > 1e9 {
                // The trace term dominates eta by many orders here, so the
                // slots already sit on their power floor.
                return Err(SubproblemError::Infeasible(format!(
                    "sensing power floor near {r:.3} J exceeds the \
                     {sensing_budget:.3} J left by flight and computing"
                )));
            }
        }
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if radiated(&solve_all(mid, cache)?) > sensing_budget + 1e-9 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        slots = solve_all(hi, cache)?;
    }

    let mut wset = Vec::with_capacity(cfg.num_slots);
    let mut beams = Vec::with_capacity(cfg.num_slots);
    let mut rank_one = Vec::with_capacity(cfg.num_slots);
    let mut sdr_gap = Vec::with_capacity(cfg.num_slots);
    let mut eta = DMatrix::zeros(cfg.num_users, cfg.num_slots);
    let mut objective = 0.0;
    for (n, slot) in slots.into_iter().enumerate() {
        match slot {
            Some(s) => {
                let geo = geos[n].as_ref().expect("solution implies geometry");
                eta[(geo.user, n)] = s.eta;
                objective += s.eta;
                wset.push(BeamCovariance(s.w));
                beams.push(s.beam);
                rank_one.push(s.rank_one);
                sdr_gap.push(s.gap);
            }
            None => {
                wset.push(BeamCovariance::zeros(cfg.m()));
                beams.push(None);
                rank_one.push(true);
                sdr_gap.push(0.0);
            }
        }
    }
    Ok(BeamformingOutcome { wset, beams, eta, rank_one, sdr_gap, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::steering::{steering_vector, ArrayDims};
    use crate::model::{channel, dist2, slant2};
    use approx::assert_relative_eq;

    /// Single-sample region, one active slot, sensing constraint only.
    fn sensing_only_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.eve_half_side_m = 0.0;
        cfg.eve_grid_points = 1;
        cfg.gamma_s = 0.0;
        cfg.gamma_e = f64::INFINITY;
        cfg
    }

    #[test]
    fn idle_slots_keep_zero_covariance() {
        let cfg = sensing_only_cfg();
        let b = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        let a = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        let qs = vec![[0.0, 0.0]; cfg.num_slots];
        let ref_point = BeamformingRef { x_ref_w: vec![cfg.noise_s_w; cfg.num_slots] };
        let mut cache = BeamCache::new(cfg.num_slots);
        let out =
            solve_beamforming_sdp(&a, &b, &qs, &cfg, &ref_point, 5, &mut cache).unwrap();
        assert!(out.wset.iter().all(|w| w.trace() == 0.0));
        assert_eq!(out.objective, 0.0);
    }

    #[test]
    fn sensing_floor_beam_matches_closed_form_trace() {
        let cfg = sensing_only_cfg();
        // Eavesdropper centre at (100, 100), slot hovering at (25, 100):
        // ground offset 75 m, altitude 50 m, squared slant 7525... keep
        // the numbers simple instead: centre the platform at (100, 25),
        // sample at (100, 100): d^2 = 75^2 + 50^2 = 8125.
        let mut b = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        b[(0, 0)] = 1.0;
        let a = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        let mut qs = vec![[0.0, 0.0]; cfg.num_slots];
        qs[0] = [100.0, 25.0];
        let ref_point = BeamformingRef { x_ref_w: vec![cfg.noise_s_w; cfg.num_slots] };
        let mut cache = BeamCache::new(cfg.num_slots);
        let out =
            solve_beamforming_sdp(&a, &b, &qs, &cfg, &ref_point, 5, &mut cache).unwrap();
        let d2 = 75.0f64.powi(2) + cfg.altitude_m.powi(2);
        let expected = d2 * cfg.gamma_sen / cfg.m() as f64;
        assert!(out.rank_one[0]);
        assert_relative_eq!(out.wset[0].trace(), expected, max_relative = 1e-4);
        // The aimed beam hits the gain threshold exactly.
        let gain =
            channel::beampattern_gain(&out.wset[0], qs[0], cfg.eve_center_m, &cfg);
        assert_relative_eq!(gain, d2 * cfg.gamma_sen, max_relative = 1e-4);
    }

    #[test]
    fn offload_slot_meets_every_original_constraint() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.eve_grid_points = 3;
        let region = EveRegion::from_config(&cfg);
        let mut b = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        let mut a = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        b[(1, 0)] = 1.0;
        a[(1, 0)] = 0.05;
        let mut qs = vec![[0.0, 0.0]; cfg.num_slots];
        qs[0] = [90.0, 60.0];
        // The jamming floor forces echo interference far above noise, so
        // the rate expansion point must come from a beam meeting the
        // floors, exactly as the alternating loop provides.
        let dims = ArrayDims::from(&cfg);
        let aim = steering_vector(qs[0], cfg.eve_center_m, cfg.altitude_m, dims).unwrap();
        let unit = BeamCovariance::from_beam(&DVector::from_iterator(
            cfg.m(),
            aim.entries.iter().copied(),
        ));
        let mut scale = 0.0f64;
        for &q_e in &region.samples {
            let g_unit = channel::beampattern_gain(&unit, qs[0], q_e, &cfg);
            let d_se2 = slant2(qs[0], q_e, cfg.altitude_m);
            let mut g_req = d_se2 * cfg.gamma_sen;
            let need = cfg.user_tx_power_w * cfg.ref_gain
                / (dist2(cfg.user_pos_m[1], q_e) * cfg.gamma_e)
                - cfg.noise_e_w;
            if need > 0.0 {
                g_req = g_req.max(need * d_se2 / cfg.ref_gain);
            }
            scale = scale.max(g_req / g_unit);
        }
        let amp = (1.5 * scale).sqrt();
        let w_feas = BeamCovariance::from_beam(&DVector::from_iterator(
            cfg.m(),
            aim.entries.iter().map(|&e| e * amp),
        ));
        let mut x_ref_w = vec![cfg.noise_s_w; cfg.num_slots];
        x_ref_w[0] = channel::worst_case_ses_power(&w_feas, qs[0], &region, &cfg).unwrap()
            + cfg.noise_s_w;
        let ref_point = BeamformingRef { x_ref_w };
        let mut cache = BeamCache::new(cfg.num_slots);
        let out =
            solve_beamforming_sdp(&a, &b, &qs, &cfg, &ref_point, 7, &mut cache).unwrap();
        let w = &out.wset[0];
        assert!(out.rank_one[0]);
        assert!(w.trace() <= cfg.p_max_w * (1.0 + 1e-9));

        // Re-verify with true (non-surrogate) expressions at every sample.
        for &q_e in &region.samples {
            let gain = channel::beampattern_gain(w, qs[0], q_e, &cfg);
            let d2 = slant2(qs[0], q_e, cfg.altitude_m);
            assert!(gain >= d2 * cfg.gamma_sen * (1.0 - 1e-9), "perception");
            let eve = channel::eve_sinr_at(cfg.user_pos_m[1], w, qs[0], q_e, true, &cfg);
            assert!(eve <= cfg.gamma_e * (1.0 + 1e-9), "secrecy");
        }
        let sinr =
            channel::user_sinr(qs[0], cfg.user_pos_m[1], w, &region, true, &cfg).unwrap();
        assert!(sinr >= cfg.gamma_s * (1.0 - 1e-9), "service floor");
        let rate = (1.0 + sinr).log2();
        let t_com = 0.05 * cfg.task_bits * cfg.cycles_per_bit_uav / cfg.cpu_freq_uav_hz;
        let t_off = 0.05 * cfg.task_bits / (cfg.bandwidth_hz * rate);
        assert!(t_off + t_com <= cfg.slot_len_s * (1.0 + 1e-9), "slot time");
        // Energy epigraph consistent with the true rate.
        assert_relative_eq!(
            out.eta[(1, 0)],
            cfg.user_tx_power_w * 0.05 * cfg.task_bits / (cfg.bandwidth_hz * rate),
            max_relative = 1e-9
        );
        // The recovered beam may beat the tangent-rate bound slightly but
        // must stay well inside the relaxation gap criterion.
        assert!(out.sdr_gap[0] < 0.25, "gap {}", out.sdr_gap[0]);
    }

    #[test]
    fn sensing_floor_beyond_budget_reports_infeasible() {
        let mut cfg = sensing_only_cfg();
        let mut b = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        b[(0, 0)] = 1.0;
        let a = DMatrix::zeros(cfg.num_users, cfg.num_slots);
        let qs = vec![[100.0, 25.0]; cfg.num_slots];
        // Leave less budget over the hovering flight than the minimum
        // feasible sensing radiation (~5 mJ for the single slot).
        cfg.e_max_j = propulsion::flight_energy(&qs, &cfg) + 1e-3;
        let ref_point = BeamformingRef { x_ref_w: vec![cfg.noise_s_w; cfg.num_slots] };
        let mut cache = BeamCache::new(cfg.num_slots);
        let err = solve_beamforming_sdp(&a, &b, &qs, &cfg, &ref_point, 5, &mut cache)
            .unwrap_err();
        match err {
            SubproblemError::Infeasible(msg) => {
                assert!(msg.contains("power floor"), "{msg}")
            }
            other => panic!("expected infeasibility, got {other}"),
        }
    }
}
