//! First-order solve of the standard-form cone program.
//!
//! Operator splitting on the homogeneous self-dual embedding: each
//! iteration solves one quasi-definite linear system (cached dense
//! Cholesky of I + A'A) and projects onto the cones. The embedding yields
//! either a solution or an infeasibility certificate from the same
//! iteration, depending on which ray the iterates approach.
//!
//! Data is equilibrated before iterating (row/column scaling plus scalar
//! normalization of b and c); residuals are always reported against the
//! original problem, so results are invariant to row rescaling up to
//! tolerance.
//!
//! The plain splitting iteration has a slow linear tail on degenerate
//! instances, so the fixed-point map is wrapped in safeguarded Anderson
//! acceleration: an extrapolated point is kept only when it strictly
//! shrinks the fixed-point residual, otherwise the plain step is taken
//! and the extrapolation memory is flushed.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::cones::{project_segment, ConeSpec};
use super::{ConicProblem, ConicSolution, CsrMatrix, SolveStatus};

/// Iteration controls. `Default` gives the production configuration.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Relative residual target for optimality and certificates.
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation factor in (0, 2).
    pub over_relax: f64,
    /// Residuals are evaluated every this many iterations.
    pub check_every: usize,
    /// Equilibration rounds.
    pub ruiz_iters: usize,
    /// Residual checks without improvement before restarting from the
    /// best iterate with the relaxation toggled.
    pub stall_checks: usize,
    /// Anderson acceleration memory; 0 disables extrapolation.
    pub aa_memory: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: 1e-7,
            max_iter: 50_000,
            over_relax: 1.5,
            check_every: 25,
            ruiz_iters: 10,
            stall_checks: 60,
            aa_memory: 10,
        }
    }
}

/// Previous solution used to seed the iteration.
#[derive(Debug, Clone)]
pub struct WarmStart<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub s: &'a [f64],
}

/// Solve with default settings at the given tolerance and budget.
pub fn solve_conic(problem: &ConicProblem, tol: f64, max_iter: usize) -> ConicSolution {
    let settings = SolverSettings { tol, max_iter, ..Default::default() };
    solve_conic_warm(problem, &settings, None)
}

/// Solve with explicit settings and an optional warm start.
pub fn solve_conic_warm(
    problem: &ConicProblem,
    settings: &SolverSettings,
    warm: Option<WarmStart<'_>>,
) -> ConicSolution {
    problem.validate().expect("malformed cone program");
    Engine::new(problem, settings).run(warm)
}

/// Per-row cone segment table: (spec, row offset).
fn segment_offsets(cones: &[ConeSpec]) -> Vec<(ConeSpec, usize)> {
    let mut out = Vec::with_capacity(cones.len());
    let mut off = 0;
    for &k in cones {
        out.push((k, off));
        off += k.dim();
    }
    out
}

struct Engine<'p> {
    prob: &'p ConicProblem,
    set: SolverSettings,
    n: usize,
    m: usize,
    segments: Vec<(ConeSpec, usize)>,
    /// Equilibrated copy of A.
    ah: CsrMatrix,
    bh: Vec<f64>,
    ch: Vec<f64>,
    /// Row scales d, column scales e, scalar normalizers for b and c.
    d: Vec<f64>,
    e: Vec<f64>,
    sc_b: f64,
    sc_c: f64,
    chol: Cholesky<f64, Dyn>,
    /// g = M^-1 (c; b) and its denominator 1 + h' g.
    gx: Vec<f64>,
    gy: Vec<f64>,
    gden: f64,
    norm_b: f64,
    norm_c: f64,
}

struct Iterate {
    ux: Vec<f64>,
    uy: Vec<f64>,
    utau: f64,
    vy: Vec<f64>,
    vkappa: f64,
}

impl Iterate {
    fn pack(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.ux.len() + 2 * self.vy.len() + 2);
        w.extend_from_slice(&self.ux);
        w.extend_from_slice(&self.uy);
        w.push(self.utau);
        w.extend_from_slice(&self.vy);
        w.push(self.vkappa);
        w
    }

    fn unpack(&mut self, w: &[f64]) {
        let n = self.ux.len();
        let m = self.uy.len();
        debug_assert_eq!(w.len(), n + 2 * m + 2);
        self.ux.copy_from_slice(&w[..n]);
        self.uy.copy_from_slice(&w[n..n + m]);
        self.utau = w[n + m];
        self.vy.copy_from_slice(&w[n + m + 1..n + 2 * m + 1]);
        self.vkappa = w[n + 2 * m + 1];
    }
}

/// History of (point, image, residual) triples for Anderson extrapolation.
struct AaMemory {
    cap: usize,
    w: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

impl AaMemory {
    fn new(cap: usize) -> Self {
        AaMemory { cap, w: Vec::new(), g: Vec::new(), r: Vec::new() }
    }

    fn clear(&mut self) {
        self.w.clear();
        self.g.clear();
        self.r.clear();
    }

    fn push(&mut self, w: Vec<f64>, g: Vec<f64>, r: Vec<f64>) {
        if self.cap == 0 {
            return;
        }
        if self.w.len() == self.cap {
            self.w.remove(0);
            self.g.remove(0);
            self.r.remove(0);
        }
        self.w.push(w);
        self.g.push(g);
        self.r.push(r);
    }

    /// Least-squares combination of stored images whose residual
    /// combination is smallest; None when history is too short or the
    /// normal equations are unusable.
    fn candidate(&self) -> Option<Vec<f64>> {
        let h = self.r.len();
        if h < 2 {
            return None;
        }
        let k = h - 1;
        let r_last = &self.r[k];
        // Columns d_i = r_last - r_i, i < k; solve min ||r_last - D beta||.
        let mut hmat = DMatrix::<f64>::zeros(k, k);
        let mut rhs = DVector::<f64>::zeros(k);
        let col = |i: usize, t: usize| r_last[t] - self.r[i][t];
        let dim = r_last.len();
        for i in 0..k {
            for j in i..k {
                let mut acc = 0.0;
                for t in 0..dim {
                    acc += col(i, t) * col(j, t);
                }
                hmat[(i, j)] = acc;
                hmat[(j, i)] = acc;
            }
            let mut acc = 0.0;
            for t in 0..dim {
                acc += col(i, t) * r_last[t];
            }
            rhs[i] = acc;
        }
        let reg = 1e-10 * hmat.trace().max(f64::MIN_POSITIVE);
        for i in 0..k {
            hmat[(i, i)] += reg;
        }
        let beta = hmat.cholesky()?.solve(&rhs);
        let g_last = &self.g[k];
        let mut w_acc = g_last.clone();
        for i in 0..k {
            let bi = beta[i];
            if bi == 0.0 {
                continue;
            }
            let gi = &self.g[i];
            for t in 0..dim {
                w_acc[t] -= bi * (g_last[t] - gi[t]);
            }
        }
        if w_acc.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(w_acc)
    }
}

struct Extracted {
    x: Vec<f64>,
    y: Vec<f64>,
    s: Vec<f64>,
    pres: f64,
    dres: f64,
    gap: f64,
}

impl<'p> Engine<'p> {
    fn new(prob: &'p ConicProblem, set: &SolverSettings) -> Self {
        let n = prob.num_vars();
        let m = prob.num_rows();
        let segments = segment_offsets(&prob.cones);

        let mut ah = prob.a.clone();
        let mut d = vec![1.0; m];
        let mut e = vec![1.0; n];
        for _ in 0..set.ruiz_iters {
            // Row pass: one scale per cone block for SOC/PSD so membership
            // is preserved.
            let mut row_norm = vec![0.0f64; m];
            for r in 0..m {
                row_norm[r] = ah.row_inf_norm(r);
            }
            for &(spec, off) in &segments {
                if matches!(spec, ConeSpec::Soc(_) | ConeSpec::Psd(_)) {
                    let dim = spec.dim();
                    let blk = row_norm[off..off + dim].iter().copied().fold(0.0, f64::max);
                    row_norm[off..off + dim].fill(blk);
                }
            }
            for r in 0..m {
                if row_norm[r] > 0.0 {
                    let f = 1.0 / row_norm[r].sqrt();
                    ah.scale_row(r, f);
                    d[r] *= f;
                }
            }
            let mut col_norm = vec![0.0f64; n];
            for k in 0..ah.data.len() {
                let j = ah.indices[k];
                col_norm[j] = col_norm[j].max(ah.data[k].abs());
            }
            let f: Vec<f64> =
                col_norm.iter().map(|&cn| if cn > 0.0 { 1.0 / cn.sqrt() } else { 1.0 }).collect();
            ah.scale_cols(&f);
            for j in 0..n {
                e[j] *= f[j];
            }
        }

        let mut bh: Vec<f64> = prob.b.iter().zip(&d).map(|(b, d)| b * d).collect();
        let mut ch: Vec<f64> = prob.c.iter().zip(&e).map(|(c, e)| c * e).collect();
        let sc_b = scalar_scale(norm2(&bh));
        let sc_c = scalar_scale(norm2(&ch));
        for v in &mut bh {
            *v *= sc_b;
        }
        for v in &mut ch {
            *v *= sc_c;
        }

        // Normal matrix I + A'A, factored once.
        let mut nmat = DMatrix::<f64>::identity(n, n);
        for r in 0..m {
            for k1 in ah.indptr[r]..ah.indptr[r + 1] {
                let (j1, v1) = (ah.indices[k1], ah.data[k1]);
                for k2 in ah.indptr[r]..ah.indptr[r + 1] {
                    nmat[(j1, ah.indices[k2])] += v1 * ah.data[k2];
                }
            }
        }
        let chol = nmat.cholesky().expect("I + A'A is positive definite");

        let norm_b = norm2(&prob.b);
        let norm_c = norm2(&prob.c);

        let mut eng = Engine {
            prob,
            set: set.clone(),
            n,
            m,
            segments,
            ah,
            bh,
            ch,
            d,
            e,
            sc_b,
            sc_c,
            chol,
            gx: vec![0.0; n],
            gy: vec![0.0; m],
            gden: 1.0,
            norm_b,
            norm_c,
        };
        let (gx, gy) = eng.solve_m(&eng.ch.clone(), &eng.bh.clone());
        eng.gden = 1.0 + dot(&eng.ch, &gx) + dot(&eng.bh, &gy);
        eng.gx = gx;
        eng.gy = gy;
        eng
    }

    /// Solve M (x; y) = (rx; ry) with M = [[I, A'], [-A, I]] via the
    /// cached factorization of I + A'A.
    fn solve_m(&self, rx: &[f64], ry: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut aty = vec![0.0; self.n];
        self.ah.rmatvec(ry, &mut aty);
        let rhs = DVector::from_iterator(self.n, rx.iter().zip(&aty).map(|(a, b)| a - b));
        let x = self.chol.solve(&rhs);
        let mut ax = vec![0.0; self.m];
        let xv: Vec<f64> = x.iter().copied().collect();
        self.ah.matvec(&xv, &mut ax);
        let y: Vec<f64> = ry.iter().zip(&ax).map(|(r, a)| r + a).collect();
        (xv, y)
    }

    fn run(&mut self, warm: Option<WarmStart<'_>>) -> ConicSolution {
        let (n, m) = (self.n, self.m);
        let mut it = match warm {
            Some(w) => {
                assert_eq!(w.x.len(), n, "warm start x length");
                assert_eq!(w.y.len(), m, "warm start y length");
                assert_eq!(w.s.len(), m, "warm start s length");
                Iterate {
                    ux: (0..n).map(|j| self.sc_b * w.x[j] / self.e[j]).collect(),
                    uy: (0..m).map(|i| self.sc_c * w.y[i] / self.d[i]).collect(),
                    utau: 1.0,
                    vy: (0..m).map(|i| self.sc_b * self.d[i] * w.s[i]).collect(),
                    vkappa: 0.0,
                }
            }
            None => Iterate {
                ux: vec![0.0; n],
                uy: vec![0.0; m],
                utau: 1.0,
                vy: vec![0.0; m],
                vkappa: 1.0,
            },
        };

        let mut alpha = self.set.over_relax;
        let mut best: Option<(f64, Extracted, usize)> = None;
        let mut best_state: Option<Vec<f64>> = None;
        let mut checks_since_improve = 0usize;
        let mut aa = AaMemory::new(self.set.aa_memory);
        let mut scratch = Iterate {
            ux: vec![0.0; n],
            uy: vec![0.0; m],
            utau: 0.0,
            vy: vec![0.0; m],
            vkappa: 0.0,
        };

        let mut aa_enabled = true;
        let mut iter = 0usize;
        while iter < self.set.max_iter {
            iter += 1;
            let w0 = it.pack();
            self.step(&mut it, alpha);

            if aa_enabled && aa.cap > 0 {
                let g0 = it.pack();
                let r0: Vec<f64> = g0.iter().zip(&w0).map(|(g, w)| g - w).collect();
                let rn0 = norm2(&r0);
                aa.push(w0, g0, r0);
                if let Some(w_acc) = aa.candidate() {
                    scratch.unpack(&w_acc);
                    self.step(&mut scratch, alpha);
                    let g_acc = scratch.pack();
                    let r_acc: Vec<f64> =
                        g_acc.iter().zip(&w_acc).map(|(g, w)| g - w).collect();
                    if norm2(&r_acc) < rn0 {
                        it.unpack(&g_acc);
                        aa.push(w_acc, g_acc, r_acc);
                    } else {
                        aa.clear();
                    }
                }
            }

            if iter % self.set.check_every != 0 && iter != self.set.max_iter {
                continue;
            }

            if let Some(cert) = self.certificate(&it, iter) {
                return cert;
            }

            if let Some(ext) = self.extract(&it) {
                let score = ext.pres.max(ext.dres).max(ext.gap);
                if ext.pres <= self.set.tol && ext.dres <= self.set.tol && ext.gap <= self.set.tol
                {
                    return self.finish(SolveStatus::Optimal, ext, iter);
                }
                let improved = best.as_ref().map_or(true, |(s, _, _)| score < *s * 0.999);
                if improved {
                    best = Some((score, ext, iter));
                    best_state = Some(it.pack());
                    checks_since_improve = 0;
                } else {
                    checks_since_improve += 1;
                }
            } else {
                checks_since_improve += 1;
            }

            // Stalled: restart from the best iterate with the relaxation
            // toggled so the retried trajectory differs. Extrapolation can
            // sustain a limit cycle near a non-solution, so the first
            // restart drops it for the rest of the solve.
            if checks_since_improve >= self.set.stall_checks {
                if let Some(w) = &best_state {
                    it.unpack(w);
                }
                alpha = if alpha > 1.0 { 1.0 } else { self.set.over_relax };
                aa.clear();
                aa_enabled = false;
                checks_since_improve = 0;
            }
        }

        match best {
            Some((_, ext, _)) => self.finish(SolveStatus::MaxIter, ext, self.set.max_iter),
            None => ConicSolution {
                status: SolveStatus::MaxIter,
                x: vec![0.0; n],
                y: vec![0.0; m],
                s: vec![0.0; m],
                primal_residual: f64::INFINITY,
                dual_residual: f64::INFINITY,
                gap: f64::INFINITY,
                iterations: self.set.max_iter,
                objective: f64::NAN,
            },
        }
    }

    /// One splitting step with relaxation factor alpha.
    fn step(&self, it: &mut Iterate, alpha: f64) {
        let (n, m) = (self.n, self.m);
        // w = u + v (the v x-block is identically zero).
        let wx: Vec<f64> = it.ux.clone();
        let wy: Vec<f64> = it.uy.iter().zip(&it.vy).map(|(a, b)| a + b).collect();
        let wtau = it.utau + it.vkappa;

        // Affine step: (I + Q) u~ = w.
        let (px, py) = self.solve_m(&wx, &wy);
        let tau_t = (wtau + dot(&self.ch, &px) + dot(&self.bh, &py)) / self.gden;
        let utx: Vec<f64> = (0..n).map(|j| px[j] - self.gx[j] * tau_t).collect();
        let uty: Vec<f64> = (0..m).map(|i| py[i] - self.gy[i] * tau_t).collect();

        // Relaxed point r = alpha u~ + (1 - alpha) u.
        let rx: Vec<f64> = (0..n).map(|j| alpha * utx[j] + (1.0 - alpha) * it.ux[j]).collect();
        let ry: Vec<f64> = (0..m).map(|i| alpha * uty[i] + (1.0 - alpha) * it.uy[i]).collect();
        let rtau = alpha * tau_t + (1.0 - alpha) * it.utau;

        // Cone step: u = Pi_C(r - v); the x block is free so ux = rx.
        it.ux = rx;
        let mut zy: Vec<f64> = ry.iter().zip(&it.vy).map(|(a, b)| a - b).collect();
        for &(spec, off) in &self.segments {
            project_segment(&mut zy[off..off + spec.dim()], spec, true);
        }
        let ztau = (rtau - it.vkappa).max(0.0);

        // v = v - r + u.
        for i in 0..m {
            it.vy[i] += zy[i] - ry[i];
        }
        it.vkappa += ztau - rtau;
        it.uy = zy;
        it.utau = ztau;
    }

    /// Extract the scaled candidate and evaluate original-space residuals.
    fn extract(&self, it: &Iterate) -> Option<Extracted> {
        let umax = it
            .ux
            .iter()
            .chain(it.uy.iter())
            .map(|v| v.abs())
            .fold(it.utau.abs(), f64::max);
        if !(it.utau > 1e-12 && it.utau > 1e-9 * umax) {
            return None;
        }
        let tau = it.utau;
        let x: Vec<f64> =
            (0..self.n).map(|j| self.e[j] * it.ux[j] / (tau * self.sc_b)).collect();
        let y: Vec<f64> =
            (0..self.m).map(|i| self.d[i] * it.uy[i] / (tau * self.sc_c)).collect();
        let s: Vec<f64> =
            (0..self.m).map(|i| it.vy[i] / (tau * self.sc_b * self.d[i])).collect();

        let mut ax = vec![0.0; self.m];
        self.prob.a.matvec(&x, &mut ax);
        let pres = (0..self.m)
            .map(|i| {
                let r = ax[i] + s[i] - self.prob.b[i];
                r * r
            })
            .sum::<f64>()
            .sqrt()
            / (1.0 + self.norm_b);

        let mut aty = vec![0.0; self.n];
        self.prob.a.rmatvec(&y, &mut aty);
        let dres = (0..self.n)
            .map(|j| {
                let r = aty[j] + self.prob.c[j];
                r * r
            })
            .sum::<f64>()
            .sqrt()
            / (1.0 + self.norm_c);

        let ctx = dot(&self.prob.c, &x);
        let bty = dot(&self.prob.b, &y);
        let gap = (ctx + bty).abs() / (1.0 + ctx.abs() + bty.abs());

        Some(Extracted { x, y, s, pres, dres, gap })
    }

    /// Ray checks for infeasibility certificates.
    fn certificate(&self, it: &Iterate, iter: usize) -> Option<ConicSolution> {
        // Primal infeasibility: A'y = 0, y in K*, b'y < 0.
        let y: Vec<f64> =
            (0..self.m).map(|i| self.d[i] * it.uy[i] / self.sc_c).collect();
        let bty = dot(&self.prob.b, &y);
        if bty < -1e-12 {
            let mut aty = vec![0.0; self.n];
            self.prob.a.rmatvec(&y, &mut aty);
            if norm2(&aty) <= self.set.tol * (-bty) {
                let f = -1.0 / bty;
                let yc: Vec<f64> = y.iter().map(|v| v * f).collect();
                return Some(ConicSolution {
                    status: SolveStatus::PrimalInfeasible,
                    x: vec![0.0; self.n],
                    y: yc,
                    s: vec![0.0; self.m],
                    primal_residual: f64::INFINITY,
                    dual_residual: f64::NAN,
                    gap: f64::NAN,
                    iterations: iter,
                    objective: f64::NAN,
                });
            }
        }
        // Dual infeasibility: A x + s = 0 for some s in K, c'x < 0.
        let x: Vec<f64> =
            (0..self.n).map(|j| self.e[j] * it.ux[j] / self.sc_b).collect();
        let ctx = dot(&self.prob.c, &x);
        if ctx < -1e-12 {
            let mut ax = vec![0.0; self.m];
            self.prob.a.matvec(&x, &mut ax);
            let mut s: Vec<f64> = ax.iter().map(|v| -v).collect();
            for &(spec, off) in &self.segments {
                project_segment(&mut s[off..off + spec.dim()], spec, false);
            }
            let dist = (0..self.m)
                .map(|i| {
                    let r = s[i] + ax[i];
                    r * r
                })
                .sum::<f64>()
                .sqrt();
            if dist <= self.set.tol * (-ctx) {
                let f = -1.0 / ctx;
                let xc: Vec<f64> = x.iter().map(|v| v * f).collect();
                let sc: Vec<f64> = s.iter().map(|v| v * f).collect();
                return Some(ConicSolution {
                    status: SolveStatus::DualInfeasible,
                    x: xc,
                    y: vec![0.0; self.m],
                    s: sc,
                    primal_residual: f64::NAN,
                    dual_residual: f64::INFINITY,
                    gap: f64::NAN,
                    iterations: iter,
                    objective: f64::NEG_INFINITY,
                });
            }
        }
        None
    }

    fn finish(&self, status: SolveStatus, ext: Extracted, iterations: usize) -> ConicSolution {
        let objective = dot(&self.prob.c, &ext.x) + self.prob.obj_offset;
        ConicSolution {
            status,
            x: ext.x,
            y: ext.y,
            s: ext.s,
            primal_residual: ext.pres,
            dual_residual: ext.dres,
            gap: ext.gap,
            iterations,
            objective,
        }
    }
}

fn scalar_scale(norm: f64) -> f64 {
    if norm < 1e-9 {
        1.0
    } else {
        (1.0 / norm).clamp(1e-6, 1e6)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::builder::{LinExpr, ProblemBuilder};
    use crate::conic::cones::{mat_to_svec, svec_index, svec_len, svec_to_mat};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn solve(p: &ConicProblem) -> ConicSolution {
        solve_conic(p, 1e-8, 50_000)
    }

    #[test]
    fn scalar_lp_bound() {
        // min x subject to x >= 1.
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        bld.minimize(LinExpr::var(x));
        bld.require_ge0(LinExpr::var(x).shifted(-1.0));
        let p = bld.build().unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.x[0], 1.0, max_relative = 1e-6);
        assert_relative_eq!(sol.objective, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn psd_trace_with_fixed_corner() {
        // min tr(X) over 2x2 PSD with X00 = 1; optimum diag(1, 0).
        let mut bld = ProblemBuilder::new();
        let v = bld.vars("x", svec_len(2));
        bld.minimize(LinExpr::var(v[svec_index(0, 0)]).plus(&LinExpr::var(v[svec_index(1, 1)])));
        bld.require_eq0(LinExpr::var(v[svec_index(0, 0)]).shifted(-1.0));
        bld.require_psd_svec(2, v.iter().map(|&i| LinExpr::var(i)).collect());
        let p = bld.build().unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, 1.0, max_relative = 1e-6);
        let xm = svec_to_mat(&sol.x, 2);
        assert_relative_eq!(xm[(0, 0)], 1.0, max_relative = 1e-5);
        assert!(xm[(1, 1)].abs() < 1e-5);
    }

    #[test]
    fn soc_disk_constraint() {
        // min x + y over the unit disk centered at (3, 4):
        // optimum (3, 4) - (1, 1)/sqrt(2), objective 7 - sqrt(2).
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        let y = bld.var("y");
        bld.minimize(LinExpr::var(x).plus(&LinExpr::var(y)));
        bld.require_soc(
            LinExpr::constant(1.0),
            vec![LinExpr::var(x).shifted(-3.0), LinExpr::var(y).shifted(-4.0)],
        );
        let p = bld.build().unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, 7.0 - std::f64::consts::SQRT_2, max_relative = 1e-6);
    }

    #[test]
    fn hyperbolic_product_bound() {
        // min x + y subject to x y >= 4: optimum x = y = 2.
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        let y = bld.var("y");
        bld.minimize(LinExpr::var(x).plus(&LinExpr::var(y)));
        bld.require_product_ge(LinExpr::var(x), LinExpr::var(y), 4.0);
        let p = bld.build().unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, 4.0, max_relative = 1e-6);
        assert_relative_eq!(sol.x[0], 2.0, max_relative = 1e-4);
    }

    #[test]
    fn detects_primal_infeasible() {
        // x >= 1 and x <= 0 cannot hold together.
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        bld.minimize(LinExpr::var(x));
        bld.require_ge0(LinExpr::var(x).shifted(-1.0));
        bld.require_le(LinExpr::var(x), LinExpr::constant(0.0));
        let p = bld.build().unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
        // Certificate: y in K*, b'y = -1, A'y ~ 0.
        let bty: f64 = p.b.iter().zip(&sol.y).map(|(b, y)| b * y).sum();
        assert_relative_eq!(bty, -1.0, max_relative = 1e-9);
        let mut aty = vec![0.0; 1];
        p.a.rmatvec(&sol.y, &mut aty);
        assert!(aty[0].abs() <= 1e-7);
    }

    #[test]
    fn detects_unbounded_as_dual_infeasible() {
        // min -x subject to x >= 0.
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        bld.minimize(LinExpr::term(x, -1.0));
        bld.require_ge0(LinExpr::var(x));
        let p = bld.build().unwrap();
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::DualInfeasible);
        // Certificate ray: c'x = -1, A x + s = 0.
        let ctx: f64 = p.c.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
        assert_relative_eq!(ctx, -1.0, max_relative = 1e-9);
    }

    /// LP with a known optimum assembled from a complementary primal-dual
    /// pair: active rows get positive duals and zero slacks, inactive rows
    /// positive slacks and zero duals; then b = A x* + s*, c = -A' y*.
    fn constructed_lp(rng: &mut ChaCha8Rng, n: usize) -> (ConicProblem, Vec<f64>, f64) {
        let m = 2 * n;
        let mut triplets = Vec::new();
        let mut a_dense = vec![vec![0.0; n]; m];
        for (r, row) in a_dense.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = rng.random_range(-1.0..1.0);
                triplets.push((r, j, *v));
            }
        }
        let xstar: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut ystar = vec![0.0; m];
        let mut sstar = vec![0.0; m];
        for r in 0..m {
            if r < n {
                ystar[r] = rng.random_range(0.5..1.5);
            } else {
                sstar[r] = rng.random_range(0.5..1.5);
            }
        }
        let b: Vec<f64> = (0..m)
            .map(|r| a_dense[r].iter().zip(&xstar).map(|(a, x)| a * x).sum::<f64>() + sstar[r])
            .collect();
        let mut c = vec![0.0; n];
        for r in 0..m {
            for j in 0..n {
                c[j] -= a_dense[r][j] * ystar[r];
            }
        }
        let obj: f64 = c.iter().zip(&xstar).map(|(c, x)| c * x).sum();
        let a = CsrMatrix::from_triplets(m, n, &triplets).unwrap();
        let p = ConicProblem {
            c,
            a,
            b,
            cones: vec![ConeSpec::NonNeg(m)],
            var_names: (0..n).map(|j| format!("x[{j}]")).collect(),
            obj_offset: 0.0,
        };
        (p, xstar, obj)
    }

    #[test]
    fn constructed_lp_batch_reaches_known_optima() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..10 {
            let n = 3 + (trial % 6);
            let (p, _xstar, obj) = constructed_lp(&mut rng, n);
            let sol = solve(&p);
            assert_eq!(sol.status, SolveStatus::Optimal, "trial {trial}");
            assert_relative_eq!(sol.objective, obj, max_relative = 1e-5);
            assert!(sol.primal_residual <= 1e-6 && sol.dual_residual <= 1e-6);
            // Weak duality at the returned pair.
            let bty: f64 = p.b.iter().zip(&sol.y).map(|(b, y)| b * y).sum();
            let scale = 1.0 + sol.objective.abs() + bty.abs();
            assert!(sol.objective >= -bty - 1e-6 * scale);
        }
    }

    #[test]
    fn constructed_sdp_reaches_known_optimum() {
        // Complementary pair on a 3x3 PSD block with two trace equalities.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let side = 3;
        let n = svec_len(side);
        // Random orthogonal basis from one symmetric eigendecomposition.
        let raw = DMatrix::from_fn(side, side, |_, _| rng.random_range(-1.0..1.0));
        let q = (raw.clone() + raw.transpose()).symmetric_eigen().eigenvectors;
        let mut xm = DMatrix::zeros(side, side);
        let mut sm = DMatrix::zeros(side, side);
        for i in 0..side {
            let col = q.column(i);
            let outer = &col * col.transpose();
            if i < 2 {
                xm += outer * rng.random_range(0.5..1.5);
            } else {
                sm += outer * rng.random_range(0.5..1.5);
            }
        }
        let mut xv = vec![0.0; n];
        let mut sv = vec![0.0; n];
        mat_to_svec(&xm, &mut xv);
        mat_to_svec(&sm, &mut sv);

        let p_eq = 2;
        let mut triplets = Vec::new();
        let mut b = Vec::new();
        let mut y_eq = Vec::new();
        let mut g_rows = Vec::new();
        for r in 0..p_eq {
            let graw = DMatrix::from_fn(side, side, |_, _| rng.random_range(-1.0..1.0));
            let gsym = (graw.clone() + graw.transpose()) * 0.5;
            let mut gv = vec![0.0; n];
            mat_to_svec(&gsym, &mut gv);
            for (j, &v) in gv.iter().enumerate() {
                triplets.push((r, j, v));
            }
            b.push(gv.iter().zip(&xv).map(|(a, x)| a * x).sum::<f64>());
            y_eq.push(rng.random_range(-1.0..1.0));
            g_rows.push(gv);
        }
        // PSD rows: s = svec(X), i.e. A block = -I, b block = 0.
        for j in 0..n {
            triplets.push((p_eq + j, j, -1.0));
            b.push(0.0);
        }
        // c = -A' y with y = (y_eq, svec(S*)).
        let mut c = vec![0.0; n];
        for r in 0..p_eq {
            for j in 0..n {
                c[j] -= g_rows[r][j] * y_eq[r];
            }
        }
        for j in 0..n {
            c[j] += sv[j];
        }
        let obj: f64 = c.iter().zip(&xv).map(|(c, x)| c * x).sum();

        let a = CsrMatrix::from_triplets(p_eq + n, n, &triplets).unwrap();
        let p = ConicProblem {
            c,
            a,
            b,
            cones: vec![ConeSpec::Zero(p_eq), ConeSpec::Psd(side)],
            var_names: (0..n).map(|j| format!("x[{j}]")).collect(),
            obj_offset: 0.0,
        };
        let sol = solve(&p);
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_relative_eq!(sol.objective, obj, max_relative = 1e-5);
    }

    #[test]
    fn row_rescaling_leaves_solution_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (p, _x, obj) = constructed_lp(&mut rng, 5);
        let mut scaled = p.clone();
        for r in 0..scaled.a.nrows {
            let f = 10f64.powi((r % 7) as i32 - 3);
            scaled.a.scale_row(r, f);
            scaled.b[r] *= f;
        }
        let s0 = solve(&p);
        let s1 = solve(&scaled);
        assert_eq!(s1.status, SolveStatus::Optimal);
        assert_relative_eq!(s0.objective, s1.objective, max_relative = 1e-5);
        assert_relative_eq!(s0.objective, obj, max_relative = 1e-5);
        for j in 0..p.num_vars() {
            assert_relative_eq!(s0.x[j], s1.x[j], epsilon = 1e-4, max_relative = 1e-4);
        }
    }

    #[test]
    fn warm_start_converges_no_slower() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (p, _x, _obj) = constructed_lp(&mut rng, 8);
        let cold = solve(&p);
        assert_eq!(cold.status, SolveStatus::Optimal);
        let settings = SolverSettings { tol: 1e-8, max_iter: 50_000, ..Default::default() };
        let warm = solve_conic_warm(
            &p,
            &settings,
            Some(WarmStart { x: &cold.x, y: &cold.y, s: &cold.s }),
        );
        assert_eq!(warm.status, SolveStatus::Optimal);
        assert!(warm.iterations <= cold.iterations);
        assert_relative_eq!(warm.objective, cold.objective, max_relative = 1e-6);
    }
}
