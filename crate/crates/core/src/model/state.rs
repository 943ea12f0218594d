//! Solution state shared by all four optimization blocks.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::ScenarioConfig;

/// One slot's sensing covariance W = E{w w^H}, complex Hermitian PSD,
/// entries in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamCovariance(pub DMatrix<Complex64>);

impl BeamCovariance {
    pub fn zeros(m: usize) -> Self {
        BeamCovariance(DMatrix::zeros(m, m))
    }

    /// Rank-one covariance w w^H from a beam vector.
    pub fn from_beam(w: &DVector<Complex64>) -> Self {
        let m = w.len();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = w[i] * w[j].conj();
            }
        }
        BeamCovariance(out)
    }

    pub fn side(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        (0..self.side()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Force exact Hermitian symmetry (average with the adjoint).
    pub fn hermitize(&mut self) {
        let adj = self.0.adjoint();
        self.0 = (&self.0 + adj) * Complex64::new(0.5, 0.0);
    }

    /// Largest relative Hermitian asymmetry, |W - W^H| / max(|W|, eps).
    pub fn hermitian_error(&self) -> f64 {
        let scale = self.0.iter().map(|z| z.norm()).fold(0.0f64, f64::max).max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..self.side() {
            for j in 0..self.side() {
                let d = (self.0[(i, j)] - self.0[(j, i)].conj()).norm();
                worst = worst.max(d / scale);
            }
        }
        worst
    }

    /// Smallest eigenvalue via the real symmetric embedding
    /// [[Re, -Im], [Im, Re]] (same spectrum, doubled multiplicity).
    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.side();
        if m == 0 {
            return 0.0;
        }
        let mut real = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let z = self.0[(i, j)];
                real[(i, j)] = z.re;
                real[(i + m, j + m)] = z.re;
                real[(i, j + m)] = -z.im;
                real[(i + m, j)] = z.im;
            }
        }
        // Symmetrize against roundoff before the eigensolve.
        let sym = (&real + real.transpose()) * 0.5;
        let eig = sym.symmetric_eigen();
        eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Slack values produced by the convex subproblems, kept for diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SlackBundle {
    /// Per-(user, slot) offload-energy epigraph values from the
    /// beamforming step, joules.
    pub eta: Vec<Vec<f64>>,
    /// Per-(user, slot) offload-energy epigraph values from the trajectory
    /// step, joules.
    pub tau: Vec<Vec<f64>>,
    /// Per-slot inverse squared user distance surrogate, 1/m^2.
    pub d_sk: Vec<f64>,
    /// Per-slot worst-case round-trip interference surrogate, watts.
    pub d_se: Vec<f64>,
    /// Per-segment speed upper slack, m/s.
    pub v1: Vec<f64>,
    /// Per-segment induced-power slack, dimensionless.
    pub v2: Vec<f64>,
}

/// The four optimization blocks plus slacks.
///
/// `a[(k, n)]` is the offload ratio of user k in slot n; `b[(k, n)]` is the
/// scheduling indicator (binary after rounding); `w[n]` the sensing
/// covariance; `qs[n]` the UAV position.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: Vec<BeamCovariance>,
    /// Recovered rank-one beams where Gaussian randomization succeeded.
    pub beams: Vec<Option<DVector<Complex64>>>,
    pub qs: Vec<[f64; 2]>,
    pub slacks: SlackBundle,
}

impl SolutionState {
    /// All-zero allocation on a hovering-at-start trajectory.
    pub fn empty(cfg: &ScenarioConfig) -> Self {
        let k = cfg.num_users;
        let n = cfg.num_slots;
        SolutionState {
            a: DMatrix::zeros(k, n),
            b: DMatrix::zeros(k, n),
            w: (0..n).map(|_| BeamCovariance::zeros(cfg.m())).collect(),
            beams: vec![None; n],
            qs: vec![cfg.uav_start_m; n],
            slacks: SlackBundle::default(),
        }
    }

    /// Index of the single scheduled user in slot n, if any.
    pub fn active_user(&self, n: usize) -> Option<usize> {
        (0..self.a.nrows()).find(|&k| self.b[(k, n)] > 0.5)
    }

    /// Whether the sensing beam transmits in slot n (some user scheduled).
    pub fn slot_active(&self, n: usize) -> bool {
        self.active_user(n).is_some()
    }

    /// Offloaded task fraction of user k across the flight.
    pub fn offload_total(&self, k: usize) -> f64 {
        (0..self.a.ncols()).map(|n| self.b[(k, n)] * self.a[(k, n)]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rank_one_covariance_matches_outer_product() {
        let w = DVector::from_vec(vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.25),
        ]);
        let cov = BeamCovariance::from_beam(&w);
        assert_relative_eq!(cov.trace(), w.iter().map(|z| z.norm_sqr()).sum::<f64>());
        assert!(cov.hermitian_error() < 1e-15);
        assert!(cov.min_eigenvalue() > -1e-12);
    }

    #[test]
    fn min_eigenvalue_detects_indefiniteness() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = Complex64::new(1.0, 0.0);
        m[(1, 1)] = Complex64::new(-3.0, 0.0);
        let cov = BeamCovariance(m);
        assert_relative_eq!(cov.min_eigenvalue(), -3.0, max_relative = 1e-12);
    }

    #[test]
    fn active_user_reads_scheduling_matrix() {
        let cfg = crate::config::ScenarioConfig::preset("scenario1").unwrap();
        let mut st = SolutionState::empty(&cfg);
        assert_eq!(st.active_user(0), None);
        st.b[(2, 5)] = 1.0;
        assert_eq!(st.active_user(5), Some(2));
        assert!(st.slot_active(5));
        st.a[(2, 5)] = 0.25;
        assert_relative_eq!(st.offload_total(2), 0.25);
    }
}
