//! Small cone-program solver: linear objective over affine constraints
//! intersected with zero, nonnegative, second-order, and PSD cones.
//!
//! Standard form:
//!
//! ```text
//! minimize    c'x
//! subject to  A x + s = b,   s in K
//! ```
//!
//! where K is an ordered product of cone segments. PSD segments store the
//! symmetric-matrix vectorization (column-major upper triangle) with
//! off-diagonal entries scaled by sqrt(2), so that inner products of
//! vectorizations equal matrix traces.
//!
//! The solve method is first-order operator splitting on the homogeneous
//! self-dual embedding (cone projections plus one cached factorization),
//! sized for PSD blocks of a few dozen rows and a few thousand variables.
//! Any external solver meeting the same residual contract could be swapped
//! in behind [`solve_conic`].

pub mod builder;
pub mod cones;
pub mod dump;
pub mod solver;

pub use builder::{LinExpr, ProblemBuilder};
pub use cones::ConeSpec;
pub use dump::dump_problem;
pub use solver::{solve_conic, solve_conic_warm, SolverSettings, WarmStart};

use thiserror::Error;

/// Compressed sparse row matrix; just enough for the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets; duplicate entries add up.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, ConicError> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(r, c, v) in triplets {
            if r >= nrows || c >= ncols {
                return Err(ConicError::Dimension(format!(
                    "triplet ({r}, {c}) outside {nrows} x {ncols}"
                )));
            }
            per_row[r].push((c, v));
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.iter().peekable();
            while let Some(&(c, v)) = iter.next() {
                let mut acc = v;
                while let Some(&&(c2, v2)) = iter.peek() {
                    if c2 == c {
                        acc += v2;
                        iter.next();
                    } else {
                        break;
                    }
                }
                indices.push(c);
                data.push(acc);
            }
            indptr.push(indices.len());
        }
        Ok(CsrMatrix { nrows, ncols, indptr, indices, data })
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(y.len(), self.nrows);
        for r in 0..self.nrows {
            let mut acc = 0.0;
            for k in self.indptr[r]..self.indptr[r + 1] {
                acc += self.data[k] * x[self.indices[k]];
            }
            y[r] = acc;
        }
    }

    /// x = A' y.
    pub fn rmatvec(&self, y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(y.len(), self.nrows);
        debug_assert_eq!(x.len(), self.ncols);
        x.fill(0.0);
        for r in 0..self.nrows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for k in self.indptr[r]..self.indptr[r + 1] {
                x[self.indices[k]] += self.data[k] * yr;
            }
        }
    }

    /// Scale row r by f (in place).
    pub fn scale_row(&mut self, r: usize, f: f64) {
        for k in self.indptr[r]..self.indptr[r + 1] {
            self.data[k] *= f;
        }
    }

    /// Scale every column j by f[j] (in place).
    pub fn scale_cols(&mut self, f: &[f64]) {
        for k in 0..self.data.len() {
            self.data[k] *= f[self.indices[k]];
        }
    }

    /// Infinity norm of row r.
    pub fn row_inf_norm(&self, r: usize) -> f64 {
        (self.indptr[r]..self.indptr[r + 1])
            .map(|k| self.data[k].abs())
            .fold(0.0, f64::max)
    }
}

/// Problem construction or validation failure.
#[derive(Debug, Error)]
pub enum ConicError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// A cone program in standard form.
#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    /// Ordered cone segments; dimensions must sum to the row count.
    pub cones: Vec<ConeSpec>,
    /// One name per variable, for diagnostics and dumps.
    pub var_names: Vec<String>,
    /// Constant added to c'x when reporting the objective.
    pub obj_offset: f64,
}

impl ConicProblem {
    pub fn validate(&self) -> Result<(), ConicError> {
        if self.a.ncols != self.c.len() {
            return Err(ConicError::Dimension(format!(
                "A has {} columns but c has {}",
                self.a.ncols,
                self.c.len()
            )));
        }
        if self.a.nrows != self.b.len() {
            return Err(ConicError::Dimension(format!(
                "A has {} rows but b has {}",
                self.a.nrows,
                self.b.len()
            )));
        }
        if self.var_names.len() != self.c.len() {
            return Err(ConicError::Dimension(format!(
                "{} variable names for {} variables",
                self.var_names.len(),
                self.c.len()
            )));
        }
        let cone_dim: usize = self.cones.iter().map(|k| k.dim()).sum();
        if cone_dim != self.a.nrows {
            return Err(ConicError::Dimension(format!(
                "cone dimensions sum to {cone_dim} but A has {} rows",
                self.a.nrows
            )));
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.b.len()
    }
}

/// Termination status of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// All three relative residuals within tolerance.
    Optimal,
    /// A certificate y with A'y = 0, y in K*, b'y < 0 was found.
    PrimalInfeasible,
    /// A certificate x with A x + s = 0, s in K, c'x < 0 was found
    /// (primal unbounded).
    DualInfeasible,
    /// Iteration budget exhausted; best iterate returned.
    MaxIter,
}

/// Primal-dual result with relative residuals.
#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// ||Ax + s - b|| / (1 + ||b||).
    pub primal_residual: f64,
    /// ||A'y + c|| / (1 + ||c||).
    pub dual_residual: f64,
    /// |c'x + b'y| / (1 + |c'x| + |b'y|).
    pub gap: f64,
    pub iterations: usize,
    /// c'x plus the problem's objective offset.
    pub objective: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csr_matvec_and_transpose() {
        // [[1, 2, 0], [0, 0, 3]]
        let a =
            CsrMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (0, 1, 2.0), (1, 2, 3.0)]).unwrap();
        let mut y = vec![0.0; 2];
        a.matvec(&[1.0, 1.0, 2.0], &mut y);
        assert_eq!(y, vec![3.0, 6.0]);
        let mut x = vec![0.0; 3];
        a.rmatvec(&[1.0, 2.0], &mut x);
        assert_eq!(x, vec![1.0, 2.0, 6.0]);
    }

    #[test]
    fn duplicate_triplets_accumulate() {
        let a = CsrMatrix::from_triplets(1, 1, &[(0, 0, 1.0), (0, 0, 2.5)]).unwrap();
        assert_eq!(a.data, vec![3.5]);
    }

    #[test]
    fn out_of_range_triplet_rejected() {
        assert!(CsrMatrix::from_triplets(1, 1, &[(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn validation_checks_cone_total() {
        let a = CsrMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap();
        let p = ConicProblem {
            c: vec![1.0],
            a,
            b: vec![0.0, 0.0],
            cones: vec![ConeSpec::NonNeg(1)],
            var_names: vec!["x".into()],
            obj_offset: 0.0,
        };
        assert!(p.validate().is_err());
    }
}
