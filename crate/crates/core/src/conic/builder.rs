//! Incremental construction of cone programs from affine expressions.
//!
//! Rows are collected per cone family and emitted in a fixed order
//! (equalities, inequalities, second-order cones, PSD blocks) so that the
//! assembled problem has a canonical layout independent of insertion order.

use super::cones::{svec_len, ConeSpec};
use super::{ConicError, ConicProblem, CsrMatrix};

/// Sparse affine expression `sum coef_i * x_i + constant`.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr { terms: Vec::new(), constant: c }
    }

    pub fn var(v: usize) -> Self {
        LinExpr { terms: vec![(v, 1.0)], constant: 0.0 }
    }

    pub fn term(v: usize, coef: f64) -> Self {
        LinExpr { terms: vec![(v, coef)], constant: 0.0 }
    }

    /// self + f * other.
    pub fn plus_scaled(mut self, other: &LinExpr, f: f64) -> Self {
        self.constant += f * other.constant;
        self.terms.extend(other.terms.iter().map(|&(v, c)| (v, f * c)));
        self
    }

    pub fn plus(self, other: &LinExpr) -> Self {
        self.plus_scaled(other, 1.0)
    }

    pub fn minus(self, other: &LinExpr) -> Self {
        self.plus_scaled(other, -1.0)
    }

    pub fn scaled(mut self, f: f64) -> Self {
        self.constant *= f;
        for t in &mut self.terms {
            t.1 *= f;
        }
        self
    }

    pub fn shifted(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    /// Merge duplicate variables, dropping exact zeros.
    fn compact(mut self) -> Self {
        self.terms.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0.0);
        self.terms = out;
        self
    }
}

/// Collects variables, objective, and cone rows, then assembles a
/// [`ConicProblem`].
#[derive(Debug, Default)]
pub struct ProblemBuilder {
    names: Vec<String>,
    objective: LinExpr,
    eq_rows: Vec<LinExpr>,
    nonneg_rows: Vec<LinExpr>,
    soc_blocks: Vec<Vec<LinExpr>>,
    psd_blocks: Vec<(usize, Vec<LinExpr>)>,
}

impl ProblemBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Register a variable and return its index.
    pub fn var(&mut self, name: impl Into<String>) -> usize {
        self.names.push(name.into());
        self.names.len() - 1
    }

    /// Register `count` variables named `prefix[0..count]`.
    pub fn vars(&mut self, prefix: &str, count: usize) -> Vec<usize> {
        (0..count).map(|i| self.var(format!("{prefix}[{i}]"))).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Set the minimization objective.
    pub fn minimize(&mut self, expr: LinExpr) {
        self.objective = expr.compact();
    }

    /// expr == 0.
    pub fn require_eq0(&mut self, expr: LinExpr) {
        self.eq_rows.push(expr.compact());
    }

    /// lhs == rhs.
    pub fn require_eq(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.require_eq0(lhs.minus(&rhs));
    }

    /// expr >= 0.
    pub fn require_ge0(&mut self, expr: LinExpr) {
        self.nonneg_rows.push(expr.compact());
    }

    /// lhs <= rhs.
    pub fn require_le(&mut self, lhs: LinExpr, rhs: LinExpr) {
        self.require_ge0(rhs.minus(&lhs));
    }

    /// ||(tail...)|| <= head.
    pub fn require_soc(&mut self, head: LinExpr, tail: Vec<LinExpr>) {
        let mut block = Vec::with_capacity(tail.len() + 1);
        block.push(head.compact());
        block.extend(tail.into_iter().map(LinExpr::compact));
        self.soc_blocks.push(block);
    }

    /// Rotated cone 2 p q >= ||z||^2 with p, q >= 0, rewritten as a
    /// second-order cone on ((p+q)/sqrt2, (p-q)/sqrt2, z).
    pub fn require_rsoc(&mut self, p: LinExpr, q: LinExpr, z: Vec<LinExpr>) {
        let inv = std::f64::consts::FRAC_1_SQRT_2;
        let head = p.clone().plus(&q).scaled(inv);
        let mut tail = vec![p.minus(&q).scaled(inv)];
        tail.extend(z);
        self.require_soc(head, tail);
    }

    /// Hyperbolic constraint x y >= k with x, y >= 0 and constant k >= 0.
    pub fn require_product_ge(&mut self, x: LinExpr, y: LinExpr, k: f64) {
        assert!(k >= 0.0, "product lower bound must be nonnegative");
        self.require_rsoc(x, y, vec![LinExpr::constant((2.0 * k).sqrt())]);
    }

    /// Quadratic epigraph t >= ||z||^2 via the rotated cone 2 t (1/2) >= ||z||^2.
    pub fn require_sq_le(&mut self, z: Vec<LinExpr>, t: LinExpr) {
        self.require_rsoc(t, LinExpr::constant(0.5), z);
    }

    /// Symmetric PSD block of the given side; `entries` holds the scaled
    /// upper-triangle vectorization expressions (see the cones module).
    pub fn require_psd_svec(&mut self, side: usize, entries: Vec<LinExpr>) {
        assert_eq!(entries.len(), svec_len(side), "svec length mismatch");
        self.psd_blocks
            .push((side, entries.into_iter().map(LinExpr::compact).collect()));
    }

    /// Assemble the problem. Row order: equalities, inequalities,
    /// second-order blocks, PSD blocks.
    pub fn build(self) -> Result<ConicProblem, ConicError> {
        let n = self.names.len();
        let mut c = vec![0.0; n];
        for &(v, coef) in &self.objective.terms {
            if v >= n {
                return Err(ConicError::Dimension(format!(
                    "objective references variable {v} of {n}"
                )));
            }
            c[v] += coef;
        }

        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b = Vec::new();
        let mut cones = Vec::new();
        let mut row = 0usize;

        // s = b - A x must reproduce the expression, so A gets the negated
        // coefficients and b the constant.
        let push_expr = |expr: &LinExpr,
                             triplets: &mut Vec<(usize, usize, f64)>,
                             b: &mut Vec<f64>,
                             row: &mut usize|
         -> Result<(), ConicError> {
            for &(v, coef) in &expr.terms {
                if v >= n {
                    return Err(ConicError::Dimension(format!(
                        "row references variable {v} of {n}"
                    )));
                }
                triplets.push((*row, v, -coef));
            }
            b.push(expr.constant);
            *row += 1;
            Ok(())
        };

        if !self.eq_rows.is_empty() {
            cones.push(ConeSpec::Zero(self.eq_rows.len()));
            for e in &self.eq_rows {
                push_expr(e, &mut triplets, &mut b, &mut row)?;
            }
        }
        if !self.nonneg_rows.is_empty() {
            cones.push(ConeSpec::NonNeg(self.nonneg_rows.len()));
            for e in &self.nonneg_rows {
                push_expr(e, &mut triplets, &mut b, &mut row)?;
            }
        }
        for block in &self.soc_blocks {
            cones.push(ConeSpec::Soc(block.len()));
            for e in block {
                push_expr(e, &mut triplets, &mut b, &mut row)?;
            }
        }
        for (side, entries) in &self.psd_blocks {
            cones.push(ConeSpec::Psd(*side));
            for e in entries {
                push_expr(e, &mut triplets, &mut b, &mut row)?;
            }
        }

        let a = CsrMatrix::from_triplets(row, n, &triplets)?;
        let p = ConicProblem {
            c,
            a,
            b,
            cones,
            var_names: self.names,
            obj_offset: self.objective.constant,
        };
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn expr_algebra_compacts_terms() {
        let e = LinExpr::term(0, 2.0)
            .plus(&LinExpr::term(0, 3.0))
            .plus_scaled(&LinExpr::var(1), -1.0)
            .shifted(4.0)
            .compact();
        assert_eq!(e.terms, vec![(0, 5.0), (1, -1.0)]);
        assert_relative_eq!(e.constant, 4.0);
    }

    #[test]
    fn build_maps_expression_to_negated_row() {
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        bld.minimize(LinExpr::var(x));
        // x - 1 >= 0.
        bld.require_ge0(LinExpr::var(x).shifted(-1.0));
        let p = bld.build().unwrap();
        assert_eq!(p.cones, vec![ConeSpec::NonNeg(1)]);
        // s = b - A x = -1 + x.
        assert_eq!(p.b, vec![-1.0]);
        assert_eq!(p.a.data, vec![-1.0]);
    }

    #[test]
    fn rsoc_rewrite_preserves_membership() {
        // p = 2, q = 1, z = 2: 2 p q = 4 = ||z||^2, boundary point.
        let mut bld = ProblemBuilder::new();
        let p = bld.var("p");
        let q = bld.var("q");
        bld.require_rsoc(LinExpr::var(p), LinExpr::var(q), vec![LinExpr::constant(2.0)]);
        let prob = bld.build().unwrap();
        // Evaluate s = b - A x at (p, q) = (2, 1).
        let x = vec![2.0, 1.0];
        let mut ax = vec![0.0; prob.num_rows()];
        prob.a.matvec(&x, &mut ax);
        let s: Vec<f64> = prob.b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let head = s[0];
        let tail = (s[1] * s[1] + s[2] * s[2]).sqrt();
        assert_relative_eq!(head, tail, max_relative = 1e-12);
    }

    #[test]
    fn row_order_is_family_grouped() {
        let mut bld = ProblemBuilder::new();
        let x = bld.var("x");
        bld.require_soc(LinExpr::constant(1.0), vec![LinExpr::var(x)]);
        bld.require_ge0(LinExpr::var(x));
        bld.require_eq0(LinExpr::var(x).shifted(-1.0));
        let p = bld.build().unwrap();
        assert_eq!(
            p.cones,
            vec![ConeSpec::Zero(1), ConeSpec::NonNeg(1), ConeSpec::Soc(2)]
        );
    }

    #[test]
    fn unknown_variable_rejected_at_build() {
        let mut bld = ProblemBuilder::new();
        let _x = bld.var("x");
        bld.require_ge0(LinExpr::term(5, 1.0));
        assert!(bld.build().is_err());
    }
}
