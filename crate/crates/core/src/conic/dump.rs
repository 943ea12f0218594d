//! Plain-text listing of an assembled cone program, for debugging and for
//! the CLI audit path.
//!
//! Format, line by line:
//!
//! ```text
//! conic-program vars=<n> rows=<m> offset=<obj_offset>
//! var <index> <name>
//! objective <index> <coef>          (nonzeros only)
//! cone <family> <dim-or-side> rows <start>..<end>
//! a <row> <col> <value>             (nonzeros, row-major)
//! b <row> <value>                   (nonzeros only)
//! ```

use super::cones::ConeSpec;
use super::ConicProblem;
use std::fmt::Write;

/// Render the problem in the documented listing format.
pub fn dump_problem(p: &ConicProblem) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "conic-program vars={} rows={} offset={:e}",
        p.num_vars(),
        p.num_rows(),
        p.obj_offset
    )
    .unwrap();
    for (j, name) in p.var_names.iter().enumerate() {
        writeln!(out, "var {j} {name}").unwrap();
    }
    for (j, &cj) in p.c.iter().enumerate() {
        if cj != 0.0 {
            writeln!(out, "objective {j} {cj:e}").unwrap();
        }
    }
    let mut off = 0;
    for k in &p.cones {
        let (family, size) = match *k {
            ConeSpec::Zero(d) => ("zero", d),
            ConeSpec::NonNeg(d) => ("nonneg", d),
            ConeSpec::Soc(d) => ("soc", d),
            ConeSpec::Psd(side) => ("psd", side),
        };
        writeln!(out, "cone {family} {size} rows {off}..{}", off + k.dim()).unwrap();
        off += k.dim();
    }
    for r in 0..p.a.nrows {
        for idx in p.a.indptr[r]..p.a.indptr[r + 1] {
            writeln!(out, "a {r} {} {:e}", p.a.indices[idx], p.a.data[idx]).unwrap();
        }
    }
    for (r, &br) in p.b.iter().enumerate() {
        if br != 0.0 {
            writeln!(out, "b {r} {br:e}").unwrap();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conic::builder::{LinExpr, ProblemBuilder};

    #[test]
    fn listing_contains_structure() {
        let mut bld = ProblemBuilder::new();
        let x = bld.var("power");
        bld.minimize(LinExpr::term(x, 2.0));
        bld.require_ge0(LinExpr::var(x).shifted(-1.0));
        let p = bld.build().unwrap();
        let text = dump_problem(&p);
        assert!(text.starts_with("conic-program vars=1 rows=1"));
        assert!(text.contains("var 0 power"));
        assert!(text.contains("objective 0 2e0"));
        assert!(text.contains("cone nonneg 1 rows 0..1"));
        assert!(text.contains("a 0 0 -1e0"));
        assert!(text.contains("b 0 -1e0"));
    }
}
