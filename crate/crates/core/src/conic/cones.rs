//! Cone segment descriptions and Euclidean projections.

use nalgebra::DMatrix;

/// One segment of the product cone K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeSpec {
    /// {0}^n, used for equality rows.
    Zero(usize),
    /// Nonnegative orthant of the given dimension.
    NonNeg(usize),
    /// Second-order cone { (t, z) : ||z|| <= t } of the given total
    /// dimension (head included).
    Soc(usize),
    /// PSD cone of symmetric side-by-side matrices, stored as the scaled
    /// upper-triangle vectorization; the payload is the matrix side.
    Psd(usize),
}

impl ConeSpec {
    /// Number of rows the segment occupies.
    pub fn dim(&self) -> usize {
        match *self {
            ConeSpec::Zero(n) | ConeSpec::NonNeg(n) | ConeSpec::Soc(n) => n,
            ConeSpec::Psd(side) => svec_len(side),
        }
    }
}

/// Length of the scaled vectorization of a symmetric side x side matrix.
pub fn svec_len(side: usize) -> usize {
    side * (side + 1) / 2
}

/// Pack a symmetric matrix into its scaled vectorization: column-major
/// upper triangle, off-diagonal entries times sqrt(2). With this scaling
/// dot(svec(A), svec(B)) = trace(A B).
pub fn mat_to_svec(m: &DMatrix<f64>, out: &mut [f64]) {
    let side = m.nrows();
    debug_assert_eq!(m.ncols(), side);
    debug_assert_eq!(out.len(), svec_len(side));
    let rt2 = std::f64::consts::SQRT_2;
    let mut k = 0;
    for j in 0..side {
        for i in 0..=j {
            out[k] = if i == j { m[(i, j)] } else { rt2 * m[(i, j)] };
            k += 1;
        }
    }
}

/// Inverse of [`mat_to_svec`].
pub fn svec_to_mat(v: &[f64], side: usize) -> DMatrix<f64> {
    debug_assert_eq!(v.len(), svec_len(side));
    let rt2 = std::f64::consts::SQRT_2;
    let mut m = DMatrix::zeros(side, side);
    let mut k = 0;
    for j in 0..side {
        for i in 0..=j {
            if i == j {
                m[(i, j)] = v[k];
            } else {
                let x = v[k] / rt2;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
            k += 1;
        }
    }
    m
}

/// Index of matrix entry (i, j), i <= j, inside the vectorization.
pub fn svec_index(i: usize, j: usize) -> usize {
    debug_assert!(i <= j);
    j * (j + 1) / 2 + i
}

/// Project one segment in place. `dual` selects the dual cone, which only
/// differs for Zero (its dual is the free cone); the others are self-dual.
pub fn project_segment(z: &mut [f64], spec: ConeSpec, dual: bool) {
    match spec {
        ConeSpec::Zero(_) => {
            if !dual {
                z.fill(0.0);
            }
        }
        ConeSpec::NonNeg(_) => {
            for v in z.iter_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        ConeSpec::Soc(_) => project_soc(z),
        ConeSpec::Psd(side) => project_psd(z, side),
    }
}

fn project_soc(z: &mut [f64]) {
    if z.is_empty() {
        return;
    }
    let t = z[0];
    let norm = z[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm <= t {
        return;
    }
    if norm <= -t {
        z.fill(0.0);
        return;
    }
    let lambda = 0.5 * (t + norm);
    z[0] = lambda;
    let f = lambda / norm;
    for v in &mut z[1..] {
        *v *= f;
    }
}

fn project_psd(z: &mut [f64], side: usize) {
    if side == 0 {
        return;
    }
    if side == 1 {
        if z[0] < 0.0 {
            z[0] = 0.0;
        }
        return;
    }
    let m = svec_to_mat(z, side);
    let eig = m.symmetric_eigen();
    let mut out = DMatrix::zeros(side, side);
    for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 0.0 {
            let v = eig.eigenvectors.column(idx);
            // out += lam * v v'
            for j in 0..side {
                let vj = v[j] * lam;
                for i in 0..side {
                    out[(i, j)] += v[i] * vj;
                }
            }
        }
    }
    mat_to_svec(&out, z);
}
