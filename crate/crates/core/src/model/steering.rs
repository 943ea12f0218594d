//! Uniform-planar-array steering vectors.
//!
//! The array lies in the horizontal plane with half-wavelength element
//! spacing, so the phase of element (m_x, m_y) toward a ground point is
//! pi * (m_x * Phi + m_y * Omega) with direction cosines
//! Phi = (x_s - x_g) / d and Omega = (y_s - y_g) / d. Transmit and receive
//! arrays are identical, so one vector serves both roles.

use num_complex::Complex64;

use super::ModelError;

/// Antenna counts along the two array axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayDims {
    pub x: usize,
    pub y: usize,
}

impl ArrayDims {
    #[inline]
    pub fn total(&self) -> usize {
        self.x * self.y
    }
}

impl From<&crate::config::ScenarioConfig> for ArrayDims {
    fn from(cfg: &crate::config::ScenarioConfig) -> Self {
        ArrayDims { x: cfg.array_x, y: cfg.array_y }
    }
}

/// Array response toward one ground point.
///
/// Entries have unit modulus and squared norm exactly `M = dims.total()`.
/// Element (m_x, m_y) sits at flat index `m_x * dims.y + m_y` (Kronecker
/// product of the x-axis ramp with the y-axis ramp).
#[derive(Debug, Clone)]
pub struct SteeringVector {
    pub entries: Vec<Complex64>,
    /// Direction cosine along x, in [-1, 1].
    pub phi: f64,
    /// Direction cosine along y, in [-1, 1].
    pub omega: f64,
}

impl SteeringVector {
    /// Beampattern inner product `self^H W self` is computed elsewhere;
    /// here only the plain inner product with another steering vector.
    pub fn dot_h(&self, other: &SteeringVector) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

/// Steering vector of the UAV array at horizontal position `q_s` and
/// altitude `h` toward ground point `q_g`.
///
/// Errors with [`ModelError::ZeroDistance`] if the two points coincide at
/// zero altitude.
pub fn steering_vector(
    q_s: [f64; 2],
    q_g: [f64; 2],
    h: f64,
    dims: ArrayDims,
) -> Result<SteeringVector, ModelError> {
    let d = super::slant2(q_s, q_g, h).sqrt();
    if d <= 0.0 {
        return Err(ModelError::ZeroDistance);
    }
    let phi = (q_s[0] - q_g[0]) / d;
    let omega = (q_s[1] - q_g[1]) / d;
    let mut entries = Vec::with_capacity(dims.total());
    for mx in 0..dims.x {
        for my in 0..dims.y {
            let phase = std::f64::consts::PI * (mx as f64 * phi + my as f64 * omega);
            entries.push(Complex64::new(phase.cos(), phase.sin()));
        }
    }
    Ok(SteeringVector { entries, phi, omega })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const DIMS: ArrayDims = ArrayDims { x: 4, y: 4 };

    #[test]
    fn overhead_gives_all_ones() {
        let sv = steering_vector([30.0, -7.0], [30.0, -7.0], 50.0, DIMS).unwrap();
        assert_eq!(sv.phi, 0.0);
        assert_eq!(sv.omega, 0.0);
        for e in &sv.entries {
            assert_relative_eq!(e.re, 1.0, max_relative = 1e-15);
            assert!(e.im.abs() < 1e-15);
        }
    }

    #[test]
    fn single_element_is_scalar_one() {
        let sv =
            steering_vector([0.0, 0.0], [123.0, -45.0], 50.0, ArrayDims { x: 1, y: 1 }).unwrap();
        assert_eq!(sv.entries.len(), 1);
        assert_relative_eq!(sv.entries[0].re, 1.0);
        assert_relative_eq!(sv.entries[0].im, 0.0);
    }

    #[test]
    fn worked_example_direction_cosines_and_entries() {
        // UAV at origin, ground point (50, 25), altitude 50: slant 75 m.
        let sv = steering_vector([0.0, 0.0], [50.0, 25.0], 50.0, DIMS).unwrap();
        assert_relative_eq!(sv.phi, -2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(sv.omega, -1.0 / 3.0, max_relative = 1e-15);
        for mx in 0..4 {
            for my in 0..4 {
                let phase =
                    std::f64::consts::PI * (-(2.0 * mx as f64) / 3.0 - (my as f64) / 3.0);
                let e = sv.entries[mx * 4 + my];
                assert_relative_eq!(e.re, phase.cos(), epsilon = 1e-12);
                assert_relative_eq!(e.im, phase.sin(), epsilon = 1e-12);
            }
        }
        let norm2: f64 = sv.entries.iter().map(|e| e.norm_sqr()).sum();
        assert_relative_eq!(norm2, 16.0, max_relative = 1e-14);
    }

    #[test]
    fn zero_distance_rejected() {
        let err = steering_vector([1.0, 2.0], [1.0, 2.0], 0.0, DIMS).unwrap_err();
        assert_eq!(err, ModelError::ZeroDistance);
    }

    #[test]
    fn unit_modulus_and_norm_for_random_geometry() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let qs = [rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)];
            let qg = [rng.random_range(-300.0..300.0), rng.random_range(-300.0..300.0)];
            let dims = ArrayDims { x: rng.random_range(1..5), y: rng.random_range(1..5) };
            let sv = steering_vector(qs, qg, rng.random_range(1.0..120.0), dims).unwrap();
            assert!(sv.phi.abs() <= 1.0 && sv.omega.abs() <= 1.0);
            for e in &sv.entries {
                assert_relative_eq!(e.norm(), 1.0, max_relative = 1e-13);
            }
            let norm2: f64 = sv.entries.iter().map(|e| e.norm_sqr()).sum();
            assert_relative_eq!(norm2, dims.total() as f64, max_relative = 1e-12);
        }
    }
}
