//! Sample grid over the square eavesdropper uncertainty region.
//!
//! Worst-case constraints are enforced at a finite sample set: a G x G
//! uniform grid over the square, plus the center and the four corners
//! (always present, duplicates removed). The per-point quantities are
//! monotone in distance, so corners dominate most constraints; grid density
//! stays a config knob and the audit can re-check on a refined grid.

use crate::config::ScenarioConfig;

/// Finite stand-in for "every point of the uncertainty square".
#[derive(Debug, Clone, PartialEq)]
pub struct EveRegion {
    pub center: [f64; 2],
    pub half_side: f64,
    /// Deduplicated samples; corners and center always included.
    pub samples: Vec<[f64; 2]>,
}

impl EveRegion {
    /// Build the sample set for a square centered at `center` with half
    /// side `half_side`, using a `grid` x `grid` lattice when `grid >= 2`.
    /// `grid == 1` keeps only center and corners. A zero half side
    /// collapses everything to the center point.
    pub fn new(center: [f64; 2], half_side: f64, grid: usize) -> Self {
        let mut samples: Vec<[f64; 2]> = Vec::new();
        let mut push = |p: [f64; 2]| {
            let dup = samples
                .iter()
                .any(|q| (q[0] - p[0]).abs() < 1e-9 && (q[1] - p[1]).abs() < 1e-9);
            if !dup {
                samples.push(p);
            }
        };
        push(center);
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                push([center[0] + sx * half_side, center[1] + sy * half_side]);
            }
        }
        if grid >= 2 && half_side > 0.0 {
            let g = grid as f64;
            for i in 0..grid {
                for j in 0..grid {
                    let x = center[0] - half_side + 2.0 * half_side * i as f64 / (g - 1.0);
                    let y = center[1] - half_side + 2.0 * half_side * j as f64 / (g - 1.0);
                    push([x, y]);
                }
            }
        }
        EveRegion { center, half_side, samples }
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self::new(cfg.eve_center_m, cfg.eve_half_side_m, cfg.eve_grid_points)
    }

    /// Same square sampled with twice as many points per axis; used by the
    /// audit to estimate grid-induced drift.
    pub fn refined(&self, factor: usize) -> Self {
        let grid = ((self.samples.len() as f64).sqrt().round() as usize).max(2) * factor;
        Self::new(self.center, self.half_side, grid)
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
}
