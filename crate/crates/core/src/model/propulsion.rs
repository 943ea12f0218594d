//! Rotary-wing propulsion power and flight energy.
//!
//! Power is induced + parasite + blade-profile:
//!
//! ```text
//! P(v) = P_i * (sqrt(1 + v^4 / (4 v_0^4)) - v^2 / (2 v_0^2))^(1/2)
//!      + (1/2) d_0 rho s A v^3
//!      + P_b * (1 + 3 v^2 / U_tip^2)
//! ```
//!
//! Speeds come from consecutive slot positions, giving N-1 segment speeds;
//! the final slot contributes hover power (the boundary slot has no
//! displacement of its own).

use crate::config::ScenarioConfig;

/// Propulsion power at horizontal speed `v` (m/s), watts.
pub fn propulsion_power(v: f64, cfg: &ScenarioConfig) -> f64 {
    debug_assert!(v >= 0.0, "speed must be nonnegative");
    let v2 = v * v;
    let v0_2 = cfg.rotor_speed_mps * cfg.rotor_speed_mps;
    let induced_arg = (1.0 + v2 * v2 / (4.0 * v0_2 * v0_2)).sqrt() - v2 / (2.0 * v0_2);
    let induced = cfg.p_induced_w * induced_arg.max(0.0).sqrt();
    let parasite = 0.5
        * cfg.drag_ratio
        * cfg.air_density
        * cfg.rotor_solidity
        * cfg.rotor_area_m2
        * v2
        * v;
    let blade = cfg.p_blade_w * (1.0 + 3.0 * v2 / (cfg.tip_speed_mps * cfg.tip_speed_mps));
    induced + parasite + blade
}

/// Per-segment speeds `||q[n+1] - q[n]|| / slot_len`, length N-1.
pub fn segment_speeds(qs: &[[f64; 2]], slot_len_s: f64) -> Vec<f64> {
    qs.windows(2)
        .map(|w| super::dist2(w[0], w[1]).sqrt() / slot_len_s)
        .collect()
}

/// Total propulsion energy over the flight: one slot per segment speed,
/// plus hover for the final slot.
pub fn flight_energy(qs: &[[f64; 2]], cfg: &ScenarioConfig) -> f64 {
    let moving: f64 = segment_speeds(qs, cfg.slot_len_s)
        .iter()
        .map(|&v| cfg.slot_len_s * propulsion_power(v, cfg))
        .sum();
    moving + cfg.slot_len_s * propulsion_power(0.0, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cfg() -> ScenarioConfig {
        ScenarioConfig::preset("scenario1").unwrap()
    }

    #[test]
    fn hover_power_is_sum_of_hover_terms() {
        // P_i + P_b = 88.63 + 79.86.
        assert_relative_eq!(propulsion_power(0.0, &cfg()), 168.49, max_relative = 1e-12);
    }

    #[test]
    fn pinned_regression_values() {
        let c = cfg();
        assert_relative_eq!(propulsion_power(8.0, &c), 129.00785095199329, max_relative = 1e-12);
        assert_relative_eq!(propulsion_power(4.0, &c), 150.62615082761272, max_relative = 1e-12);
        assert_relative_eq!(propulsion_power(15.0, &c), 138.54774973861584, max_relative = 1e-12);
    }

    #[test]
    fn cubic_parasite_term_dominates_at_high_speed() {
        let c = cfg();
        let v = 1e3;
        let parasite = 0.5 * 0.6 * 1.225 * 0.05 * 0.503 * v * v * v;
        let ratio = parasite / propulsion_power(v, &c);
        assert!(ratio > 0.995 && ratio <= 1.0, "ratio {ratio}");
    }

    #[test]
    fn finite_difference_matches_analytic_slope() {
        use rand::{Rng, SeedableRng};
        let c = cfg();
        let analytic = |v: f64| {
            let v0_2 = c.rotor_speed_mps * c.rotor_speed_mps;
            let root = (1.0 + v.powi(4) / (4.0 * v0_2 * v0_2)).sqrt();
            let s = root - v * v / (2.0 * v0_2);
            let s_prime = v.powi(3) / (2.0 * v0_2 * v0_2 * root) - v / v0_2;
            c.p_induced_w * s_prime / (2.0 * s.sqrt())
                + 3.0 * 0.5 * c.drag_ratio * c.air_density * c.rotor_solidity * c.rotor_area_m2
                    * v
                    * v
                + 6.0 * c.p_blade_w * v / (c.tip_speed_mps * c.tip_speed_mps)
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let v: f64 = rng.random_range(0.05..30.0);
            let h = 1e-5 * v.max(1.0);
            let fd = (propulsion_power(v + h, &c) - propulsion_power(v - h, &c)) / (2.0 * h);
            assert_relative_eq!(fd, analytic(v), max_relative = 1e-6);
        }
    }

    #[test]
    fn hovering_flight_energy() {
        let c = cfg();
        let qs = vec![[5.0, 5.0]; c.num_slots];
        assert_relative_eq!(flight_energy(&qs, &c), 6739.6, max_relative = 1e-12);
    }

    #[test]
    fn segment_speeds_count_and_values() {
        let qs = vec![[0.0, 0.0], [3.0, 4.0], [3.0, 4.0]];
        let v = segment_speeds(&qs, 1.0);
        assert_eq!(v, vec![5.0, 0.0]);
    }
}
