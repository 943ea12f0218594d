//! Scratch reproduction of the trajectory stall; delete before shipping.

use iscc_core::{run_algorithm1, ScenarioConfig, Scheme};

fn main() {
    let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
    cfg.num_slots = 6;
    cfg.total_time_s = 6.0;
    cfg.uav_end_m = [28.0, 28.0];
    cfg.user_pos_m = vec![[10.0, 5.0], [15.0, 20.0], [5.0, 15.0], [20.0, 10.0]];
    cfg.eve_center_m = [60.0, 60.0];
    cfg.eve_grid_points = 2;
    cfg.conv_tol = f64::INFINITY;
    cfg.validate().unwrap();
    let (_, trace) = run_algorithm1(&cfg, Scheme::Proposed, 1, 11).unwrap();
    eprintln!("{trace:#?}");
}
