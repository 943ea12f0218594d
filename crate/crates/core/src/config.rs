//! Scenario parameters: physical constants, geometry, thresholds, limits.
//!
//! All values are stored in linear SI units (watts, meters, joules, hertz).
//! Config files may state power-like quantities in dB/dBm; conversion to
//! linear happens once at load time and never afterwards.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

/// Everything a run needs to know about the world.
///
/// Field names carry units. Power ratios (`ref_gain`, `gamma_*`) are linear.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Number of ground users K.
    pub num_users: usize,
    /// Number of time slots N.
    pub num_slots: usize,
    /// Slot duration delta_t in seconds.
    pub slot_len_s: f64,
    /// Total flight time T in seconds; must equal N * delta_t.
    pub total_time_s: f64,
    /// Constant flight altitude H in meters.
    pub altitude_m: f64,
    /// Maximum UAV speed in m/s.
    pub v_max_mps: f64,
    /// Start of the flight path (x, y) in meters.
    pub uav_start_m: [f64; 2],
    /// End of the flight path (x, y) in meters.
    pub uav_end_m: [f64; 2],
    /// Ground user positions, one (x, y) pair per user, meters.
    pub user_pos_m: Vec<[f64; 2]>,
    /// Center of the square eavesdropper uncertainty region, meters.
    pub eve_center_m: [f64; 2],
    /// Half side length of the uncertainty square, meters.
    pub eve_half_side_m: f64,
    /// Reference channel gain at 1 m, linear power ratio.
    pub ref_gain: f64,
    /// Radar cross-section, dimensionless.
    pub rcs: f64,
    /// Uplink bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// User transmit power P_u in watts.
    pub user_tx_power_w: f64,
    /// Receiver noise power at the UAV, watts.
    pub noise_s_w: f64,
    /// Receiver noise power at the eavesdropper, watts.
    pub noise_e_w: f64,
    /// Minimum legitimate uplink SINR, linear.
    pub gamma_s: f64,
    /// Maximum tolerated eavesdropper SINR, linear.
    pub gamma_e: f64,
    /// Beampattern-gain threshold per square meter of range, linear.
    pub gamma_sen: f64,
    /// Task size D_k in bits (identical across users).
    pub task_bits: f64,
    /// CPU cycles per bit at a user, F_k.
    pub cycles_per_bit_user: f64,
    /// CPU cycles per bit at the UAV server, F_s.
    pub cycles_per_bit_uav: f64,
    /// User CPU frequency f_k in cycles/s.
    pub cpu_freq_user_hz: f64,
    /// UAV server CPU frequency f_s in cycles/s.
    pub cpu_freq_uav_hz: f64,
    /// CPU energy-efficiency coefficient kappa in J*s^2/cycle^3.
    pub cpu_eff: f64,
    /// Per-slot transmit power cap for the sensing beam, watts.
    pub p_max_w: f64,
    /// UAV battery budget in joules.
    pub e_max_j: f64,
    /// Antenna elements along x, M_x.
    pub array_x: usize,
    /// Antenna elements along y, M_y.
    pub array_y: usize,
    /// Element spacing over wavelength; the phase model assumes 1/2.
    pub antenna_spacing_ratio: f64,
    /// Blade-profile hover power P_b, watts.
    pub p_blade_w: f64,
    /// Induced hover power P_i, watts.
    pub p_induced_w: f64,
    /// Rotor tip speed U_tip, m/s.
    pub tip_speed_mps: f64,
    /// Mean rotor induced speed in hover v_0, m/s.
    pub rotor_speed_mps: f64,
    /// Fuselage drag ratio d_0.
    pub drag_ratio: f64,
    /// Air density rho, kg/m^3.
    pub air_density: f64,
    /// Rotor solidity s.
    pub rotor_solidity: f64,
    /// Rotor disc area A, m^2.
    pub rotor_area_m2: f64,
    /// Convergence tolerance epsilon for the outer loop, joules.
    pub conv_tol: f64,
    /// Eavesdropper-region grid points per axis, G.
    pub eve_grid_points: usize,
    /// Require local computing to finish within the flight time.
    ///
    /// Off by default: with the stock parameter set the deadline needs at
    /// least 80% of every task offloaded, which exceeds the UAV compute and
    /// battery budget, making every scenario infeasible. The constraint
    /// machinery stays available for parameter sets where it can bind.
    pub enforce_deadline: bool,
    /// Initialize the trajectory as a closed tour through the users
    /// instead of the straight start-to-end line. Meant for configurations
    /// whose start and end coincide.
    pub init_tour: bool,
}

/// Convert a dB power ratio to linear.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert dBm to watts.
#[inline]
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key `{0}`")]
    Missing(String),
    #[error("unknown key `{0}`")]
    Unknown(String),
    #[error("invalid `{key}`: {msg}")]
    Invalid { key: String, msg: String },
    #[error("unknown preset `{0}` (available: scenario1, scenario2, scenario3)")]
    UnknownPreset(String),
}

impl ScenarioConfig {
    /// Shared baseline: all non-geometry parameters of the stock setup.
    /// Geometry fields carry the first preset's values; tests override them.
    pub fn baseline() -> Self {
        ScenarioConfig {
            num_users: 4,
            num_slots: 40,
            slot_len_s: 1.0,
            total_time_s: 40.0,
            altitude_m: 50.0,
            v_max_mps: 8.0,
            uav_start_m: [0.0, 0.0],
            uav_end_m: [0.0, 0.0],
            user_pos_m: vec![],
            eve_center_m: [0.0, 0.0],
            eve_half_side_m: 10.0,
            ref_gain: db_to_linear(-30.0),
            rcs: 1.0,
            bandwidth_hz: 1e6,
            user_tx_power_w: 0.1,
            noise_s_w: dbm_to_watts(-90.0),
            noise_e_w: dbm_to_watts(-90.0),
            gamma_s: db_to_linear(7.0),
            gamma_e: db_to_linear(-10.0),
            gamma_sen: db_to_linear(-50.0),
            task_bits: 2e7,
            cycles_per_bit_user: 1000.0,
            cycles_per_bit_uav: 1000.0,
            cpu_freq_user_hz: 1e8,
            cpu_freq_uav_hz: 5e9,
            cpu_eff: 1e-26,
            p_max_w: dbm_to_watts(37.0),
            e_max_j: 20000.0,
            array_x: 4,
            array_y: 4,
            antenna_spacing_ratio: 0.5,
            p_blade_w: 79.86,
            p_induced_w: 88.63,
            tip_speed_mps: 120.0,
            rotor_speed_mps: 4.03,
            drag_ratio: 0.6,
            air_density: 1.225,
            rotor_solidity: 0.05,
            rotor_area_m2: 0.503,
            conv_tol: 0.001,
            eve_grid_points: 5,
            enforce_deadline: false,
            init_tour: false,
        }
    }

    /// Named preset. `scenario1`: straight flight past users on one side of
    /// the eavesdropper; `scenario2`: trapezoidal user layout around it;
    /// `scenario3`: closed counterclockwise tour of a user rectangle.
    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::baseline();
        match name {
            "scenario1" => {
                cfg.uav_start_m = [0.0, 0.0];
                cfg.uav_end_m = [200.0, 200.0];
                cfg.v_max_mps = 8.0;
                cfg.eve_center_m = [100.0, 100.0];
                cfg.user_pos_m = vec![[50.0, 25.0], [100.0, 40.0], [150.0, 70.0], [175.0, 150.0]];
            }
            "scenario2" => {
                cfg.uav_start_m = [0.0, 0.0];
                cfg.uav_end_m = [200.0, 0.0];
                cfg.v_max_mps = 8.0;
                cfg.eve_center_m = [100.0, 40.0];
                cfg.user_pos_m = vec![[20.0, 20.0], [60.0, 120.0], [140.0, 120.0], [180.0, 20.0]];
            }
            "scenario3" => {
                cfg.uav_start_m = [20.0, 100.0];
                cfg.uav_end_m = [20.0, 100.0];
                cfg.v_max_mps = 15.0;
                cfg.eve_center_m = [80.0, 120.0];
                cfg.user_pos_m = vec![[40.0, 40.0], [160.0, 40.0], [160.0, 160.0], [40.0, 160.0]];
                cfg.init_tour = true;
            }
            other => return Err(ConfigError::UnknownPreset(other.to_string())),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Total antenna count M.
    #[inline]
    pub fn m(&self) -> usize {
        self.array_x * self.array_y
    }

    /// Check every structural invariant; error names the offending field(s).
    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |key: &str, msg: &str| {
            Err(ConfigError::Invalid { key: key.into(), msg: msg.into() })
        };
        if self.num_users < 1 {
            return inv("num_users", "need at least one user");
        }
        if self.num_slots < 2 {
            return inv("num_slots", "need at least two slots");
        }
        if self.array_x < 1 || self.array_y < 1 {
            return inv("array_x/array_y", "need at least one element per axis");
        }
        let t = self.num_slots as f64 * self.slot_len_s;
        if (t - self.total_time_s).abs() > 1e-9 * self.total_time_s.abs().max(1.0) {
            return Err(ConfigError::Invalid {
                key: "num_slots*slot_len_s vs total_time_s".into(),
                msg: format!(
                    "num_slots*slot_len_s = {} but total_time_s = {}",
                    t, self.total_time_s
                ),
            });
        }
        if self.user_pos_m.len() != self.num_users {
            return inv("user_pos_m", "position count must equal num_users");
        }
        for (key, v) in [
            ("slot_len_s", self.slot_len_s),
            ("altitude_m", self.altitude_m),
            ("bandwidth_hz", self.bandwidth_hz),
            ("ref_gain", self.ref_gain),
            ("task_bits", self.task_bits),
            ("cycles_per_bit_user", self.cycles_per_bit_user),
            ("cycles_per_bit_uav", self.cycles_per_bit_uav),
            ("cpu_freq_user_hz", self.cpu_freq_user_hz),
            ("cpu_freq_uav_hz", self.cpu_freq_uav_hz),
        ] {
            if !(v > 0.0) {
                return inv(key, "must be strictly positive");
            }
        }
        for (key, v) in [
            ("v_max_mps", self.v_max_mps),
            ("eve_half_side_m", self.eve_half_side_m),
            ("rcs", self.rcs),
            ("user_tx_power_w", self.user_tx_power_w),
            ("noise_s_w", self.noise_s_w),
            ("noise_e_w", self.noise_e_w),
            ("gamma_s", self.gamma_s),
            ("gamma_e", self.gamma_e),
            ("gamma_sen", self.gamma_sen),
            ("cpu_eff", self.cpu_eff),
            ("p_max_w", self.p_max_w),
            ("e_max_j", self.e_max_j),
            ("p_blade_w", self.p_blade_w),
            ("p_induced_w", self.p_induced_w),
            ("conv_tol", self.conv_tol),
        ] {
            if !(v >= 0.0) {
                return inv(key, "must be nonnegative");
            }
        }
        if !(self.tip_speed_mps > 0.0) || !(self.rotor_speed_mps > 0.0) {
            return inv("tip_speed_mps/rotor_speed_mps", "must be strictly positive");
        }
        if self.antenna_spacing_ratio != 0.5 {
            return inv(
                "antenna_spacing_ratio",
                "the phase model assumes half-wavelength spacing (0.5)",
            );
        }
        if self.eve_grid_points < 1 {
            return inv("eve_grid_points", "need at least one grid point per axis");
        }
        let dx = self.uav_end_m[0] - self.uav_start_m[0];
        let dy = self.uav_end_m[1] - self.uav_start_m[1];
        let reach = (self.num_slots - 1) as f64 * self.slot_len_s * self.v_max_mps;
        if (dx * dx + dy * dy).sqrt() > reach + 1e-9 {
            return inv(
                "uav_start_m/uav_end_m",
                "end point not reachable within (N-1)*slot_len*v_max",
            );
        }
        Ok(())
    }

    /// Parse the flat `key = value` text format. Power-like keys may use dB
    /// variants (`*_dbm` for watt fields, `*_db` for ratio fields); the
    /// stored value is always linear.
    pub fn from_str_cfg(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::baseline();
        let mut seen_users: Option<Vec<[f64; 2]>> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(ConfigError::Parse {
                line,
                msg: format!("expected `key = value`, got `{stripped}`"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let fnum = || -> Result<f64, ConfigError> {
                value.parse::<f64>().map_err(|e| ConfigError::Parse {
                    line,
                    msg: format!("`{key}`: {e}"),
                })
            };
            let unum = || -> Result<usize, ConfigError> {
                value.parse::<usize>().map_err(|e| ConfigError::Parse {
                    line,
                    msg: format!("`{key}`: {e}"),
                })
            };
            let pair = |s: &str| -> Result<[f64; 2], ConfigError> {
                let mut it = s.split(',').map(str::trim);
                let err = || ConfigError::Parse {
                    line,
                    msg: format!("`{key}`: expected `x,y`, got `{s}`"),
                };
                let x = it.next().ok_or_else(err)?.parse().map_err(|_| err())?;
                let y = it.next().ok_or_else(err)?.parse().map_err(|_| err())?;
                if it.next().is_some() {
                    return Err(err());
                }
                Ok([x, y])
            };
            match key {
                "num_users" => cfg.num_users = unum()?,
                "num_slots" => cfg.num_slots = unum()?,
                "slot_len_s" => cfg.slot_len_s = fnum()?,
                "total_time_s" => cfg.total_time_s = fnum()?,
                "altitude_m" => cfg.altitude_m = fnum()?,
                "v_max_mps" => cfg.v_max_mps = fnum()?,
                "uav_start_m" => cfg.uav_start_m = pair(value)?,
                "uav_end_m" => cfg.uav_end_m = pair(value)?,
                "user_pos_m" => {
                    let mut users = Vec::new();
                    for tok in value.split_whitespace() {
                        users.push(pair(tok)?);
                    }
                    seen_users = Some(users);
                }
                "eve_center_m" => cfg.eve_center_m = pair(value)?,
                "eve_half_side_m" => cfg.eve_half_side_m = fnum()?,
                "ref_gain" => cfg.ref_gain = fnum()?,
                "ref_gain_db" => cfg.ref_gain = db_to_linear(fnum()?),
                "rcs" => cfg.rcs = fnum()?,
                "bandwidth_hz" => cfg.bandwidth_hz = fnum()?,
                "user_tx_power_w" => cfg.user_tx_power_w = fnum()?,
                "user_tx_power_dbm" => cfg.user_tx_power_w = dbm_to_watts(fnum()?),
                "noise_s_w" => cfg.noise_s_w = fnum()?,
                "noise_s_dbm" => cfg.noise_s_w = dbm_to_watts(fnum()?),
                "noise_e_w" => cfg.noise_e_w = fnum()?,
                "noise_e_dbm" => cfg.noise_e_w = dbm_to_watts(fnum()?),
                "gamma_s" => cfg.gamma_s = fnum()?,
                "gamma_s_db" => cfg.gamma_s = db_to_linear(fnum()?),
                "gamma_e" => cfg.gamma_e = fnum()?,
                "gamma_e_db" => cfg.gamma_e = db_to_linear(fnum()?),
                "gamma_sen" => cfg.gamma_sen = fnum()?,
                "gamma_sen_db" => cfg.gamma_sen = db_to_linear(fnum()?),
                "task_bits" => cfg.task_bits = fnum()?,
                "cycles_per_bit_user" => cfg.cycles_per_bit_user = fnum()?,
                "cycles_per_bit_uav" => cfg.cycles_per_bit_uav = fnum()?,
                "cpu_freq_user_hz" => cfg.cpu_freq_user_hz = fnum()?,
                "cpu_freq_uav_hz" => cfg.cpu_freq_uav_hz = fnum()?,
                "cpu_eff" => cfg.cpu_eff = fnum()?,
                "p_max_w" => cfg.p_max_w = fnum()?,
                "p_max_dbm" => cfg.p_max_w = dbm_to_watts(fnum()?),
                "e_max_j" => cfg.e_max_j = fnum()?,
                "array_x" => cfg.array_x = unum()?,
                "array_y" => cfg.array_y = unum()?,
                "antenna_spacing_ratio" => cfg.antenna_spacing_ratio = fnum()?,
                "p_blade_w" => cfg.p_blade_w = fnum()?,
                "p_induced_w" => cfg.p_induced_w = fnum()?,
                "tip_speed_mps" => cfg.tip_speed_mps = fnum()?,
                "rotor_speed_mps" => cfg.rotor_speed_mps = fnum()?,
                "drag_ratio" => cfg.drag_ratio = fnum()?,
                "air_density" => cfg.air_density = fnum()?,
                "rotor_solidity" => cfg.rotor_solidity = fnum()?,
                "rotor_area_m2" => cfg.rotor_area_m2 = fnum()?,
                "conv_tol" => cfg.conv_tol = fnum()?,
                "eve_grid_points" => cfg.eve_grid_points = unum()?,
                "enforce_deadline" | "init_tour" => {
                    let flag = match value {
                        "true" | "1" => true,
                        "false" | "0" => false,
                        other => {
                            return Err(ConfigError::Parse {
                                line,
                                msg: format!("`{key}`: expected true/false, got `{other}`"),
                            })
                        }
                    };
                    if key == "enforce_deadline" {
                        cfg.enforce_deadline = flag;
                    } else {
                        cfg.init_tour = flag;
                    }
                }
                other => return Err(ConfigError::Unknown(other.to_string())),
            }
        }
        if let Some(users) = seen_users {
            cfg.user_pos_m = users;
        }
        if cfg.user_pos_m.is_empty() {
            return Err(ConfigError::Missing("user_pos_m".into()));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from a file path, or from a preset name if no such file exists
    /// and the name matches a preset.
    pub fn load(source: &str) -> Result<Self, ConfigError> {
        let path = Path::new(source);
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            Self::from_str_cfg(&text)
        } else {
            Self::preset(source)
        }
    }

    /// Canonical text form: every field, linear units, full-precision
    /// decimals. `from_str_cfg(write_string())` reproduces the config
    /// field for field.
    pub fn write_string(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        kv("num_users", self.num_users.to_string());
        kv("num_slots", self.num_slots.to_string());
        kv("slot_len_s", self.slot_len_s.to_string());
        kv("total_time_s", self.total_time_s.to_string());
        kv("altitude_m", self.altitude_m.to_string());
        kv("v_max_mps", self.v_max_mps.to_string());
        kv("uav_start_m", format!("{},{}", self.uav_start_m[0], self.uav_start_m[1]));
        kv("uav_end_m", format!("{},{}", self.uav_end_m[0], self.uav_end_m[1]));
        let users: Vec<String> =
            self.user_pos_m.iter().map(|p| format!("{},{}", p[0], p[1])).collect();
        kv("user_pos_m", users.join(" "));
        kv("eve_center_m", format!("{},{}", self.eve_center_m[0], self.eve_center_m[1]));
        kv("eve_half_side_m", self.eve_half_side_m.to_string());
        kv("ref_gain", self.ref_gain.to_string());
        kv("rcs", self.rcs.to_string());
        kv("bandwidth_hz", self.bandwidth_hz.to_string());
        kv("user_tx_power_w", self.user_tx_power_w.to_string());
        kv("noise_s_w", self.noise_s_w.to_string());
        kv("noise_e_w", self.noise_e_w.to_string());
        kv("gamma_s", self.gamma_s.to_string());
        kv("gamma_e", self.gamma_e.to_string());
        kv("gamma_sen", self.gamma_sen.to_string());
        kv("task_bits", self.task_bits.to_string());
        kv("cycles_per_bit_user", self.cycles_per_bit_user.to_string());
        kv("cycles_per_bit_uav", self.cycles_per_bit_uav.to_string());
        kv("cpu_freq_user_hz", self.cpu_freq_user_hz.to_string());
        kv("cpu_freq_uav_hz", self.cpu_freq_uav_hz.to_string());
        kv("cpu_eff", self.cpu_eff.to_string());
        kv("p_max_w", self.p_max_w.to_string());
        kv("e_max_j", self.e_max_j.to_string());
        kv("array_x", self.array_x.to_string());
        kv("array_y", self.array_y.to_string());
        kv("antenna_spacing_ratio", self.antenna_spacing_ratio.to_string());
        kv("p_blade_w", self.p_blade_w.to_string());
        kv("p_induced_w", self.p_induced_w.to_string());
        kv("tip_speed_mps", self.tip_speed_mps.to_string());
        kv("rotor_speed_mps", self.rotor_speed_mps.to_string());
        kv("drag_ratio", self.drag_ratio.to_string());
        kv("air_density", self.air_density.to_string());
        kv("rotor_solidity", self.rotor_solidity.to_string());
        kv("rotor_area_m2", self.rotor_area_m2.to_string());
        kv("conv_tol", self.conv_tol.to_string());
        kv("eve_grid_points", self.eve_grid_points.to_string());
        kv("enforce_deadline", self.enforce_deadline.to_string());
        kv("init_tour", self.init_tour.to_string());
        out
    }

    /// SHA-256 of the canonical text form, hex-encoded; used as a
    /// provenance stamp in emitted summaries.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(self.write_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_scenario1_geometry() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        assert_eq!(cfg.uav_start_m, [0.0, 0.0]);
        assert_eq!(cfg.uav_end_m, [200.0, 200.0]);
        assert_eq!(cfg.v_max_mps, 8.0);
        assert_eq!(cfg.eve_center_m, [100.0, 100.0]);
        assert_eq!(cfg.eve_half_side_m, 10.0);
        assert_eq!(
            cfg.user_pos_m,
            vec![[50.0, 25.0], [100.0, 40.0], [150.0, 70.0], [175.0, 150.0]]
        );
        assert_eq!(cfg.num_users, 4);
        assert_eq!(cfg.num_slots, 40);
        assert_eq!(cfg.m(), 16);
    }

    #[test]
    fn preset_scenario3_closed_tour() {
        let cfg = ScenarioConfig::preset("scenario3").unwrap();
        assert_eq!(cfg.uav_start_m, [20.0, 100.0]);
        assert_eq!(cfg.uav_end_m, [20.0, 100.0]);
        assert_eq!(cfg.v_max_mps, 15.0);
        assert_eq!(cfg.eve_center_m, [80.0, 120.0]);
        assert!(cfg.init_tour);
        assert!(!ScenarioConfig::preset("scenario1").unwrap().init_tour);
    }

    #[test]
    fn db_conversions_match_table_values() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        // 37 dBm, 7 dB, -10 dB, -50 dB, -30 dB, -90 dBm.
        assert!((cfg.p_max_w - 5.011872336272722).abs() < 1e-12);
        assert!((cfg.gamma_s - 5.011872336272722).abs() < 1e-12);
        assert!((cfg.gamma_e - 0.1).abs() < 1e-12);
        assert!((cfg.gamma_sen - 1e-5).abs() < 1e-18);
        assert!((cfg.ref_gain - 1e-3).abs() < 1e-15);
        assert!((cfg.noise_s_w - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn slot_grid_mismatch_names_both_fields() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.total_time_s = 41.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("slot_len_s"), "{err}");
        assert!(err.contains("total_time_s"), "{err}");
    }

    #[test]
    fn endpoint_reachability_enforced() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.uav_end_m = [10_000.0, 0.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn spacing_is_pinned_to_half_wavelength() {
        let mut cfg = ScenarioConfig::preset("scenario1").unwrap();
        cfg.antenna_spacing_ratio = 0.7;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        for name in ["scenario1", "scenario2", "scenario3"] {
            let mut cfg = ScenarioConfig::preset(name).unwrap();
            // Exercise awkward decimals.
            cfg.user_tx_power_w = 0.1 + 1e-17;
            cfg.conv_tol = 1.0 / 3.0;
            let text = cfg.write_string();
            let back = ScenarioConfig::from_str_cfg(&text).unwrap();
            assert_eq!(cfg, back, "round trip for {name}");
        }
    }

    #[test]
    fn db_keys_parse_to_linear() {
        let cfg = ScenarioConfig::preset("scenario1").unwrap();
        let mut text = cfg.write_string();
        text.push_str("noise_s_dbm = -90\ngamma_s_db = 7\np_max_dbm = 37\n");
        let parsed = ScenarioConfig::from_str_cfg(&text).unwrap();
        assert!((parsed.noise_s_w - 1e-12).abs() < 1e-24);
        assert!((parsed.gamma_s - db_to_linear(7.0)).abs() < 1e-12);
        assert!((parsed.p_max_w - dbm_to_watts(37.0)).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_rejected() {
        let err = ScenarioConfig::from_str_cfg("frobnicator = 3\n").unwrap_err();
        assert!(matches!(err, ConfigError::Unknown(ref k) if k == "frobnicator"));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let cfg = ScenarioConfig::preset("scenario2").unwrap();
        let text = format!("# header\n\n{}\n  # trailing\n", cfg.write_string());
        assert_eq!(ScenarioConfig::from_str_cfg(&text).unwrap(), cfg);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ScenarioConfig::preset("scenario1").unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.user_tx_power_w = 0.2;
        assert_ne!(a.hash(), b.hash());
    }
}
