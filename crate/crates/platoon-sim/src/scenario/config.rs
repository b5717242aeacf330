//! Scenario configuration: TOML schema, defaults and validation.
//!
//! The on-disk schema uses explicit unit suffixes for durations
//! (`duration_s`, `tick_ms`, ...); all other quantities are SI (meters,
//! m/s, radians). Durations are rounded to the nearest nanosecond when
//! converted, so configured rates map to exact integer periods.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use crate::control::{FollowerConfig, PidGains};
use crate::dynamics::{SensorNoise, VehicleParams};
use crate::itsg5::ChannelConfig;
use crate::time::{is_exact_multiple, period_from_hz};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Leader,
    Follower,
}

/// One vehicle: initial pose, plant limits, and its place in the chain.
#[derive(Debug, Clone, Copy)]
pub struct VehicleSpec {
    pub role: Role,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    /// 0-based index of the predecessor vehicle; `None` for the leader.
    pub predecessor: Option<usize>,
    pub params: VehicleParams,
}

/// Piecewise-constant leader command: hold `target_speed` and `steer` for
/// `duration`. Past the last segment the leader keeps the final commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSegment {
    pub duration: Duration,
    pub target_speed: f64,
    pub steer: f64,
}

/// Fully validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub duration: Duration,
    pub tick: Duration,
    pub cam_hz: f64,
    pub channel: ChannelConfig,
    pub lon_gains: PidGains,
    pub lat_gains: PidGains,
    pub follower: FollowerConfig,
    pub sensor_noise: SensorNoise,
    pub vehicles: Vec<VehicleSpec>,
    pub profile: Vec<ProfileSegment>,
}

impl ScenarioConfig {
    /// Sets the run seed; the channel RNG stream is derived from it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.channel.rng_seed = seed;
    }

    pub fn follower_count(&self) -> usize {
        self.vehicles
            .iter()
            .filter(|v| v.role == Role::Follower)
            .count()
    }

    /// Checks every cross-field invariant. Called by [`load_config`] and
    /// again after command-line overrides.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.tick.is_zero() {
            return Err(invalid("tick_ms", "tick period must be positive"));
        }
        validate_cam_hz(self.cam_hz, self.tick)?;
        if !(0.0..=1.0).contains(&self.channel.loss_prob) {
            return Err(invalid(
                "channel.loss_prob",
                format!("{} is outside [0, 1]", self.channel.loss_prob),
            ));
        }
        if self.channel.range <= 0.0 {
            return Err(invalid("channel.range_m", "range must be positive"));
        }
        self.lon_gains
            .validate()
            .map_err(|r| invalid("gains.longitudinal", r))?;
        self.lat_gains
            .validate()
            .map_err(|r| invalid("gains.lateral", r))?;
        self.follower
            .validate()
            .map_err(|r| invalid("follower", r))?;
        if self.sensor_noise.pos_std < 0.0 || self.sensor_noise.speed_std < 0.0 {
            return Err(invalid(
                "sensor_noise",
                "standard deviations must not be negative",
            ));
        }
        self.validate_vehicles()?;
        for (i, seg) in self.profile.iter().enumerate() {
            if seg.target_speed < 0.0 {
                return Err(invalid(
                    format!("profile[{i}].speed"),
                    "target speed must not be negative",
                ));
            }
        }
        Ok(())
    }

    fn validate_vehicles(&self) -> Result<(), ConfigError> {
        if self.vehicles.is_empty() {
            return Err(invalid("vehicles", "at least one vehicle is required"));
        }
        let leaders: Vec<usize> = self
            .vehicles
            .iter()
            .enumerate()
            .filter(|(_, v)| v.role == Role::Leader)
            .map(|(i, _)| i)
            .collect();
        if leaders.len() != 1 {
            return Err(invalid(
                "vehicles.role",
                format!("exactly one leader is required, found {}", leaders.len()),
            ));
        }
        let leader = leaders[0];
        let n = self.vehicles.len();
        // The predecessor relation must form a single chain rooted at the
        // leader: every follower names one predecessor, nobody is named
        // twice, and walking successor links from the leader visits all.
        let mut successor = vec![None; n];
        for (i, v) in self.vehicles.iter().enumerate() {
            match (v.role, v.predecessor) {
                (Role::Leader, Some(_)) => {
                    return Err(invalid(
                        format!("vehicles[{i}].predecessor"),
                        "the leader has no predecessor",
                    ));
                }
                (Role::Leader, None) => {}
                (Role::Follower, None) => {
                    return Err(invalid(
                        format!("vehicles[{i}].predecessor"),
                        "followers must name a predecessor",
                    ));
                }
                (Role::Follower, Some(p)) => {
                    if p >= n {
                        return Err(invalid(
                            format!("vehicles[{i}].predecessor"),
                            format!("index {} out of range (1..={n})", p + 1),
                        ));
                    }
                    if p == i {
                        return Err(invalid(
                            format!("vehicles[{i}].predecessor"),
                            "a vehicle cannot follow itself",
                        ));
                    }
                    if successor[p].is_some() {
                        return Err(invalid(
                            format!("vehicles[{i}].predecessor"),
                            format!(
                                "vehicle {} already has a follower; the platoon must be a chain",
                                p + 1
                            ),
                        ));
                    }
                    successor[p] = Some(i);
                }
            }
        }
        let mut visited = 1;
        let mut cursor = leader;
        while let Some(next) = successor[cursor] {
            visited += 1;
            cursor = next;
        }
        if visited != n {
            return Err(invalid(
                "vehicles",
                "predecessor links must form a single chain reaching the leader",
            ));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            validate_params(&v.params, &format!("vehicles[{i}].params"))?;
        }
        Ok(())
    }
}

/// The CAM generation period must be an exact multiple of the tick period,
/// so generation instants always land on tick boundaries.
pub fn validate_cam_hz(cam_hz: f64, tick: Duration) -> Result<(), ConfigError> {
    if !(cam_hz > 0.0 && cam_hz.is_finite()) {
        return Err(invalid("cam_hz", "generation rate must be positive"));
    }
    let period = period_from_hz(cam_hz);
    if !is_exact_multiple(period, tick) {
        return Err(invalid(
            "cam_hz",
            format!(
                "{cam_hz} Hz gives a period of {} ns, not an exact multiple of the {} ns tick",
                period.as_nanos(),
                tick.as_nanos()
            ),
        ));
    }
    Ok(())
}

fn validate_params(p: &VehicleParams, field: &str) -> Result<(), ConfigError> {
    if p.wheelbase <= 0.0 {
        return Err(invalid(format!("{field}.wheelbase"), "must be positive"));
    }
    if p.max_speed <= 0.0 {
        return Err(invalid(format!("{field}.max_speed"), "must be positive"));
    }
    if p.max_accel <= 0.0 {
        return Err(invalid(format!("{field}.max_accel"), "must be positive"));
    }
    if p.min_accel >= 0.0 {
        return Err(invalid(format!("{field}.min_accel"), "must be negative"));
    }
    if p.max_steer <= 0.0 {
        return Err(invalid(format!("{field}.max_steer"), "must be positive"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Raw TOML schema. Optional fields merge onto the built-in defaults, so a
// table may override a single value without restating the rest.
// ---------------------------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    duration_s: Option<f64>,
    tick_ms: Option<f64>,
    cam_hz: Option<f64>,
    #[serde(default)]
    channel: RawChannel,
    #[serde(default)]
    follower: RawFollower,
    #[serde(default)]
    gains: RawGains,
    #[serde(default)]
    sensor_noise: RawSensorNoise,
    #[serde(default)]
    vehicle_params: RawParams,
    #[serde(default)]
    vehicles: Vec<RawVehicle>,
    #[serde(default)]
    profile: Vec<RawSegment>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChannel {
    delay_fixed_ms: Option<f64>,
    delay_jitter_ms: Option<f64>,
    loss_prob: Option<f64>,
    range_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFollower {
    gap_setpoint_m: Option<f64>,
    lost_track_timeout_s: Option<f64>,
    lookahead_m: Option<f64>,
    trail_capacity: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGains {
    #[serde(default)]
    longitudinal: RawPid,
    #[serde(default)]
    lateral: RawPid,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPid {
    kp: Option<f64>,
    ki: Option<f64>,
    kd: Option<f64>,
    out_min: Option<f64>,
    out_max: Option<f64>,
    integral_max: Option<f64>,
}

impl RawPid {
    fn merge(&self, mut base: PidGains) -> PidGains {
        if let Some(v) = self.kp {
            base.kp = v;
        }
        if let Some(v) = self.ki {
            base.ki = v;
        }
        if let Some(v) = self.kd {
            base.kd = v;
        }
        if let Some(v) = self.out_min {
            base.out_min = v;
        }
        if let Some(v) = self.out_max {
            base.out_max = v;
        }
        if let Some(v) = self.integral_max {
            base.integral_max = v;
        }
        base
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSensorNoise {
    pos_std: Option<f64>,
    speed_std: Option<f64>,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    wheelbase: Option<f64>,
    max_speed: Option<f64>,
    max_accel: Option<f64>,
    min_accel: Option<f64>,
    max_steer: Option<f64>,
}

impl RawParams {
    fn merge(&self, mut base: VehicleParams) -> VehicleParams {
        if let Some(v) = self.wheelbase {
            base.wheelbase = v;
        }
        if let Some(v) = self.max_speed {
            base.max_speed = v;
        }
        if let Some(v) = self.max_accel {
            base.max_accel = v;
        }
        if let Some(v) = self.min_accel {
            base.min_accel = v;
        }
        if let Some(v) = self.max_steer {
            base.max_steer = v;
        }
        base
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "lowercase")]
enum RawRole {
    Leader,
    Follower,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVehicle {
    role: RawRole,
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
    #[serde(default)]
    heading: f64,
    /// 1-based index into the `vehicles` array.
    predecessor: Option<usize>,
    #[serde(default)]
    params: RawParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSegment {
    duration_s: f64,
    speed: f64,
    #[serde(default)]
    steer: f64,
}

/// Converts a duration given as fractional units into integer nanoseconds.
fn duration_from_f64(
    value: f64,
    nanos_per_unit: f64,
    field: &str,
) -> Result<Duration, ConfigError> {
    if !value.is_finite() || value < 0.0 {
        return Err(invalid(
            field,
            format!("{value} is not a non-negative duration"),
        ));
    }
    Ok(Duration::from_nanos((value * nanos_per_unit).round() as u64))
}

fn build(raw: RawConfig) -> Result<ScenarioConfig, ConfigError> {
    let seed = raw.seed.unwrap_or(1);
    let duration = duration_from_f64(raw.duration_s.unwrap_or(120.0), 1e9, "duration_s")?;
    let tick = duration_from_f64(raw.tick_ms.unwrap_or(20.0), 1e6, "tick_ms")?;
    let cam_hz = raw.cam_hz.unwrap_or(10.0);

    let defaults = ChannelConfig::default();
    let channel = ChannelConfig {
        delay_fixed: match raw.channel.delay_fixed_ms {
            Some(ms) => duration_from_f64(ms, 1e6, "channel.delay_fixed_ms")?,
            None => defaults.delay_fixed,
        },
        delay_jitter: match raw.channel.delay_jitter_ms {
            Some(ms) => duration_from_f64(ms, 1e6, "channel.delay_jitter_ms")?,
            None => defaults.delay_jitter,
        },
        loss_prob: raw.channel.loss_prob.unwrap_or(defaults.loss_prob),
        range: raw.channel.range_m.unwrap_or(defaults.range),
        rng_seed: seed,
    };

    let fdefaults = FollowerConfig::default();
    let follower = FollowerConfig {
        gap_setpoint: raw
            .follower
            .gap_setpoint_m
            .unwrap_or(fdefaults.gap_setpoint),
        lost_track_timeout: match raw.follower.lost_track_timeout_s {
            Some(s) => duration_from_f64(s, 1e9, "follower.lost_track_timeout_s")?,
            None => fdefaults.lost_track_timeout,
        },
        lookahead: raw.follower.lookahead_m.unwrap_or(fdefaults.lookahead),
        trail_capacity: raw
            .follower
            .trail_capacity
            .unwrap_or(fdefaults.trail_capacity),
    };

    let shared_params = raw.vehicle_params.merge(VehicleParams::default());
    let vehicles = raw
        .vehicles
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let predecessor = match v.predecessor {
                Some(0) => {
                    return Err(invalid(
                        format!("vehicles[{i}].predecessor"),
                        "indices are 1-based",
                    ));
                }
                Some(p) => Some(p - 1),
                None => None,
            };
            Ok(VehicleSpec {
                role: match v.role {
                    RawRole::Leader => Role::Leader,
                    RawRole::Follower => Role::Follower,
                },
                x: v.x,
                y: v.y,
                heading: v.heading,
                predecessor,
                params: v.params.merge(shared_params),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let profile = raw
        .profile
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Ok(ProfileSegment {
                duration: duration_from_f64(
                    s.duration_s,
                    1e9,
                    &format!("profile[{i}].duration_s"),
                )?,
                target_speed: s.speed,
                steer: s.steer,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let cfg = ScenarioConfig {
        seed,
        duration,
        tick,
        cam_hz,
        channel,
        lon_gains: raw
            .gains
            .longitudinal
            .merge(PidGains::longitudinal_default()),
        lat_gains: raw.gains.lateral.merge(PidGains::lateral_default()),
        follower,
        sensor_noise: SensorNoise {
            pos_std: raw.sensor_noise.pos_std.unwrap_or(0.0),
            speed_std: raw.sensor_noise.speed_std.unwrap_or(0.0),
        },
        vehicles,
        profile,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Parses and validates a scenario from TOML text. `origin` names the source
/// in error messages.
pub fn parse_config(text: &str, origin: &str) -> Result<ScenarioConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: origin.to_string(),
        source: Box::new(e),
    })?;
    build(raw)
}

/// Loads and validates a scenario config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [[vehicles]]
        role = "leader"
        x = 20.0

        [[vehicles]]
        role = "follower"
        predecessor = 1
        x = 10.0

        [[vehicles]]
        role = "follower"
        predecessor = 2
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL, "test").unwrap();
        assert_eq!(cfg.seed, 1);
        assert_eq!(cfg.tick, Duration::from_millis(20));
        assert_eq!(cfg.duration, Duration::from_secs(120));
        assert_eq!(cfg.cam_hz, 10.0);
        assert_eq!(cfg.follower.gap_setpoint, 8.0);
        assert_eq!(cfg.channel.delay_fixed, Duration::from_millis(1));
        assert_eq!(cfg.channel.rng_seed, 1);
        assert_eq!(cfg.vehicles.len(), 3);
        assert_eq!(cfg.vehicles[1].predecessor, Some(0));
        assert_eq!(cfg.follower_count(), 2);
        assert_eq!(cfg.vehicles[0].params.wheelbase, 2.7);
    }

    #[test]
    fn two_leaders_name_the_field() {
        let text = r#"
            [[vehicles]]
            role = "leader"
            [[vehicles]]
            role = "leader"
        "#;
        let err = parse_config(text, "test").unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "vehicles.role"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn indivisible_cam_rate_is_rejected() {
        let text = format!("cam_hz = 3.0\n{MINIMAL}");
        let err = parse_config(&text, "test").unwrap_err();
        match err {
            ConfigError::Invalid { field, reason } => {
                assert_eq!(field, "cam_hz");
                assert!(reason.contains("333333333"), "reason: {reason}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn broken_chain_is_rejected() {
        // Two followers naming the same predecessor.
        let text = r#"
            [[vehicles]]
            role = "leader"
            [[vehicles]]
            role = "follower"
            predecessor = 1
            [[vehicles]]
            role = "follower"
            predecessor = 1
        "#;
        assert!(parse_config(text, "test").is_err());
    }

    #[test]
    fn follower_without_predecessor_is_rejected() {
        let text = r#"
            [[vehicles]]
            role = "leader"
            [[vehicles]]
            role = "follower"
        "#;
        let err = parse_config(text, "test").unwrap_err();
        match err {
            ConfigError::Invalid { field, .. } => assert_eq!(field, "vehicles[1].predecessor"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn loss_probability_is_range_checked() {
        let text = format!("[channel]\nloss_prob = 1.5\n{MINIMAL}");
        assert!(parse_config(&text, "test").is_err());
    }

    #[test]
    fn partial_gain_override_merges_onto_defaults() {
        let text = format!("[gains.longitudinal]\nkp = 0.9\n{MINIMAL}");
        let cfg = parse_config(&text, "test").unwrap();
        assert_eq!(cfg.lon_gains.kp, 0.9);
        assert_eq!(cfg.lon_gains.ki, PidGains::longitudinal_default().ki);
        assert_eq!(cfg.lon_gains.out_min, -6.0);
        assert_eq!(cfg.lat_gains, PidGains::lateral_default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = format!("typo_key = 1\n{MINIMAL}");
        assert!(matches!(
            parse_config(&text, "test"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn set_seed_rederives_channel_stream() {
        let mut cfg = parse_config(MINIMAL, "test").unwrap();
        cfg.set_seed(42);
        assert_eq!(cfg.seed, 42);
        assert_eq!(cfg.channel.rng_seed, 42);
    }

    #[test]
    fn profile_segments_parse_with_default_steer() {
        let text = format!(
            "{MINIMAL}\n[[profile]]\nduration_s = 2.0\nspeed = 0.0\n[[profile]]\nduration_s = 60.0\nspeed = 5.0\nsteer = 0.05\n"
        );
        let cfg = parse_config(&text, "test").unwrap();
        assert_eq!(cfg.profile.len(), 2);
        assert_eq!(cfg.profile[0].steer, 0.0);
        assert_eq!(cfg.profile[1].steer, 0.05);
        assert_eq!(cfg.profile[1].duration, Duration::from_secs(60));
    }
}
