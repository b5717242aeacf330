//! Fixed-step kinematic bicycle model with actuator limits.
//!
//! Pure state-transition functions: no shared mutable state, safe to call
//! from anywhere. The model integrates with explicit Euler; heading rate is
//! `speed / wheelbase * tan(steer)`.

use std::f64::consts::PI;
use std::time::Duration;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::time::SimTime;

/// Planar vehicle pose and speed.
///
/// `heading` is radians counterclockwise from the +x axis, kept normalized
/// to `(-pi, pi]`. Speed is never negative: there is no reverse gear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
}

impl VehicleState {
    pub fn at_rest(x: f64, y: f64, heading: f64) -> Self {
        VehicleState {
            x,
            y,
            heading,
            speed: 0.0,
        }
    }

    pub fn distance_to(&self, other: &VehicleState) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Commanded longitudinal acceleration (m/s^2) and front-wheel angle (rad).
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct Actuation {
    pub accel: f64,
    pub steer: f64,
}

/// Plant limits. Defaults are compact-sedan magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_speed: f64,
    pub max_accel: f64,
    pub min_accel: f64,
    pub max_steer: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.7,
            max_speed: 30.0,
            max_accel: 3.0,
            min_accel: -6.0,
            max_steer: 0.6,
        }
    }
}

impl VehicleParams {
    /// One explicit-Euler step of duration `dt`.
    ///
    /// Inputs are clamped to the actuator limits before integration; the
    /// position and heading updates use the pre-step speed and heading.
    /// Speed is clamped to `[0, max_speed]` after integration, so a braking
    /// command at standstill leaves the vehicle parked.
    pub fn step(&self, s: &VehicleState, u: Actuation, dt: Duration) -> VehicleState {
        let dt = dt.as_secs_f64();
        let accel = u.accel.clamp(self.min_accel, self.max_accel);
        let steer = u.steer.clamp(-self.max_steer, self.max_steer);
        VehicleState {
            x: s.x + s.speed * s.heading.cos() * dt,
            y: s.y + s.speed * s.heading.sin() * dt,
            heading: normalize_angle(s.heading + s.speed / self.wheelbase * steer.tan() * dt),
            speed: (s.speed + accel * dt).clamp(0.0, self.max_speed),
        }
    }
}

/// Ground-truth sample published on the vehicle's odometry topic each tick.
/// There is no sensor latency: the stamp is the tick time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdometrySample {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub stamp: SimTime,
}

/// Samples the vehicle state as seen by the on-board sensors.
pub fn sensor_read(state: &VehicleState, now: SimTime) -> OdometrySample {
    OdometrySample {
        x: state.x,
        y: state.y,
        heading: state.heading,
        speed: state.speed,
        stamp: now,
    }
}

/// Optional additive Gaussian noise on position and speed. Off by default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoise {
    pub pos_std: f64,
    pub speed_std: f64,
}

impl Default for SensorNoise {
    fn default() -> Self {
        SensorNoise {
            pos_std: 0.0,
            speed_std: 0.0,
        }
    }
}

impl SensorNoise {
    pub fn enabled(&self) -> bool {
        self.pos_std > 0.0 || self.speed_std > 0.0
    }

    pub fn apply(&self, mut sample: OdometrySample, rng: &mut impl Rng) -> OdometrySample {
        if self.pos_std > 0.0 {
            let n = Normal::new(0.0, self.pos_std).expect("finite std");
            sample.x += n.sample(rng);
            sample.y += n.sample(rng);
        }
        if self.speed_std > 0.0 {
            let n = Normal::new(0.0, self.speed_std).expect("finite std");
            sample.speed = (sample.speed + n.sample(rng)).max(0.0);
        }
        sample
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn normalize_angle(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = a.rem_euclid(two_pi);
    if r > PI {
        r -= two_pi;
    }
    r
}
