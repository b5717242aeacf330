//! CAM-only follower control: gap keeping along the predecessor's reported
//! positions, steering toward its trail, and the lost-track stop.

use std::collections::VecDeque;
use std::time::Duration;

use crate::control::pid::{pid_step, PidGains, PidState};
use crate::dynamics::{normalize_angle, Actuation, VehicleState};
use crate::itsg5::cam::{cam_decode, Cam, EncodedFrame};
use crate::time::SimTime;

/// A predecessor position decoded from one received CAM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrailPoint {
    pub x: f64,
    pub y: f64,
    pub time: SimTime,
}

/// Bounded FIFO of predecessor waypoints, newest last. Waypoint times are
/// strictly increasing; a second delivery in the same instant is ignored.
#[derive(Debug, Clone)]
pub struct LeaderTrail {
    points: VecDeque<TrailPoint>,
    capacity: usize,
    last_cam_time: Option<SimTime>,
}

impl LeaderTrail {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "trail capacity must be positive");
        LeaderTrail {
            points: VecDeque::with_capacity(capacity),
            capacity,
            last_cam_time: None,
        }
    }

    /// Appends the waypoint carried by `cam`, evicting the oldest entry at
    /// capacity. Duplicate arrivals at the same timestamp are dropped.
    pub fn on_cam_received(&mut self, cam: &Cam, now: SimTime) {
        if let Some(last) = self.points.back() {
            if now <= last.time {
                return;
            }
        }
        if self.points.len() == self.capacity {
            self.points.pop_front();
        }
        self.points.push_back(TrailPoint {
            x: cam.x_cm as f64 / 100.0,
            y: cam.y_cm as f64 / 100.0,
            time: now,
        });
        self.last_cam_time = Some(now);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn newest(&self) -> Option<&TrailPoint> {
        self.points.back()
    }

    pub fn oldest(&self) -> Option<&TrailPoint> {
        self.points.front()
    }

    pub fn last_cam_time(&self) -> Option<SimTime> {
        self.last_cam_time
    }

    /// Steering target: the oldest waypoint whose forward projection onto the
    /// vehicle's heading is at least `lookahead` meters, falling back to the
    /// most recent waypoint. The projection keeps already-passed waypoints
    /// from being chosen.
    pub fn lookahead_target(&self, own: &VehicleState, lookahead: f64) -> Option<&TrailPoint> {
        let (fx, fy) = (own.heading.cos(), own.heading.sin());
        self.points
            .iter()
            .find(|p| (p.x - own.x) * fx + (p.y - own.y) * fy >= lookahead)
            .or_else(|| self.points.back())
    }
}

/// Follower tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerConfig {
    /// Desired gap to the predecessor's last reported position, meters.
    pub gap_setpoint: f64,
    /// CAM staleness beyond which the follower brakes to a stop.
    pub lost_track_timeout: Duration,
    /// Steering target selection distance, meters.
    pub lookahead: f64,
    pub trail_capacity: usize,
}

impl Default for FollowerConfig {
    fn default() -> Self {
        FollowerConfig {
            gap_setpoint: 8.0,
            lost_track_timeout: Duration::from_secs(1),
            lookahead: 5.0,
            trail_capacity: 256,
        }
    }
}

impl FollowerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.gap_setpoint <= 0.0 {
            return Err(format!(
                "gap_setpoint {} must be positive",
                self.gap_setpoint
            ));
        }
        if self.lost_track_timeout.is_zero() {
            return Err("lost_track_timeout must be positive".into());
        }
        if self.lookahead < 0.0 {
            return Err(format!("lookahead {} must not be negative", self.lookahead));
        }
        if self.trail_capacity == 0 {
            return Err("trail_capacity must be positive".into());
        }
        Ok(())
    }
}

/// True once the newest CAM is older than the timeout. False until the first
/// CAM arrives (the follower idles rather than brakes before platooning
/// starts). Stays true until a fresh CAM resets the age.
pub fn lost_track_check(trail: &LeaderTrail, now: SimTime, cfg: &FollowerConfig) -> bool {
    match trail.last_cam_time() {
        Some(last) => now.duration_since(last) > cfg.lost_track_timeout,
        None => false,
    }
}

/// Gap-keeping accel command: PID on the distance to the newest reported
/// predecessor position minus the setpoint. An empty trail commands zero
/// acceleration and leaves the controller memory untouched.
pub fn longitudinal_control(
    own: &VehicleState,
    trail: &LeaderTrail,
    cfg: &FollowerConfig,
    gains: &PidGains,
    state: &PidState,
    dt: f64,
) -> (f64, PidState) {
    let Some(target) = trail.newest() else {
        return (0.0, *state);
    };
    let distance = ((target.x - own.x).powi(2) + (target.y - own.y).powi(2)).sqrt();
    let error = distance - cfg.gap_setpoint;
    pid_step(gains, state, error, dt)
}

/// Steering command: PID on the bearing error toward the lookahead waypoint,
/// wrapped to `(-pi, pi]`. An empty trail commands zero steer.
pub fn lateral_control(
    own: &VehicleState,
    trail: &LeaderTrail,
    cfg: &FollowerConfig,
    gains: &PidGains,
    state: &PidState,
    dt: f64,
) -> (f64, PidState) {
    let Some(target) = trail.lookahead_target(own, cfg.lookahead) else {
        return (0.0, *state);
    };
    let bearing = (target.y - own.y).atan2(target.x - own.x);
    let error = normalize_angle(bearing - own.heading);
    pid_step(gains, state, error, dt)
}

/// Per-vehicle follower controller: owns the trail and both PID memories.
pub struct FollowerController {
    cfg: FollowerConfig,
    lon_gains: PidGains,
    lat_gains: PidGains,
    lon_state: PidState,
    lat_state: PidState,
    trail: LeaderTrail,
    predecessor_station: u32,
    /// Full-braking command applied while lost; the plant's `min_accel`.
    brake_accel: f64,
    lost: bool,
}

impl FollowerController {
    pub fn new(
        cfg: FollowerConfig,
        lon_gains: PidGains,
        lat_gains: PidGains,
        predecessor_station: u32,
        brake_accel: f64,
    ) -> Self {
        let trail = LeaderTrail::new(cfg.trail_capacity);
        FollowerController {
            cfg,
            lon_gains,
            lat_gains,
            lon_state: PidState::default(),
            lat_state: PidState::default(),
            trail,
            predecessor_station,
            brake_accel,
            lost: false,
        }
    }

    pub fn trail(&self) -> &LeaderTrail {
        &self.trail
    }

    pub fn is_lost(&self) -> bool {
        self.lost
    }

    /// Feeds one received frame. Frames from stations other than the
    /// configured predecessor are ignored, as are undecodable ones.
    pub fn on_frame(&mut self, frame: &EncodedFrame, now: SimTime) {
        let Ok(cam) = cam_decode(frame.as_ref()) else {
            return;
        };
        if cam.station_id == self.predecessor_station {
            self.trail.on_cam_received(&cam, now);
        }
    }

    /// One control step. While lost the follower brakes hard with zero
    /// steer and the PID memories are frozen.
    pub fn control(&mut self, own: &VehicleState, now: SimTime, dt: Duration) -> Actuation {
        self.lost = lost_track_check(&self.trail, now, &self.cfg);
        if self.lost {
            return Actuation {
                accel: self.brake_accel,
                steer: 0.0,
            };
        }
        let dt = dt.as_secs_f64();
        let (accel, lon_state) = longitudinal_control(
            own,
            &self.trail,
            &self.cfg,
            &self.lon_gains,
            &self.lon_state,
            dt,
        );
        self.lon_state = lon_state;
        let (steer, lat_state) = lateral_control(
            own,
            &self.trail,
            &self.cfg,
            &self.lat_gains,
            &self.lat_state,
            dt,
        );
        self.lat_state = lat_state;
        Actuation { accel, steer }
    }
}
