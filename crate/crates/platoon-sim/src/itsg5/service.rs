//! Cooperative awareness service: fixed-rate CAM generation.

use std::time::Duration;

use crate::dynamics::OdometrySample;
use crate::itsg5::cam::{cam_encode, vdp_sample, EncodedFrame};
use crate::time::SimTime;

/// Generation rate configuration. The period derived from `generation_hz`
/// must be an exact multiple of the simulation tick; scenario validation
/// enforces that before a service is built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaServiceConfig {
    pub generation_hz: f64,
}

impl CaServiceConfig {
    pub fn period(&self) -> Duration {
        crate::time::period_from_hz(self.generation_hz)
    }
}

/// Per-node CAM source. Emits one encoded frame whenever the tick time lands
/// on a generation boundary; the first CAM goes out at t = 0.
pub struct CaService {
    station_id: u32,
    period: Duration,
    sent: u64,
}

impl CaService {
    pub fn new(station_id: u32, cfg: CaServiceConfig) -> Self {
        let period = cfg.period();
        assert!(!period.is_zero(), "generation period must be positive");
        CaService {
            station_id,
            period,
            sent: 0,
        }
    }

    pub fn station_id(&self) -> u32 {
        self.station_id
    }

    pub fn frames_sent(&self) -> u64 {
        self.sent
    }

    /// Called once per tick with the freshest odometry.
    pub fn step(&mut self, now: SimTime, odom: &OdometrySample) -> Option<EncodedFrame> {
        if !now.is_multiple_of(self.period) {
            return None;
        }
        let cam = vdp_sample(odom, self.station_id, now);
        let frame = cam_encode(&cam).expect("vdp_sample yields valid fields");
        self.sent += 1;
        Some(frame)
    }
}
