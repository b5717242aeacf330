//! Co-simulation of CAM-based vehicle platooning.
//!
//! Two simulator halves with different time semantics run under one shared
//! clock: an event-driven network side (CAM generation, a lossy broadcast
//! channel, message deliveries) and a time-driven physics side (fixed-step
//! kinematic bicycle vehicles). The [`kernel`] enforces the barrier between
//! them; the network may never process an event beyond the latest published
//! physics tick.
//!
//! On top of that core, [`itsg5`] provides the cooperative-awareness message
//! service and channel, [`control`] the CAM-only PID platooning controller,
//! and [`scenario`] the configuration, run loop, frequency sweeps and CSV
//! metrics output.

pub mod control;
pub mod dynamics;
pub mod itsg5;
pub mod kernel;
pub mod scenario;
pub mod time;

pub use control::{FollowerConfig, FollowerController, LeaderTrail, PidGains, PidState};
pub use dynamics::{Actuation, OdometrySample, SensorNoise, VehicleParams, VehicleState};
pub use itsg5::{BroadcastChannel, CaService, Cam, ChannelConfig, EncodedFrame};
pub use kernel::{CosimKernel, Event, NodeId, TickConfig};
pub use scenario::{run_scenario, run_sweep, MetricsRecord, RunSummary, ScenarioConfig};
pub use time::SimTime;
