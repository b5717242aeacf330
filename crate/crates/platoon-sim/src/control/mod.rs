//! Platooning control: discrete PID plus the CAM-trail follower built on it.

pub mod follower;
pub mod pid;

pub use follower::{
    lateral_control, longitudinal_control, lost_track_check, FollowerConfig, FollowerController,
    LeaderTrail, TrailPoint,
};
pub use pid::{pid_step, PidGains, PidState};
