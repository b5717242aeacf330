//! Parametric lossy broadcast channel with a node position table.
//!
//! Stands in for the radio lower layers: every node within Euclidean range
//! of the sender is an eligible receiver; each eligible receiver draws an
//! independent Bernoulli loss, and survivors are assigned a delivery time of
//! `now + delay_fixed + Uniform(0, delay_jitter)`. All randomness comes from
//! one channel-owned seeded stream, so runs are reproducible.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::OdometrySample;
use crate::kernel::NodeId;
use crate::time::SimTime;

/// Channel parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub delay_fixed: Duration,
    /// Maximum extra uniform delay; zero disables jitter.
    pub delay_jitter: Duration,
    /// Per-receiver drop probability in `[0, 1]`.
    pub loss_prob: f64,
    /// Reception range in meters.
    pub range: f64,
    pub rng_seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            delay_fixed: Duration::from_millis(1),
            delay_jitter: Duration::ZERO,
            loss_prob: 0.0,
            range: 300.0,
            rng_seed: 0,
        }
    }
}

/// One successful reception decision: who gets the frame and when.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub receiver: NodeId,
    pub deliver_at: SimTime,
}

/// Transmission counters kept by the channel.
///
/// For every transmitted frame each other node falls into exactly one
/// bucket, so `delivered + dropped + out_of_range == sent * (nodes - 1)`.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ChannelStats {
    pub sent: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub out_of_range: u64,
}

/// Broadcast medium shared by all nodes of one simulation.
pub struct BroadcastChannel {
    cfg: ChannelConfig,
    rng: ChaCha8Rng,
    positions: Vec<Option<(f64, f64)>>,
    stats: ChannelStats,
}

impl BroadcastChannel {
    pub fn new(cfg: ChannelConfig, node_count: usize) -> Self {
        assert!(
            (0.0..=1.0).contains(&cfg.loss_prob),
            "loss probability must be within [0, 1]"
        );
        assert!(cfg.range > 0.0, "range must be positive");
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
        // Dedicated stream: keeps channel draws independent of any other
        // consumer seeded from the same scenario seed.
        rng.set_stream(1);
        BroadcastChannel {
            cfg,
            rng,
            positions: vec![None; node_count],
            stats: ChannelStats::default(),
        }
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn stats(&self) -> ChannelStats {
        self.stats
    }

    /// Records the latest odometry-derived position of `node`. Must run
    /// before any same-tick transmission so range checks see fresh data.
    pub fn mobility_update(&mut self, node: NodeId, odom: &OdometrySample) {
        self.positions[node.0] = Some((odom.x, odom.y));
    }

    pub fn position(&self, node: NodeId) -> Option<(f64, f64)> {
        self.positions[node.0]
    }

    /// Broadcasts one frame from `sender` at `now` and returns the delivery
    /// decisions for every eligible receiver. The sender never receives its
    /// own frame.
    pub fn transmit(&mut self, sender: NodeId, now: SimTime) -> Vec<Delivery> {
        let (sx, sy) = self.positions[sender.0].expect("sender position set by mobility_update");
        self.stats.sent += 1;
        let mut deliveries = Vec::new();
        for (idx, pos) in self.positions.iter().enumerate() {
            if idx == sender.0 {
                continue;
            }
            let (rx, ry) = pos.expect("receiver position set by mobility_update");
            let dist = ((rx - sx).powi(2) + (ry - sy).powi(2)).sqrt();
            if dist > self.cfg.range {
                self.stats.out_of_range += 1;
                continue;
            }
            let u: f64 = self.rng.random();
            if u < self.cfg.loss_prob {
                self.stats.dropped += 1;
                continue;
            }
            let mut delay = self.cfg.delay_fixed;
            let jitter_ns = self.cfg.delay_jitter.as_nanos() as u64;
            if jitter_ns > 0 {
                delay += Duration::from_nanos(self.rng.random_range(0..jitter_ns));
            }
            self.stats.delivered += 1;
            deliveries.push(Delivery {
                receiver: NodeId(idx),
                deliver_at: now + delay,
            });
        }
        deliveries
    }
}
