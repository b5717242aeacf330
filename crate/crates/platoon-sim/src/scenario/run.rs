//! Scenario execution: wiring vehicles, nodes and controllers into the
//! kernel, the per-tick loop, and the frequency sweep.
//!
//! Per-tick phase order: leader profile control and odometry publishing,
//! mobility updates, CAM generation, channel transmission, event drain,
//! follower control, physics step, metrics. After the physics step the next
//! tick is published and the event side catches up to it, so the network is
//! never ahead of the physics clock.

use std::cell::RefCell;
use std::rc::Rc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::control::FollowerController;
use crate::dynamics::{sensor_read, Actuation, OdometrySample, VehicleState};
use crate::itsg5::{
    BroadcastChannel, CaService, CaServiceConfig, ChannelConfig, ChannelStats, EncodedFrame,
};
use crate::kernel::{CosimKernel, Event, NodeId};
use crate::scenario::config::{ConfigError, ProfileSegment, Role, ScenarioConfig};
use crate::time::SimTime;

/// Transient catch-up interval discarded before computing run statistics.
pub const SETTLING: Duration = Duration::from_secs(30);

/// Message type carried by the kernel bus and event queue.
#[derive(Debug, Clone, Copy)]
pub enum SimMsg {
    Clock(SimTime),
    Odom(OdometrySample),
    Frame(EncodedFrame),
}

impl From<SimTime> for SimMsg {
    fn from(t: SimTime) -> Self {
        SimMsg::Clock(t)
    }
}

/// Odometry topic for the vehicle at 0-based `index` ("/car1/odom", ...).
pub fn odom_topic(index: usize) -> String {
    format!("/car{}/odom", index + 1)
}

/// Per-follower values sampled once per tick, after the physics step.
/// `gap` is the true inter-distance to the predecessor, not the CAM-derived
/// distance the controller acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerSample {
    pub gap: f64,
    pub steer: f64,
    pub speed: f64,
    pub lost: bool,
}

/// One row of the metrics stream; one record per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub time_s: f64,
    pub followers: Vec<FollowerSample>,
}

/// Post-settling statistics for one follower.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FollowerStats {
    pub rms_gap_error: f64,
    pub max_gap: f64,
    pub min_gap: f64,
    pub steer_std: f64,
    pub lost_track_events: u64,
}

/// Whole-run result: per-follower statistics plus CAM accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub cam_hz: f64,
    pub seed: u64,
    pub ticks: u64,
    pub followers: Vec<FollowerStats>,
    pub cams_sent: u64,
    pub cams_received: u64,
    pub cams_dropped: u64,
    pub cams_out_of_range: u64,
}

/// Leader command lookup over the piecewise-constant profile. Past the last
/// segment the final commands are held; an empty profile parks the leader.
fn profile_command(profile: &[ProfileSegment], t: SimTime) -> (f64, f64) {
    let mut end = SimTime::ZERO;
    for seg in profile {
        end += seg.duration;
        if t < end {
            return (seg.target_speed, seg.steer);
        }
    }
    profile
        .last()
        .map_or((0.0, 0.0), |s| (s.target_speed, s.steer))
}

/// Speed-profile control for the leader: reach the target speed in as few
/// ticks as the accel limits allow, then hold it exactly.
fn leader_actuation(profile: &[ProfileSegment], t: SimTime, speed: f64, dt: Duration) -> Actuation {
    let (target, steer) = profile_command(profile, t);
    Actuation {
        accel: (target - speed) / dt.as_secs_f64(),
        steer,
    }
}

fn deliver_frame(controllers: &mut [Option<FollowerController>], ev: Event<SimMsg>) {
    if let SimMsg::Frame(frame) = &ev.payload {
        if let Some(ctl) = controllers[ev.target.0].as_mut() {
            ctl.on_frame(frame, ev.fire_at);
        }
    }
}

/// Runs one scenario to completion and returns the metrics stream plus the
/// summary. The configuration must already be validated.
pub fn run_scenario(cfg: &ScenarioConfig) -> (Vec<MetricsRecord>, RunSummary) {
    let n = cfg.vehicles.len();
    let tick = cfg.tick;
    let n_ticks = (cfg.duration.as_nanos() / tick.as_nanos()) as u64;

    let mut kernel: CosimKernel<SimMsg> = CosimKernel::new(tick);
    let mut channel = BroadcastChannel::new(
        ChannelConfig {
            rng_seed: cfg.seed,
            ..cfg.channel
        },
        n,
    );

    let mut states: Vec<VehicleState> = cfg
        .vehicles
        .iter()
        .map(|v| VehicleState::at_rest(v.x, v.y, v.heading))
        .collect();

    // Vehicle-data-provider caches, fed through the odometry topics. One
    // subscription per vehicle keeps the newest sample for its node.
    let vdp: Vec<Rc<RefCell<Option<OdometrySample>>>> =
        (0..n).map(|_| Rc::new(RefCell::new(None))).collect();
    for (i, cache) in vdp.iter().enumerate() {
        let cache = Rc::clone(cache);
        kernel.subscribe(&odom_topic(i), move |_, msg| {
            if let SimMsg::Odom(sample) = msg {
                *cache.borrow_mut() = Some(*sample);
            }
        });
    }

    let mut services: Vec<CaService> = (0..n)
        .map(|i| {
            CaService::new(
                i as u32 + 1,
                CaServiceConfig {
                    generation_hz: cfg.cam_hz,
                },
            )
        })
        .collect();

    let mut controllers: Vec<Option<FollowerController>> = cfg
        .vehicles
        .iter()
        .map(|v| match v.role {
            Role::Leader => None,
            Role::Follower => {
                let pred = v.predecessor.expect("validated chain");
                Some(FollowerController::new(
                    cfg.follower,
                    cfg.lon_gains,
                    cfg.lat_gains,
                    pred as u32 + 1,
                    v.params.min_accel,
                ))
            }
        })
        .collect();
    let follower_indices: Vec<usize> = (0..n).filter(|&i| controllers[i].is_some()).collect();

    let mut noise_rng = cfg.sensor_noise.enabled().then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(2);
        rng
    });

    let mut records = Vec::with_capacity(n_ticks as usize);
    let mut lost_events = vec![0u64; n];
    let mut prev_lost = vec![false; n];

    for k in 0..n_ticks {
        let t = kernel.now();
        debug_assert_eq!(t, kernel.horizon(), "loop must start at the barrier");

        // Sensing: each vehicle publishes odometry on its topic; the VDP
        // caches pick the samples up synchronously.
        for (i, state) in states.iter().enumerate() {
            let mut sample = sensor_read(state, t);
            if let Some(rng) = noise_rng.as_mut() {
                sample = cfg.sensor_noise.apply(sample, rng);
            }
            kernel.publish(&odom_topic(i), SimMsg::Odom(sample));
        }

        // Mobility before any same-tick transmission.
        for (i, cache) in vdp.iter().enumerate() {
            let sample = cache.borrow().expect("odometry published this tick");
            channel.mobility_update(NodeId(i), &sample);
        }

        // CAM generation and broadcast.
        for (i, service) in services.iter_mut().enumerate() {
            let sample = vdp[i].borrow().expect("odometry published this tick");
            if let Some(frame) = service.step(t, &sample) {
                for d in channel.transmit(NodeId(i), t) {
                    kernel
                        .schedule(d.deliver_at, d.receiver, SimMsg::Frame(frame))
                        .expect("deliveries are never in the past");
                }
            }
        }

        // In-tick drain: deliveries due by now reach the controllers before
        // control runs.
        kernel
            .run_until(t, |ev| deliver_frame(&mut controllers, ev))
            .expect("t is at the horizon");

        // Control.
        let mut actuations = vec![Actuation::default(); n];
        for i in 0..n {
            actuations[i] = match controllers[i].as_mut() {
                None => leader_actuation(&cfg.profile, t, states[i].speed, tick),
                Some(ctl) => {
                    let u = ctl.control(&states[i], t, tick);
                    let lost = ctl.is_lost();
                    if lost && !prev_lost[i] {
                        lost_events[i] += 1;
                    }
                    prev_lost[i] = lost;
                    u
                }
            };
        }

        // Physics.
        for i in 0..n {
            states[i] = cfg.vehicles[i].params.step(&states[i], actuations[i], tick);
        }

        // Metrics, post-step.
        let followers = follower_indices
            .iter()
            .map(|&i| {
                let pred = cfg.vehicles[i].predecessor.expect("validated chain");
                let params = &cfg.vehicles[i].params;
                FollowerSample {
                    gap: states[i].distance_to(&states[pred]),
                    steer: actuations[i]
                        .steer
                        .clamp(-params.max_steer, params.max_steer),
                    speed: states[i].speed,
                    lost: prev_lost[i],
                }
            })
            .collect();
        records.push(MetricsRecord {
            iteration: k,
            time_s: t.as_secs_f64(),
            followers,
        });

        // Publish the next tick and let the network catch up to it.
        kernel
            .advance_tick()
            .expect("queue drained through the horizon");
        kernel
            .run_until(kernel.horizon(), |ev| deliver_frame(&mut controllers, ev))
            .expect("horizon is reachable");
    }

    let follower_lost: Vec<u64> = follower_indices.iter().map(|&i| lost_events[i]).collect();
    let summary = summarize(cfg, &records, channel.stats(), &follower_lost, n_ticks, n);
    (records, summary)
}

fn summarize(
    cfg: &ScenarioConfig,
    records: &[MetricsRecord],
    stats: ChannelStats,
    lost_events: &[u64],
    ticks: u64,
    n_vehicles: usize,
) -> RunSummary {
    let settle_s = SETTLING.as_secs_f64();
    let n_followers = lost_events.len();
    let mut followers = Vec::with_capacity(n_followers);
    for (f, &lost) in lost_events.iter().enumerate() {
        let window: Vec<&FollowerSample> = records
            .iter()
            .filter(|r| r.time_s >= settle_s)
            .map(|r| &r.followers[f])
            .collect();
        let stats_f = if window.is_empty() {
            FollowerStats {
                rms_gap_error: 0.0,
                max_gap: 0.0,
                min_gap: 0.0,
                steer_std: 0.0,
                lost_track_events: lost,
            }
        } else {
            let m = window.len() as f64;
            let rms = (window
                .iter()
                .map(|s| (s.gap - cfg.follower.gap_setpoint).powi(2))
                .sum::<f64>()
                / m)
                .sqrt();
            let mean_steer = window.iter().map(|s| s.steer).sum::<f64>() / m;
            let steer_var = window
                .iter()
                .map(|s| (s.steer - mean_steer).powi(2))
                .sum::<f64>()
                / m;
            FollowerStats {
                rms_gap_error: rms,
                max_gap: window.iter().map(|s| s.gap).fold(f64::MIN, f64::max),
                min_gap: window.iter().map(|s| s.gap).fold(f64::MAX, f64::min),
                steer_std: steer_var.sqrt(),
                lost_track_events: lost,
            }
        };
        followers.push(stats_f);
    }
    // Every transmitted frame resolves to exactly one bucket per receiver.
    debug_assert_eq!(
        stats.delivered + stats.dropped + stats.out_of_range,
        stats.sent * (n_vehicles as u64 - 1),
    );
    RunSummary {
        cam_hz: cfg.cam_hz,
        seed: cfg.seed,
        ticks,
        followers,
        cams_sent: stats.sent,
        cams_received: stats.delivered,
        cams_dropped: stats.dropped,
        cams_out_of_range: stats.out_of_range,
    }
}

/// Builds the config variant for one sweep cell.
fn sweep_variant(base: &ScenarioConfig, cam_hz: f64, seed: u64) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.cam_hz = cam_hz;
    cfg.set_seed(seed);
    cfg
}

/// Runs the full (rate x seed) grid, invoking `observer` after each run,
/// and returns one summary per cell sorted by rate, then seed order.
pub fn run_sweep_with(
    base: &ScenarioConfig,
    cam_hz: &[f64],
    seeds: &[u64],
    mut observer: impl FnMut(&ScenarioConfig, &[MetricsRecord], &RunSummary),
) -> Result<Vec<RunSummary>, ConfigError> {
    let mut rates = cam_hz.to_vec();
    rates.sort_by(|a, b| a.partial_cmp(b).expect("finite rates"));
    for &hz in &rates {
        crate::scenario::config::validate_cam_hz(hz, base.tick)?;
    }
    let mut summaries = Vec::with_capacity(rates.len() * seeds.len());
    for &hz in &rates {
        for &seed in seeds {
            let cfg = sweep_variant(base, hz, seed);
            let (records, summary) = run_scenario(&cfg);
            observer(&cfg, &records, &summary);
            summaries.push(summary);
        }
    }
    Ok(summaries)
}

/// Comparison table across CAM generation rates and seeds.
pub fn run_sweep(
    base: &ScenarioConfig,
    cam_hz: &[f64],
    seeds: &[u64],
) -> Result<Vec<RunSummary>, ConfigError> {
    run_sweep_with(base, cam_hz, seeds, |_, _, _| {})
}
