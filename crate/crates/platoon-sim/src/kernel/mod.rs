//! Deterministic hybrid simulation core.
//!
//! Couples an event-driven scheduler with a fixed-step clock source under a
//! barrier rule: the event side may never advance past the latest published
//! tick (the *horizon*). A topic bus stands in for middleware transport.
//!
//! The intended driving pattern is lockstep. One physics step runs, the new
//! tick is published with [`CosimKernel::advance_tick`], and the event queue
//! is drained up to that tick with [`CosimKernel::run_until`] before the next
//! step. Everything is single-threaded; with the same inputs the executed
//! event sequence is identical across runs.

mod bus;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Duration;

use thiserror::Error;

use crate::time::SimTime;

pub use bus::{Bus, SubscriptionId};

/// Topic on which the kernel announces each newly published tick.
pub const CLOCK_TOPIC: &str = "/clock";

/// Index of a network node (one per vehicle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// A scheduled simulation event.
///
/// Total order is `(fire_at, seq)`; `seq` is the insertion sequence number,
/// unique per run, and breaks same-timestamp ties deterministically.
#[derive(Debug, Clone)]
pub struct Event<M> {
    pub fire_at: SimTime,
    pub seq: u64,
    pub target: NodeId,
    pub payload: M,
}

/// Fixed-step clock source: tick period and the latest published tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TickConfig {
    pub period: Duration,
    pub horizon: SimTime,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KernelError {
    #[error("event scheduled in the past: fire_at {fire_at} < now {now}")]
    ScheduleInPast { fire_at: SimTime, now: SimTime },
    #[error("run_until({t}) reaches beyond the clock horizon {horizon}")]
    BeyondHorizon { t: SimTime, horizon: SimTime },
    #[error("run_until({t}) would move time backwards from {now}")]
    TimeReversal { t: SimTime, now: SimTime },
    #[error("advance_tick with undrained events at or before horizon {horizon}")]
    UndrainedEvents { horizon: SimTime },
}

/// Min-heap entry ordered by `(fire_at, seq)`.
struct QueuedEvent<M>(Event<M>);

impl<M> PartialEq for QueuedEvent<M> {
    fn eq(&self, other: &Self) -> bool {
        self.0.fire_at == other.0.fire_at && self.0.seq == other.0.seq
    }
}

impl<M> Eq for QueuedEvent<M> {}

impl<M> PartialOrd for QueuedEvent<M> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<M> Ord for QueuedEvent<M> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; reverse for earliest-first.
        (self.0.fire_at, self.0.seq)
            .cmp(&(other.0.fire_at, other.0.seq))
            .reverse()
    }
}

/// The co-simulation kernel: event queue, clock barrier and topic bus.
pub struct CosimKernel<M> {
    now: SimTime,
    tick: TickConfig,
    next_seq: u64,
    queue: BinaryHeap<QueuedEvent<M>>,
    bus: Bus<M>,
    executed: u64,
}

impl<M> CosimKernel<M> {
    pub fn new(period: Duration) -> Self {
        assert!(!period.is_zero(), "tick period must be positive");
        CosimKernel {
            now: SimTime::ZERO,
            tick: TickConfig {
                period,
                horizon: SimTime::ZERO,
            },
            next_seq: 0,
            queue: BinaryHeap::new(),
            bus: Bus::new(),
            executed: 0,
        }
    }

    /// Current simulation time as observed by the event side. Monotonically
    /// non-decreasing and never beyond [`Self::horizon`].
    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Latest published tick; the barrier the event side must not cross.
    pub fn horizon(&self) -> SimTime {
        self.tick.horizon
    }

    pub fn period(&self) -> Duration {
        self.tick.period
    }

    pub fn pending_events(&self) -> usize {
        self.queue.len()
    }

    pub fn events_executed(&self) -> u64 {
        self.executed
    }

    /// Queues an event. Scheduling before `now()` is a sync-protocol
    /// violation and is rejected.
    pub fn schedule(
        &mut self,
        fire_at: SimTime,
        target: NodeId,
        payload: M,
    ) -> Result<u64, KernelError> {
        if fire_at < self.now {
            return Err(KernelError::ScheduleInPast {
                fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(QueuedEvent(Event {
            fire_at,
            seq,
            target,
            payload,
        }));
        Ok(seq)
    }

    /// Executes every queued event with `fire_at <= t` in `(fire_at, seq)`
    /// order, advancing `now()` to each event time and finally to `t`.
    /// Returns the number of events executed.
    ///
    /// `t` may not exceed the horizon: the network side never outruns the
    /// clock source.
    pub fn run_until(
        &mut self,
        t: SimTime,
        mut on_event: impl FnMut(Event<M>),
    ) -> Result<usize, KernelError> {
        if t > self.tick.horizon {
            return Err(KernelError::BeyondHorizon {
                t,
                horizon: self.tick.horizon,
            });
        }
        if t < self.now {
            return Err(KernelError::TimeReversal { t, now: self.now });
        }
        let mut count = 0;
        while let Some(head) = self.queue.peek() {
            if head.0.fire_at > t {
                break;
            }
            let ev = self.queue.pop().expect("peeked").0;
            // Barrier safety net: an event must never execute beyond the
            // latest published tick.
            assert!(
                ev.fire_at <= self.tick.horizon,
                "clock barrier violated: event at {} beyond horizon {}",
                ev.fire_at,
                self.tick.horizon
            );
            self.now = ev.fire_at;
            self.executed += 1;
            count += 1;
            on_event(ev);
        }
        self.now = t;
        Ok(count)
    }

    /// Publishes the next tick: the horizon moves forward by exactly one
    /// period and the new value is announced on [`CLOCK_TOPIC`].
    ///
    /// Requires the queue to be drained through the current horizon first
    /// (`run_until(horizon())`), otherwise the lockstep contract is broken.
    pub fn advance_tick(&mut self) -> Result<SimTime, KernelError>
    where
        M: From<SimTime>,
    {
        if self.now < self.tick.horizon {
            return Err(KernelError::UndrainedEvents {
                horizon: self.tick.horizon,
            });
        }
        if let Some(head) = self.queue.peek() {
            if head.0.fire_at <= self.tick.horizon {
                return Err(KernelError::UndrainedEvents {
                    horizon: self.tick.horizon,
                });
            }
        }
        self.tick.horizon += self.tick.period;
        let announced = self.tick.horizon;
        self.bus.publish(self.now, CLOCK_TOPIC, &M::from(announced));
        Ok(announced)
    }

    /// See [`Bus::publish`]; the message is stamped with `now()`.
    pub fn publish(&self, topic: &str, payload: M) -> usize {
        self.bus.publish(self.now, topic, &payload)
    }

    /// See [`Bus::subscribe`].
    pub fn subscribe(
        &mut self,
        topic: &str,
        handler: impl FnMut(SimTime, &M) + 'static,
    ) -> SubscriptionId {
        self.bus.subscribe(topic, handler)
    }

    /// See [`Bus::unsubscribe`].
    pub fn unsubscribe(&mut self, id: SubscriptionId) -> bool {
        self.bus.unsubscribe(id)
    }

    pub fn bus(&self) -> &Bus<M> {
        &self.bus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::cell::RefCell;
    use std::rc::Rc;

    #[derive(Debug, Clone, Copy, PartialEq)]
    enum Msg {
        Clock,
        Payload(u32),
    }

    impl From<SimTime> for Msg {
        fn from(_: SimTime) -> Self {
            Msg::Clock
        }
    }

    fn payload(m: Msg) -> u32 {
        match m {
            Msg::Payload(v) => v,
            Msg::Clock => panic!("unexpected clock message"),
        }
    }

    fn kernel_with_horizon(horizon_ms: u64) -> CosimKernel<Msg> {
        let mut k = CosimKernel::new(Duration::from_millis(20));
        while k.horizon() < SimTime::from_millis(horizon_ms) {
            k.run_until(k.horizon(), |_| {}).unwrap();
            k.advance_tick().unwrap();
        }
        k
    }

    /// Lockstep loop: drain to each horizon, then publish the next tick,
    /// until the horizon reaches `until`.
    fn drive(k: &mut CosimKernel<Msg>, until: SimTime, mut sink: impl FnMut(Event<Msg>)) {
        loop {
            let h = k.horizon();
            k.run_until(h, &mut sink).unwrap();
            if h >= until {
                break;
            }
            k.advance_tick().unwrap();
        }
    }

    #[test]
    fn schedule_at_now_executes_before_later_events() {
        let mut k = kernel_with_horizon(20);
        k.schedule(SimTime::from_millis(10), NodeId(1), Msg::Payload(1))
            .unwrap();
        k.schedule(SimTime::ZERO, NodeId(0), Msg::Payload(0))
            .unwrap();
        let mut order = Vec::new();
        k.run_until(SimTime::from_millis(20), |e| order.push(payload(e.payload)))
            .unwrap();
        assert_eq!(order, vec![0, 1]);
    }

    #[test]
    fn same_timestamp_ties_break_by_insertion_order() {
        let mut k = kernel_with_horizon(20);
        let t = SimTime::from_millis(10);
        for i in 0..5 {
            k.schedule(t, NodeId(i), Msg::Payload(i as u32)).unwrap();
        }
        let mut order = Vec::new();
        k.run_until(t, |e| order.push(payload(e.payload))).unwrap();
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn scheduling_in_the_past_is_an_error() {
        let mut k = kernel_with_horizon(40);
        k.run_until(SimTime::from_millis(30), |_| {}).unwrap();
        let err = k
            .schedule(SimTime::from_millis(10), NodeId(0), Msg::Payload(0))
            .unwrap_err();
        assert!(matches!(err, KernelError::ScheduleInPast { .. }));
    }

    #[test]
    fn run_until_on_empty_queue_advances_time() {
        let mut k = kernel_with_horizon(20);
        let n = k.run_until(SimTime::from_millis(15), |_| {}).unwrap();
        assert_eq!(n, 0);
        assert_eq!(k.now(), SimTime::from_millis(15));
    }

    #[test]
    fn run_until_executes_only_due_events() {
        let mut k = kernel_with_horizon(20);
        k.schedule(SimTime::from_millis(5), NodeId(0), Msg::Payload(5))
            .unwrap();
        k.schedule(SimTime::from_millis(15), NodeId(0), Msg::Payload(15))
            .unwrap();
        let n = k.run_until(SimTime::from_millis(10), |_| {}).unwrap();
        assert_eq!(n, 1);
        assert_eq!(k.pending_events(), 1);
        assert_eq!(k.now(), SimTime::from_millis(10));
    }

    #[test]
    fn run_until_beyond_horizon_is_an_error() {
        let mut k = kernel_with_horizon(20);
        let err = k.run_until(SimTime::from_millis(21), |_| {}).unwrap_err();
        assert!(matches!(err, KernelError::BeyondHorizon { .. }));
    }

    #[test]
    fn run_until_never_moves_time_backwards() {
        let mut k = kernel_with_horizon(20);
        k.run_until(SimTime::from_millis(15), |_| {}).unwrap();
        let err = k.run_until(SimTime::from_millis(10), |_| {}).unwrap_err();
        assert!(matches!(err, KernelError::TimeReversal { .. }));
        assert_eq!(k.now(), SimTime::from_millis(15));
    }

    #[test]
    fn advance_tick_moves_horizon_by_one_period() {
        let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
        assert_eq!(k.advance_tick().unwrap(), SimTime::from_millis(20));
        k.run_until(k.horizon(), |_| {}).unwrap();
        k.advance_tick().unwrap();
        k.run_until(k.horizon(), |_| {}).unwrap();
        assert_eq!(k.advance_tick().unwrap(), SimTime::from_millis(60));
    }

    #[test]
    fn sixty_seconds_at_twenty_ms_publishes_3000_ticks() {
        let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
        let clock_count = Rc::new(RefCell::new(0u32));
        let c = clock_count.clone();
        k.subscribe(CLOCK_TOPIC, move |_, m| {
            assert_eq!(*m, Msg::Clock);
            *c.borrow_mut() += 1;
        });
        while k.horizon() < SimTime::from_secs(60) {
            k.run_until(k.horizon(), |_| {}).unwrap();
            k.advance_tick().unwrap();
        }
        assert_eq!(*clock_count.borrow(), 3000);
    }

    #[test]
    fn advance_tick_with_undrained_events_is_an_error() {
        let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
        k.advance_tick().unwrap();
        k.schedule(SimTime::from_millis(10), NodeId(0), Msg::Payload(0))
            .unwrap();
        let err = k.advance_tick().unwrap_err();
        assert!(matches!(err, KernelError::UndrainedEvents { .. }));
        // Draining clears the error.
        k.run_until(k.horizon(), |_| {}).unwrap();
        k.advance_tick().unwrap();
    }

    #[test]
    fn now_never_exceeds_horizon() {
        let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
        for ms in [3u64, 30, 60, 99] {
            k.schedule(SimTime::from_millis(ms), NodeId(0), Msg::Payload(ms as u32))
                .unwrap();
        }
        drive(&mut k, SimTime::from_millis(100), |_| {});
        assert_eq!(k.now(), k.horizon());
        assert_eq!(k.events_executed(), 4);
    }

    /// Naive oracle: linear scan for the minimum `(fire_at, seq)`.
    struct ListScheduler {
        items: Vec<(SimTime, u64, usize)>,
    }

    impl ListScheduler {
        fn pop_min(&mut self) -> Option<(SimTime, u64, usize)> {
            let idx = self
                .items
                .iter()
                .enumerate()
                .min_by_key(|(_, it)| (it.0, it.1))?
                .0;
            Some(self.items.remove(idx))
        }
    }

    #[test]
    fn execution_order_matches_list_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let n = rng.random_range(1..=200);
            let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
            let mut oracle = ListScheduler { items: Vec::new() };
            for _ in 0..n {
                let t = SimTime::from_millis(rng.random_range(0..50));
                let target = rng.random_range(0..4usize);
                let seq = k.schedule(t, NodeId(target), Msg::Payload(0)).unwrap();
                oracle.items.push((t, seq, target));
            }
            let mut got = Vec::new();
            drive(&mut k, SimTime::from_millis(60), |e| {
                got.push((e.fire_at, e.seq, e.target.0))
            });
            let mut want = Vec::new();
            while let Some(it) = oracle.pop_min() {
                want.push(it);
            }
            assert_eq!(got, want);
        }
    }

    #[test]
    fn identical_inputs_give_identical_executions() {
        let build = || {
            let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for _ in 0..500 {
                let t = SimTime::from_millis(rng.random_range(0..200));
                k.schedule(t, NodeId(rng.random_range(0..3usize)), Msg::Payload(0))
                    .unwrap();
            }
            let mut seen = Vec::new();
            drive(&mut k, SimTime::from_millis(200), |e| {
                seen.push((e.fire_at, e.seq, e.target.0))
            });
            seen
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn lockstep_processes_every_event_exactly_once() {
        let mut k: CosimKernel<Msg> = CosimKernel::new(Duration::from_millis(20));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut scheduled = Vec::new();
        // Events over the first second, scheduled up front.
        for _ in 0..300 {
            let t = SimTime::from_nanos(rng.random_range(0..1_000_000_000));
            let seq = k.schedule(t, NodeId(0), Msg::Payload(0)).unwrap();
            scheduled.push(seq);
        }
        let mut executed = Vec::new();
        while k.horizon() < SimTime::from_secs(1) {
            k.run_until(k.horizon(), |e| executed.push(e.seq)).unwrap();
            k.advance_tick().unwrap();
        }
        k.run_until(k.horizon(), |e| executed.push(e.seq)).unwrap();
        scheduled.sort_unstable();
        let mut executed_sorted = executed.clone();
        executed_sorted.sort_unstable();
        assert_eq!(executed_sorted, scheduled);
        assert_eq!(k.pending_events(), 0);
    }

    #[test]
    fn zero_delay_event_at_now_is_allowed() {
        let mut k = kernel_with_horizon(20);
        k.run_until(SimTime::from_millis(10), |_| {}).unwrap();
        k.schedule(k.now(), NodeId(0), Msg::Payload(1)).unwrap();
        let n = k.run_until(SimTime::from_millis(11), |_| {}).unwrap();
        assert_eq!(n, 1);
    }
}
