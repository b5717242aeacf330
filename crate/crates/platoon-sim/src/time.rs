//! Integer-nanosecond time base shared by both simulator halves.

use std::fmt;
use std::ops::{Add, AddAssign};
use std::time::Duration;

/// Nanoseconds since simulation start.
///
/// The whole framework runs on an integer clock: tick boundaries, CAM
/// generation instants and channel delays are exact nanosecond values, so no
/// floating-point drift can accumulate between the event-driven and the
/// time-driven side.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime {
    nanos: u64,
}

impl SimTime {
    pub const ZERO: SimTime = SimTime { nanos: 0 };

    pub const fn from_nanos(nanos: u64) -> Self {
        SimTime { nanos }
    }

    pub const fn from_millis(millis: u64) -> Self {
        SimTime {
            nanos: millis * 1_000_000,
        }
    }

    pub const fn from_secs(secs: u64) -> Self {
        SimTime {
            nanos: secs * 1_000_000_000,
        }
    }

    pub const fn as_nanos(self) -> u64 {
        self.nanos
    }

    /// Whole milliseconds since start (floor).
    pub const fn as_millis(self) -> u64 {
        self.nanos / 1_000_000
    }

    pub fn as_secs_f64(self) -> f64 {
        self.nanos as f64 / 1e9
    }

    /// Time elapsed since `earlier`.
    ///
    /// Panics if `earlier` is in the future; callers only measure ages of
    /// past instants.
    pub fn duration_since(self, earlier: SimTime) -> Duration {
        let nanos = self
            .nanos
            .checked_sub(earlier.nanos)
            .expect("duration_since: earlier instant is in the future");
        Duration::from_nanos(nanos)
    }

    /// True when this instant lies on a multiple of `period`.
    pub fn is_multiple_of(self, period: Duration) -> bool {
        let p = period.as_nanos() as u64;
        p != 0 && self.nanos.is_multiple_of(p)
    }
}

impl Add<Duration> for SimTime {
    type Output = SimTime;

    fn add(self, rhs: Duration) -> SimTime {
        SimTime {
            nanos: self.nanos + rhs.as_nanos() as u64,
        }
    }
}

impl AddAssign<Duration> for SimTime {
    fn add_assign(&mut self, rhs: Duration) {
        *self = *self + rhs;
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6}s", self.as_secs_f64())
    }
}

/// Period of a rate given in hertz, rounded to the nearest nanosecond.
pub fn period_from_hz(hz: f64) -> Duration {
    assert!(hz > 0.0 && hz.is_finite(), "rate must be a positive number");
    Duration::from_nanos((1e9 / hz).round() as u64)
}

/// True when `d` is an exact multiple of `tick`.
pub fn is_exact_multiple(d: Duration, tick: Duration) -> bool {
    let t = tick.as_nanos();
    t != 0 && d.as_nanos().is_multiple_of(t)
}
