//! Time sources for envelope stamping.
//!
//! Stamps are seconds since the Unix epoch. The system clock anchors a
//! monotonic `Instant` to the epoch once, so stamps never go backwards even if
//! the wall clock is adjusted. The fake clock is advanced explicitly and is
//! what headless runs and timing tests use.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

/// A source of epoch-seconds timestamps.
pub trait Clock: Send + Sync {
    fn now(&self) -> f64;
}

/// Wall-clock epoch at construction plus monotonic elapsed time.
#[derive(Debug, Clone)]
pub struct SystemClock {
    epoch_at_start: f64,
    start: Instant,
}

impl SystemClock {
    pub fn new() -> Self {
        let epoch_at_start = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        Self {
            epoch_at_start,
            start: Instant::now(),
        }
    }
}

impl Default for SystemClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for SystemClock {
    fn now(&self) -> f64 {
        self.epoch_at_start + self.start.elapsed().as_secs_f64()
    }
}

/// Manually advanced clock with nanosecond resolution.
///
/// Cloning yields a handle to the same underlying time, so a test can keep
/// one handle and hand another to the bus.
#[derive(Debug, Clone, Default)]
pub struct FakeClock {
    nanos: Arc<AtomicU64>,
}

impl FakeClock {
    pub fn new(start_secs: f64) -> Self {
        Self {
            nanos: Arc::new(AtomicU64::new(secs_to_nanos(start_secs))),
        }
    }

    pub fn advance(&self, secs: f64) {
        self.nanos.fetch_add(secs_to_nanos(secs), Ordering::SeqCst);
    }

    pub fn set(&self, secs: f64) {
        self.nanos.store(secs_to_nanos(secs), Ordering::SeqCst);
    }
}

impl Clock for FakeClock {
    fn now(&self) -> f64 {
        self.nanos.load(Ordering::SeqCst) as f64 * 1e-9
    }
}

fn secs_to_nanos(secs: f64) -> u64 {
    (secs.max(0.0) * 1e9).round() as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fake_clock_advances_exactly() {
        let clock = FakeClock::new(10.0);
        let handle = clock.clone();
        for _ in 0..40 {
            handle.advance(0.05);
        }
        assert_eq!(clock.now(), 12.0);
    }

    #[test]
    fn system_clock_is_monotonic() {
        let clock = SystemClock::new();
        let a = clock.now();
        let b = clock.now();
        assert!(b >= a);
        assert!(a > 1.0e9);
    }
}
