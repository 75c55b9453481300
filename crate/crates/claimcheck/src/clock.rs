//! Time source for rate limiting, backoff, latencies and timestamps.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use chrono::{DateTime, TimeZone, Utc};

pub trait Clock: Send + Sync {
    /// Monotonic milliseconds since an arbitrary origin.
    fn now_ms(&self) -> u64;
    fn sleep_ms(&self, ms: u64);
    fn now_utc(&self) -> DateTime<Utc>;
}

#[derive(Debug)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now_ms(&self) -> u64 {
        self.origin.elapsed().as_millis() as u64
    }

    fn sleep_ms(&self, ms: u64) {
        std::thread::sleep(Duration::from_millis(ms));
    }

    fn now_utc(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Simulated clock: sleeping advances time instantly. Wall-clock time is
/// `epoch + elapsed`.
#[derive(Debug)]
pub struct SimClock {
    epoch: DateTime<Utc>,
    ms: AtomicU64,
}

impl SimClock {
    pub fn new(epoch: DateTime<Utc>) -> Self {
        Self { epoch, ms: AtomicU64::new(0) }
    }

    pub fn advance(&self, ms: u64) {
        self.ms.fetch_add(ms, Ordering::SeqCst);
    }
}

impl Default for SimClock {
    fn default() -> Self {
        Self::new(Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap())
    }
}

impl Clock for SimClock {
    fn now_ms(&self) -> u64 {
        self.ms.load(Ordering::SeqCst)
    }

    fn sleep_ms(&self, ms: u64) {
        self.advance(ms);
    }

    fn now_utc(&self) -> DateTime<Utc> {
        self.epoch + chrono::Duration::milliseconds(self.now_ms() as i64)
    }
}
