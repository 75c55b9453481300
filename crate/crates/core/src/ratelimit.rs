//! Sliding-log request limiter driven by caller-supplied timestamps.
//!
//! The limiter never reads a clock itself, so the same code runs against the
//! wall clock in production and a simulated clock in tests.

use alloc::collections::VecDeque;

pub const MINUTE_MS: u64 = 60_000;

#[derive(Debug, Clone)]
pub struct RateWindow {
    limit: usize,
    window_ms: u64,
    granted: VecDeque<u64>,
}

impl RateWindow {
    pub fn new(limit: usize, window_ms: u64) -> Self {
        assert!(limit > 0 && window_ms > 0, "rate window needs a positive limit and width");
        Self { limit, window_ms, granted: VecDeque::with_capacity(limit) }
    }

    pub fn per_minute(limit: usize) -> Self {
        Self::new(limit, MINUTE_MS)
    }

    /// Grants a request at `now_ms`, or returns how many milliseconds to wait
    /// before asking again. Timestamps must not go backwards.
    ///
    /// Any half-open interval of `window_ms` contains at most `limit` grants.
    pub fn try_acquire(&mut self, now_ms: u64) -> Result<(), u64> {
        while self.granted.front().is_some_and(|&t| t + self.window_ms <= now_ms) {
            self.granted.pop_front();
        }
        if self.granted.len() < self.limit {
            self.granted.push_back(now_ms);
            Ok(())
        } else {
            let oldest = self.granted[0];
            Err(oldest + self.window_ms - now_ms)
        }
    }
}
