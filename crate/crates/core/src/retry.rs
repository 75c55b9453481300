//! Bounded retry with exponential backoff.

use serde::{Deserialize, Serialize};

/// Errors that know whether another attempt could succeed.
pub trait Retryable {
    fn is_retryable(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt; `3` allows four attempts in total.
    pub max_retries: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self { max_retries: 3, base_delay_ms: 500, max_delay_ms: 30_000 }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (1-based): `base * 2^(retry-1)`,
    /// capped at `max_delay_ms`.
    pub fn delay_before(&self, retry: u32) -> u64 {
        let shift = retry.saturating_sub(1).min(63);
        self.base_delay_ms.saturating_mul(1u64 << shift).min(self.max_delay_ms)
    }

    /// Runs `op` until it succeeds, fails with a non-retryable error, or the
    /// retry budget is spent. `sleep` receives each backoff delay. Returns the
    /// result together with the number of attempts made.
    pub fn run<T, E: Retryable>(
        &self,
        mut op: impl FnMut(u32) -> Result<T, E>,
        mut sleep: impl FnMut(u64),
    ) -> (Result<T, E>, u32) {
        let mut attempt = 1;
        loop {
            match op(attempt) {
                Ok(v) => return (Ok(v), attempt),
                Err(e) if e.is_retryable() && attempt <= self.max_retries => {
                    sleep(self.delay_before(attempt));
                    attempt += 1;
                }
                Err(e) => return (Err(e), attempt),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[derive(Debug, PartialEq)]
    struct Flaky(bool);

    impl Retryable for Flaky {
        fn is_retryable(&self) -> bool {
            self.0
        }
    }

    #[test]
    fn two_failures_then_success_is_three_attempts() {
        let mut slept = Vec::new();
        let (res, attempts) =
            RetryPolicy::default().run(|n| if n < 3 { Err(Flaky(true)) } else { Ok(n) }, |ms| slept.push(ms));
        assert_eq!(res, Ok(3));
        assert_eq!(attempts, 3);
        assert_eq!(slept, [500, 1000]);
    }

    #[test]
    fn budget_exhausts() {
        let policy = RetryPolicy { max_retries: 3, base_delay_ms: 1, max_delay_ms: 2 };
        let mut calls = 0;
        let (res, attempts) = policy.run(
            |_| -> Result<(), _> {
                calls += 1;
                Err(Flaky(true))
            },
            |_| {},
        );
        assert_eq!(res, Err(Flaky(true)));
        assert_eq!((attempts, calls), (4, 4));
    }

    #[test]
    fn fatal_errors_stop_immediately() {
        let (res, attempts) =
            RetryPolicy::default().run(|_| -> Result<(), _> { Err(Flaky(false)) }, |_| panic!("no sleep"));
        assert_eq!(res, Err(Flaky(false)));
        assert_eq!(attempts, 1);
    }

    #[test]
    fn delays_are_capped() {
        let p = RetryPolicy { max_retries: 10, base_delay_ms: 100, max_delay_ms: 1000 };
        let d: Vec<u64> = (1..=6).map(|r| p.delay_before(r)).collect();
        assert_eq!(d, [100, 200, 400, 800, 1000, 1000]);
        assert_eq!(p.delay_before(200), 1000);
    }
}
