use std::time::Duration;

use parking_lot::{Condvar, Mutex};

use super::{ChatBackend, ChatRequest, LlmError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_backoff: Duration,
    pub multiplier: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 5,
            base_backoff: Duration::from_millis(500),
            multiplier: 2.0,
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        self.base_backoff.mul_f64(self.multiplier.powi(retry as i32))
    }
}

struct Slots {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Slots);

impl Slots {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock();
        while *free == 0 {
            self.cv.wait(&mut free);
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock() += 1;
        self.0.cv.notify_one();
    }
}

/// Limits outstanding remote requests and retries retryable failures with
/// exponential backoff. Local backends are passed through untouched.
pub struct BudgetedBackend<B> {
    inner: B,
    slots: Slots,
    policy: RetryPolicy,
}

pub fn with_budget<B: ChatBackend>(
    inner: B,
    max_inflight: usize,
    policy: RetryPolicy,
) -> Result<BudgetedBackend<B>, LlmError> {
    if max_inflight == 0 {
        return Err(LlmError::Config("max_inflight must be at least 1".into()));
    }
    if policy.max_attempts == 0 {
        return Err(LlmError::Config("max_attempts must be at least 1".into()));
    }
    Ok(BudgetedBackend {
        inner,
        slots: Slots {
            free: Mutex::new(max_inflight),
            cv: Condvar::new(),
        },
        policy,
    })
}

impl<B: ChatBackend> ChatBackend for BudgetedBackend<B> {
    fn complete(&self, request: &ChatRequest) -> Result<String, LlmError> {
        if !self.inner.is_remote() {
            return self.inner.complete(request);
        }
        let mut attempt = 0;
        loop {
            let result = {
                let _permit = self.slots.acquire();
                self.inner.complete(request)
            };
            attempt += 1;
            match result {
                Err(e) if e.is_retryable() && attempt < self.policy.max_attempts => {
                    let wait = self.policy.backoff(attempt - 1);
                    tracing::debug!(tag = %request.tag, attempt, ?wait, error = %e, "retrying completion");
                    std::thread::sleep(wait);
                }
                other => return other,
            }
        }
    }

    fn is_remote(&self) -> bool {
        self.inner.is_remote()
    }
}
