//! Acceptance reporting: one pass/fail line per criterion.

use std::time::{Duration, Instant};

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl Verdict {
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {}: {} ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Runs `check`, failing it when it errors, panics or exceeds `limit`.
pub fn run(
    id: u8,
    name: &'static str,
    limit: Option<Duration>,
    check: impl FnOnce() -> Result<String, String>,
) -> Verdict {
    let start = Instant::now();
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(check));
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = match result {
        Ok(Ok(d)) => (true, d),
        Ok(Err(e)) => (false, e),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail = format!(
                "{detail}; exceeded time limit of {:.0}s",
                limit.as_secs_f64()
            );
        }
    }
    Verdict {
        id,
        name,
        passed,
        detail,
        elapsed,
    }
}

/// Fails with `msg` unless `cond` holds.
pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_capture_errors_panics_and_time_limits() {
        assert!(run(1, "ok", None, || Ok("fine".into())).passed);
        let e = run(2, "err", None, || Err("bad".into()));
        assert!(!e.passed && e.detail == "bad");
        let p = run(3, "panic", None, || panic!("boom"));
        assert!(!p.passed && p.detail.contains("boom"));
        let slow = run(4, "slow", Some(Duration::ZERO), || {
            std::thread::sleep(Duration::from_millis(2));
            Ok("done".into())
        });
        assert!(!slow.passed && slow.detail.contains("time limit"));
        assert!(slow.line().starts_with("FAIL [4] slow: done"));
    }
}
