//! Reporting and small statistical helpers shared by the acceptance run.

use std::time::{Duration, Instant};

/// Collects one verdict per check and prints it as it arrives.
#[derive(Debug, Default)]
pub struct Report {
    failures: Vec<String>,
    total: usize,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, id: &str, pass: bool, detail: impl AsRef<str>) {
        self.total += 1;
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("{verdict}  {id:<36} {}", detail.as_ref());
        if !pass {
            self.failures.push(id.to_string());
        }
    }

    /// Records a wall-clock budget check for work already timed.
    pub fn runtime(&mut self, id: &str, elapsed: Duration, budget: Duration) {
        self.check(id, elapsed < budget, format!("{:.2} s (budget {} s)", elapsed.as_secs_f64(), budget.as_secs()));
    }

    pub fn failures(&self) -> &[String] {
        &self.failures
    }

    /// Prints the summary line and returns the process exit code.
    pub fn finish(&self) -> i32 {
        println!("{} of {} checks passed", self.total - self.failures.len(), self.total);
        if self.failures.is_empty() {
            0
        } else {
            println!("failed: {}", self.failures.join(", "));
            1
        }
    }
}

/// Runs `f` and returns its value with the elapsed time.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

/// One-sample Kolmogorov-Smirnov distance between `sample` and `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical distance of the KS test at the 1% level.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

pub fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}
