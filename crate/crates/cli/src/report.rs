use std::time::Duration;

use serde::Serialize;

/// Outcome of one certificate or bound, aggregated over trials.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Worst (or mean, for time bounds) measured quantity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    /// What `measured` is compared against.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: &str, pass: bool) -> Self {
        Self {
            name: name.to_string(),
            pass,
            measured: None,
            limit: None,
            note: None,
        }
    }

    pub fn measured(mut self, measured: f64) -> Self {
        self.measured = Some(measured);
        self
    }

    pub fn limit(mut self, limit: f64) -> Self {
        self.limit = Some(limit);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_bound(&self) -> bool {
        matches!(self.name.as_str(), "time_bound" | "freeze" | "geometric_rate")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
}

/// Contents of `certificate.json`. Timing is kept out of the file so that
/// repeated runs write identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub model: String,
    pub seed: u64,
    pub stochastic: bool,
    pub trials: usize,
    /// `max_iters` if any trial stopped on the iteration cap.
    pub status: Status,
    /// Transitions taken in trial 0.
    pub iterations: usize,
    /// Last Lyapunov value of trial 0, in the `lyapunov.csv` format.
    pub final_lyapunov: String,
    pub checks: Vec<Check>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl RunSummary {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// 0 converged with every check passing, 2 iteration cap reached,
    /// 3 a check failed (takes precedence).
    pub fn exit_code(&self) -> i32 {
        if !self.all_pass() {
            3
        } else if self.status == Status::MaxIters {
            2
        } else {
            0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub model: String,
    pub seed: u64,
    pub trials: usize,
    pub bounds: Vec<Check>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.bounds.iter().all(|c| c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(status: Status, pass: bool) -> RunSummary {
        RunSummary {
            model: "hk".into(),
            seed: 0,
            stochastic: false,
            trials: 1,
            status,
            iterations: 3,
            final_lyapunov: "0.0".into(),
            checks: vec![Check::new("monotone", pass)],
            elapsed: Duration::ZERO,
        }
    }

    #[test]
    fn exit_codes() {
        assert_eq!(summary(Status::Converged, true).exit_code(), 0);
        assert_eq!(summary(Status::MaxIters, true).exit_code(), 2);
        assert_eq!(summary(Status::Converged, false).exit_code(), 3);
        assert_eq!(summary(Status::MaxIters, false).exit_code(), 3);
    }

    #[test]
    fn timing_stays_out_of_the_file() {
        let mut a = summary(Status::Converged, true);
        let json = serde_json::to_string(&a).unwrap();
        a.elapsed = Duration::from_secs(5);
        assert_eq!(serde_json::to_string(&a).unwrap(), json);
        assert!(!json.contains("elapsed"));
    }
}
