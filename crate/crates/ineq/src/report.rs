//! Verdict records shared by all trials.

use convolve_core::bootstrap::Interval;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Both sides vanish; nothing was tested.
    Vacuous,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Vacuous => "vacuous",
        }
    }

    pub fn is_failure(&self) -> bool {
        matches!(self, Verdict::Fail)
    }
}

/// Monte Carlo left-hand side against an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub trial: String,
    pub regime: String,
    pub p: f64,
    pub d: f64,
    pub lhs: f64,
    pub lhs_ci: Interval,
    pub rhs: f64,
    pub rhs_ci: Interval,
    pub ratio: f64,
    pub verdict: Verdict,
    /// Exact left-hand side from an enumeration oracle, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_lhs: Option<f64>,
}

impl RatioReport {
    /// Pass iff `lhs / rhs <= 1 + slack`, the slack combining both interval
    /// half-widths to first order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        trial: &str,
        regime: impl Into<String>,
        p: f64,
        d: f64,
        lhs: f64,
        lhs_ci: Interval,
        rhs: f64,
        rhs_ci: Interval,
    ) -> Self {
        let (ratio, verdict) = if lhs == 0.0 && rhs == 0.0 {
            (0.0, Verdict::Vacuous)
        } else if rhs == 0.0 {
            (f64::INFINITY, Verdict::Fail)
        } else {
            let ratio = lhs / rhs;
            let slack = lhs_ci.half_width() / rhs + lhs * rhs_ci.half_width() / (rhs * rhs);
            let v = if ratio <= 1.0 + slack {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
            (ratio, v)
        };
        Self {
            trial: trial.to_string(),
            regime: regime.into(),
            p,
            d,
            lhs,
            lhs_ci,
            rhs,
            rhs_ci,
            ratio,
            verdict,
            exact_lhs: None,
        }
    }

    pub fn with_exact(mut self, exact: Option<f64>) -> Self {
        self.exact_lhs = exact;
        self
    }

    /// The exact value, if known, lies in the Monte Carlo interval.
    pub fn oracle_agrees(&self) -> Option<bool> {
        self.exact_lhs
            .map(|e| self.lhs_ci.lo <= e && e <= self.lhs_ci.hi)
    }
}

/// Empirical survival probability against a tail bound at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub r: f64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    /// The bound is below 1, so the comparison says something.
    pub informative: bool,
    pub pass: bool,
}

impl TailPoint {
    /// Pass iff `empirical <= bound + 4 stderr`, with the binomial standard
    /// error of the empirical frequency.
    pub fn new(r: f64, hits: usize, samples: usize, bound: f64) -> Self {
        let empirical = hits as f64 / samples as f64;
        let stderr = (empirical * (1.0 - empirical) / samples as f64).sqrt();
        Self {
            r,
            empirical,
            stderr,
            bound,
            informative: bound < 1.0,
            pass: empirical <= bound + 4.0 * stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub trial: String,
    pub regime: String,
    pub samples: usize,
    pub points: Vec<TailPoint>,
}

impl TailReport {
    pub fn passed(&self) -> bool {
        self.points.iter().all(|p| p.pass)
    }

    pub fn informative_count(&self) -> usize {
        self.points.iter().filter(|p| p.informative).count()
    }
}
