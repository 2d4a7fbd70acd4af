//! Hypothesis-test arithmetic for the audit: chi-squared quantiles, the
//! per-input threshold `τ = (2/m) χ²_r(1 − α)`, and the quadratic-form
//! statistics compared against it.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::family::{FisherMatrix, ParameterVector};

/// Bisection stops once the bracket is at most this wide.
pub const QUANTILE_BRACKET_WIDTH: f64 = 1e-12;

/// `P(u <= q)` for `u ~ χ²_r`, via the regularized lower incomplete gamma
/// function.
pub fn chi_squared_cdf(r: u32, q: f64) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    if q.is_infinite() {
        return 1.0;
    }
    gamma_lr(f64::from(r) / 2.0, q / 2.0)
}

/// The `a`-quantile of `χ²_r`: the `q` with `P(u <= q) = a`.
///
/// Found by bisection on [`chi_squared_cdf`], which is monotone in `q`.
pub fn chi_squared_quantile(r: u32, a: f64) -> Result<f64> {
    if r == 0 {
        return Err(Error::Range("degrees of freedom must be at least 1".into()));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Probability(a));
    }
    let mut lo = 0.0_f64;
    let mut hi = f64::from(r).max(1.0);
    while chi_squared_cdf(r, hi) < a {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > QUANTILE_BRACKET_WIDTH {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chi_squared_cdf(r, mid) < a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The per-input rejection threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditThreshold {
    pub tau: f64,
    pub r: u32,
    pub m: usize,
    pub alpha: f64,
}

impl AuditThreshold {
    pub fn new(r: usize, m: usize, alpha: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::Range("feed length m must be at least 1".into()));
        }
        let r = u32::try_from(r).map_err(|_| Error::Range(format!("dimension {r} too large")))?;
        let quantile = chi_squared_quantile(r, 1.0 - alpha)?;
        Ok(Self {
            tau: 2.0 / m as f64 * quantile,
            r,
            m,
            alpha,
        })
    }
}

/// `(θ₁ − θ₂)ᵀ I (θ₁ − θ₂)`.
pub fn wald_statistic(theta1: &ParameterVector, theta2: &ParameterVector, info: &FisherMatrix) -> Result<f64> {
    let diff = theta1.difference(theta2)?;
    info.quadratic_form(&diff)
}

/// The two statistics of one audited input: the displacement measured in the
/// information metric of each estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestStatisticPair {
    pub stat_prime: f64,
    pub stat_double_prime: f64,
}

impl TestStatisticPair {
    pub fn swapped(self) -> Self {
        Self {
            stat_prime: self.stat_double_prime,
            stat_double_prime: self.stat_prime,
        }
    }

    pub fn max(&self) -> f64 {
        self.stat_prime.max(self.stat_double_prime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// FAIL iff either statistic reaches τ. A tie at τ fails.
pub fn robustness_decision(pair: &TestStatisticPair, threshold: &AuditThreshold) -> Verdict {
    if pair.stat_prime >= threshold.tau || pair.stat_double_prime >= threshold.tau {
        Verdict::Fail
    } else {
        Verdict::Pass
    }
}
