use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Which publication mechanism to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mechanism {
    Baseline,
    Limit,
    LimitSs,
    LimitCb,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [
        Mechanism::Baseline,
        Mechanism::Limit,
        Mechanism::LimitSs,
        Mechanism::LimitCb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Baseline => "baseline",
            Mechanism::Limit => "limit",
            Mechanism::LimitSs => "limit-ss",
            Mechanism::LimitCb => "limit-cb",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mechanism::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown mechanism `{s}` (expected baseline, limit, limit-ss or limit-cb)"
                ))
            })
    }
}

/// Whether to add noise. [`NoiseMode::Off`] publishes exact values and gives
/// no privacy; it exists for debugging and for measuring truncation error alone.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NoiseMode {
    #[default]
    Laplace,
    Off,
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" | "laplace" => Ok(NoiseMode::Laplace),
            "off" => Ok(NoiseMode::Off),
            _ => Err(Error::InvalidParameter(format!("unknown noise mode `{s}` (expected on or off)"))),
        }
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::Laplace => "on",
            NoiseMode::Off => "off",
        })
    }
}

/// Parameters shared by all mechanisms.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyParams {
    pub epsilon: f64,
    /// Only used by [`Mechanism::LimitSs`].
    pub delta: f64,
    /// Smooth-sensitivity floor, only used by [`Mechanism::LimitSs`].
    pub xi: f64,
    /// Maximum visits a user contributes to one location.
    pub c: u64,
    /// Maximum locations a user contributes to.
    pub m: u64,
    /// Crowd size for [`Mechanism::LimitCb`].
    pub k: u64,
    /// Minimum number of users for a location to count towards the published ratio.
    pub eligibility_k: u64,
    pub mechanism: Mechanism,
    pub seed: u64,
    pub noise: NoiseMode,
}

impl Default for PrivacyParams {
    fn default() -> Self {
        PrivacyParams {
            epsilon: 5.0,
            delta: 1e-8,
            xi: 1e-3,
            c: 5,
            m: 5,
            k: 50,
            eligibility_k: 20,
            mechanism: Mechanism::Limit,
            seed: 0,
            noise: NoiseMode::Laplace,
        }
    }
}

impl PrivacyParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return bad(format!("xi must be positive, got {}", self.xi));
        }
        if self.c == 0 {
            return bad("C must be at least 1".into());
        }
        if self.m == 0 {
            return bad("M must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        Ok(())
    }
}
