//! Closed-form stand-in for model accuracy.
//!
//! Accuracy is a saturating function of the cumulative number of client
//! updates that made it into an aggregation:
//! `acc(U) = a_max * (1 - exp(-U / tau))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurrogateCurve {
    pub a_max: f64,
    pub tau: f64,
}

impl Default for SurrogateCurve {
    fn default() -> Self {
        Self {
            a_max: 0.9,
            tau: 200.0,
        }
    }
}

impl SurrogateCurve {
    pub fn new(a_max: f64, tau: f64) -> Result<Self> {
        let curve = Self { a_max, tau };
        curve.validate()?;
        Ok(curve)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a_max > 0.0 && self.a_max <= 1.0) {
            return Err(Error::param("a_max", "must lie in (0, 1]"));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::param("tau", "must be finite and > 0"));
        }
        Ok(())
    }

    pub fn accuracy(&self, state: &SurrogateState) -> f64 {
        self.a_max * -(-(state.updates as f64) / self.tau).exp_m1()
    }

    /// Updates needed to reach `accuracy`; `None` at or above `a_max`.
    pub fn updates_for(&self, accuracy: f64) -> Option<f64> {
        (accuracy < self.a_max).then(|| -self.tau * (-accuracy / self.a_max).ln_1p())
    }
}

/// Running totals the curve is evaluated on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SurrogateState {
    /// Distinct (client, round) updates aggregated so far.
    pub updates: u64,
    /// Training samples behind those updates.
    pub samples: f64,
    /// Sample count of the latest aggregation.
    pub last_round_samples: f64,
}

impl SurrogateState {
    pub fn record_round(&mut self, updates: u64, samples: f64) {
        self.updates += updates;
        self.samples += samples;
        self.last_round_samples = samples;
    }
}
