use serde::{Deserialize, Serialize};

use super::{invalid, AgentError};
use crate::pid::{GainBounds, PidGains, PidState};

pub const OBSERVATION_SIZE: usize = 6;

/// Agent state after a control rollout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    /// Tracking error, m.
    pub error: f64,
    /// Backward-difference error rate, m/s.
    pub error_rate: f64,
    /// Clamped error integral held by the PID, m·s.
    pub integral: f64,
    /// Gains mapped onto `[0, 1]` by their bounds.
    pub gains: [f64; 3],
}

pub fn observe(setpoint: f64, measured: f64, pid: &PidState, gains: &PidGains, bounds: &GainBounds, dt: f64) -> Observation {
    let error = setpoint - measured;
    let r = bounds.ranges();
    let g = gains.as_array();
    Observation {
        error,
        error_rate: pid.error_rate(error, dt),
        integral: pid.integral,
        gains: [0, 1, 2].map(|i| r[i].normalize(g[i])),
    }
}

/// Divisors that bring the physical terms to order one before they reach the
/// network. Scaled values are clipped to `±clip`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureScale {
    pub error: f64,
    pub error_rate: f64,
    pub integral: f64,
    pub clip: f64,
}

impl Default for FeatureScale {
    fn default() -> Self {
        Self {
            error: 0.01,
            error_rate: 0.1,
            integral: 0.05,
            clip: 5.0,
        }
    }
}

impl FeatureScale {
    pub fn validate(&self) -> Result<(), AgentError> {
        for (field, v) in [
            ("agent.features.error", self.error),
            ("agent.features.error_rate", self.error_rate),
            ("agent.features.integral", self.integral),
            ("agent.features.clip", self.clip),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

impl Observation {
    pub fn is_finite(&self) -> bool {
        self.error.is_finite() && self.error_rate.is_finite() && self.integral.is_finite() && self.gains.iter().all(|g| g.is_finite())
    }

    /// Network input: scaled and clipped physical terms, gains recentred to `[-1, 1]`.
    pub fn encode(&self, scale: &FeatureScale) -> [f64; OBSERVATION_SIZE] {
        let c = |x: f64| x.clamp(-scale.clip, scale.clip);
        [
            c(self.error / scale.error),
            c(self.error_rate / scale.error_rate),
            c(self.integral / scale.integral),
            2.0 * self.gains[0] - 1.0,
            2.0 * self.gains[1] - 1.0,
            2.0 * self.gains[2] - 1.0,
        ]
    }
}
