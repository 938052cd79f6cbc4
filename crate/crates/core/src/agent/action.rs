use serde::{Deserialize, Serialize};

use super::{invalid, AgentError};
use crate::pid::{clamp_gains, GainBounds, PidGains};

pub const ACTION_COUNT: usize = 27;

/// Per-gain increment magnitudes `(δp, δi, δd)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ActionSteps {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl Default for ActionSteps {
    fn default() -> Self {
        Self { kp: 0.05, ki: 0.05, kd: 0.001 }
    }
}

impl ActionSteps {
    pub fn validate(&self) -> Result<(), AgentError> {
        for (field, v) in [("agent.steps.kp", self.kp), ("agent.steps.ki", self.ki), ("agent.steps.kd", self.kd)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One of the 27 joint moves in `{−1, 0, +1}³` over `(kp, ki, kd)`.
///
/// Index layout is `(dp+1)·9 + (di+1)·3 + (dd+1)`, so index 13 is "no change".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GainAction(u8);

impl GainAction {
    pub const HOLD: GainAction = GainAction(13);

    pub fn new(index: usize) -> Result<Self, AgentError> {
        if index < ACTION_COUNT {
            Ok(GainAction(index as u8))
        } else {
            Err(AgentError::BadAction(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn encode(dirs: [i8; 3]) -> Result<Self, AgentError> {
        if dirs.iter().any(|d| !(-1..=1).contains(d)) {
            return Err(AgentError::BadAction(usize::MAX));
        }
        let [p, i, d] = dirs.map(|x| (x + 1) as usize);
        Self::new(p * 9 + i * 3 + d)
    }

    pub fn decode(self) -> [i8; 3] {
        let i = self.0 as i8;
        [i / 9 - 1, (i / 3) % 3 - 1, i % 3 - 1]
    }

    pub fn deltas(self, steps: &ActionSteps) -> [f64; 3] {
        let [p, i, d] = self.decode();
        [p as f64 * steps.kp, i as f64 * steps.ki, d as f64 * steps.kd]
    }

    pub fn all() -> impl Iterator<Item = GainAction> {
        (0..ACTION_COUNT as u8).map(GainAction)
    }
}

/// Adds the decoded increments and clamps into `bounds`; a gain at its bound
/// simply stops there.
pub fn apply_action(gains: &PidGains, action: GainAction, steps: &ActionSteps, bounds: &GainBounds) -> PidGains {
    let d = action.deltas(steps);
    clamp_gains(&PidGains::new(gains.kp + d[0], gains.ki + d[1], gains.kd + d[2]), bounds)
}
