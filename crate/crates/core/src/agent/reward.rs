use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{invalid, AgentError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardParams {
    /// Shape of the Gaussian term, in squared `gaussian_unit`s.
    pub sigma2: f64,
    /// Length (m) that counts as one unit of distance inside the Gaussian term.
    pub gaussian_unit: f64,
    /// Target settled error, m.
    pub epsilon_target: f64,
    /// A step counts as fast convergence when it lands within this fraction of the budget.
    pub fastconv_fraction: f64,
    pub fast_bonus: f64,
    pub within_target: f64,
    pub far_penalty: f64,
    pub near_penalty: f64,
    pub otherwise: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        Self {
            sigma2: 1.0,
            gaussian_unit: 1e-3,
            epsilon_target: 0.002,
            fastconv_fraction: 0.8,
            fast_bonus: 5.0,
            within_target: 1.0,
            far_penalty: -5.0,
            near_penalty: -1.5,
            otherwise: -1.0,
        }
    }
}

impl RewardParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.sigma2.is_finite() && self.sigma2 > 0.0) {
            return Err(invalid("reward.sigma2", format!("must be positive, got {}", self.sigma2)));
        }
        if !(self.gaussian_unit.is_finite() && self.gaussian_unit > 0.0) {
            return Err(invalid("reward.gaussian_unit", format!("must be positive, got {}", self.gaussian_unit)));
        }
        if !(self.epsilon_target.is_finite() && self.epsilon_target > 0.0) {
            return Err(invalid("reward.epsilon_target", format!("must be positive, got {}", self.epsilon_target)));
        }
        if !(self.fastconv_fraction > 0.0 && self.fastconv_fraction < 1.0) {
            return Err(invalid("reward.fastconv_fraction", format!("must lie in (0, 1), got {}", self.fastconv_fraction)));
        }
        let values = [self.fast_bonus, self.within_target, self.far_penalty, self.near_penalty, self.otherwise];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("reward", "schedule values must be finite"));
        }
        Ok(())
    }
}

/// `1/(2πσ²) · exp(−(x_t − x_req)² / 2σ²)`.
pub fn gaussian_reward(x_t: f64, x_req: f64, sigma2: f64) -> f64 {
    let d = x_t - x_req;
    (-d * d / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2)
}

/// Piecewise schedule, most specific branch first. `converged_step` is the
/// 1-based tuning step at which the convergence test first passed, if it has.
pub fn schedule_reward(
    x_t: f64,
    x_req: f64,
    params: &RewardParams,
    step_budget: usize,
    converged_step: Option<usize>,
) -> f64 {
    let err = (x_req - x_t).abs();
    let eps = params.epsilon_target;
    let fast = converged_step.is_some_and(|s| s as f64 <= params.fastconv_fraction * step_budget as f64);
    if err < eps && fast {
        params.fast_bonus
    } else if err < eps {
        params.within_target
    } else if err > 10.0 * eps {
        params.far_penalty
    } else if err > 1.5 * eps {
        params.near_penalty
    } else {
        params.otherwise
    }
}

pub fn step_reward(
    x_t: f64,
    x_req: f64,
    params: &RewardParams,
    step_budget: usize,
    converged_step: Option<usize>,
) -> f64 {
    let u = params.gaussian_unit;
    gaussian_reward(x_t / u, x_req / u, params.sigma2) + schedule_reward(x_t, x_req, params, step_budget, converged_step)
}
