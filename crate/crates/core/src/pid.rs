//! Discrete PID law with bounded gains, a scaled derivative term and
//! integral clamping.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PidError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid gain bound for {gain}: need 0 < min < max, got [{min}, {max}]")]
    InvalidBounds { gain: &'static str, min: f64, max: f64 },
    #[error("invalid pid setting `{0}`")]
    InvalidSetting(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PidGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
}

impl PidGains {
    pub const fn new(kp: f64, ki: f64, kd: f64) -> Self {
        Self { kp, ki, kd }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn from_array(g: [f64; 3]) -> Self {
        Self::new(g[0], g[1], g[2])
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|g| g.is_finite())
    }
}

impl Default for PidGains {
    /// Base gains the tuners start from.
    fn default() -> Self {
        Self::new(1.2, 1.0, 0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainRange {
    pub min: f64,
    pub max: f64,
}

impl GainRange {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub fn clamp(&self, value: f64) -> f64 {
        if value.is_nan() {
            return self.min;
        }
        value.clamp(self.min, self.max)
    }

    /// Maps `[min, max]` onto `[0, 1]`.
    pub fn normalize(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "PartialBounds")]
pub struct GainBounds {
    pub kp: GainRange,
    pub ki: GainRange,
    pub kd: GainRange,
}

impl Default for GainBounds {
    /// `[0.01, 2·base]` for kp and ki, `[0.001, 2·base]` for kd.
    fn default() -> Self {
        Self {
            kp: GainRange::new(0.01, 2.4),
            ki: GainRange::new(0.01, 2.0),
            kd: GainRange::new(0.001, 0.02),
        }
    }
}

/// Config form of [`GainBounds`]: any omitted limit keeps its default.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialRange {
    min: Option<f64>,
    max: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PartialBounds {
    kp: Option<PartialRange>,
    ki: Option<PartialRange>,
    kd: Option<PartialRange>,
}

impl From<PartialBounds> for GainBounds {
    fn from(p: PartialBounds) -> Self {
        let d = GainBounds::default();
        let merge = |r: Option<PartialRange>, d: GainRange| match r {
            None => d,
            Some(r) => GainRange::new(r.min.unwrap_or(d.min), r.max.unwrap_or(d.max)),
        };
        Self {
            kp: merge(p.kp, d.kp),
            ki: merge(p.ki, d.ki),
            kd: merge(p.kd, d.kd),
        }
    }
}

impl GainBounds {
    pub fn validate(&self) -> Result<(), PidError> {
        for (gain, r) in [("kp", self.kp), ("ki", self.ki), ("kd", self.kd)] {
            if !(r.min.is_finite() && r.max.is_finite() && 0.0 < r.min && r.min < r.max) {
                return Err(PidError::InvalidBounds { gain, min: r.min, max: r.max });
            }
        }
        Ok(())
    }

    pub fn ranges(&self) -> [GainRange; 3] {
        [self.kp, self.ki, self.kd]
    }

    pub fn contains(&self, g: &PidGains) -> bool {
        self.kp.contains(g.kp) && self.ki.contains(g.ki) && self.kd.contains(g.kd)
    }
}

/// Integral and previous-error memory of the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PidState {
    pub integral: f64,
    pub prev_error: f64,
    pub d_scale: f64,
    pub integral_limit: f64,
}

impl Default for PidState {
    fn default() -> Self {
        Self::new(0.1, 10.0)
    }
}

impl PidState {
    pub fn new(d_scale: f64, integral_limit: f64) -> Self {
        Self {
            integral: 0.0,
            prev_error: 0.0,
            d_scale,
            integral_limit,
        }
    }

    pub fn validate(&self) -> Result<(), PidError> {
        if !(self.d_scale.is_finite() && self.d_scale >= 0.0) {
            return Err(PidError::InvalidSetting("d_scale"));
        }
        if !(self.integral_limit.is_finite() && self.integral_limit > 0.0) {
            return Err(PidError::InvalidSetting("integral_limit"));
        }
        Ok(())
    }

    /// In-place form of [`pid_output`].
    pub fn update(&mut self, gains: &PidGains, error: f64, dt: f64) -> Result<f64, PidError> {
        if !error.is_finite() {
            return Err(PidError::NonFinite("error"));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(PidError::NonFinite("dt"));
        }
        let integral =
            (self.integral + error * dt).clamp(-self.integral_limit, self.integral_limit);
        let derivative = (error - self.prev_error) / dt;
        let w = gains.kp * error + gains.ki * integral + self.d_scale * gains.kd * derivative;
        if !w.is_finite() {
            return Err(PidError::NonFinite("controller output"));
        }
        self.integral = integral;
        self.prev_error = error;
        Ok(w)
    }

    /// Backward-difference error derivative that the next update would use.
    pub fn error_rate(&self, error: f64, dt: f64) -> f64 {
        (error - self.prev_error) / dt
    }
}

/// Tracking error `setpoint − measured`.
pub fn compute_error(setpoint: f64, measured: f64) -> Result<f64, PidError> {
    if !setpoint.is_finite() {
        return Err(PidError::NonFinite("setpoint"));
    }
    if !measured.is_finite() {
        return Err(PidError::NonFinite("measurement"));
    }
    Ok(setpoint - measured)
}

/// `w = kp·e + ki·I' + d_scale·kd·(e − e_prev)/dt` with `I' = clamp(I + e·dt)`.
pub fn pid_output(
    gains: &PidGains,
    state: &PidState,
    error: f64,
    dt: f64,
) -> Result<(f64, PidState), PidError> {
    let mut next = *state;
    let w = next.update(gains, error, dt)?;
    Ok((w, next))
}

pub fn clamp_gains(raw: &PidGains, bounds: &GainBounds) -> PidGains {
    PidGains::new(
        bounds.kp.clamp(raw.kp),
        bounds.ki.clamp(raw.ki),
        bounds.kd.clamp(raw.kd),
    )
}

/// Zeroes the memory, keeps the configuration.
pub fn reset_pid(state: &PidState) -> PidState {
    PidState::new(state.d_scale, state.integral_limit)
}
