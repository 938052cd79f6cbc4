//! Relay (Åström–Hägglund) identification of the ultimate gain and period,
//! followed by the classic Ziegler-Nichols PID table.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pid::{clamp_gains, GainBounds, PidGains};
use crate::plant::{measure, reset_plant, PlantError, PlantParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelayError {
    #[error("no sustained relay oscillation: {reason}")]
    NoOscillation { reason: String },
    #[error("relay oscillation did not settle: last periods {periods:?} differ by more than {tolerance}")]
    NotConverged { periods: Vec<f64>, tolerance: f64 },
    #[error("invalid relay setting `{0}`")]
    InvalidSetting(&'static str),
    #[error(transparent)]
    Plant(#[from] PlantError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelayConfig {
    /// Relay output magnitude `h` (force units).
    pub amplitude: f64,
    /// Number of consecutive periods that must agree.
    pub cycles: usize,
    /// Simulated time budget, seconds.
    pub max_time: f64,
    /// Relative agreement required between successive periods and amplitudes.
    pub tolerance: f64,
    /// Periods spanning fewer samples than this are sampling chatter, not a limit cycle.
    pub min_period_samples: usize,
}

impl Default for RelayConfig {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            cycles: 4,
            max_time: 120.0,
            tolerance: 0.02,
            min_period_samples: 10,
        }
    }
}

impl RelayConfig {
    pub fn validate(&self) -> Result<(), RelayError> {
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(RelayError::InvalidSetting("amplitude"));
        }
        if self.cycles < 2 {
            return Err(RelayError::InvalidSetting("cycles"));
        }
        if !(self.max_time.is_finite() && self.max_time > 0.0) {
            return Err(RelayError::InvalidSetting("max_time"));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(RelayError::InvalidSetting("tolerance"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayResult {
    pub ultimate_gain: f64,
    pub ultimate_period: f64,
    /// Half peak-to-peak of the output oscillation (m).
    pub amplitude: f64,
    pub relay_amplitude: f64,
}

impl RelayResult {
    /// Builds a result from a measured limit cycle; `Ku = 4h/(πa)`.
    pub fn from_cycle(relay_amplitude: f64, amplitude: f64, period: f64) -> Self {
        Self {
            ultimate_gain: 4.0 * relay_amplitude / (PI * amplitude),
            ultimate_period: period,
            amplitude,
            relay_amplitude,
        }
    }
}

struct Cycle {
    period: f64,
    amplitude: f64,
}

fn within(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

/// Drives the stage with `±h` on the sign of the error about a zero setpoint
/// until `cycles` successive periods and amplitudes agree to `tolerance`.
pub fn relay_autotune<R: Rng + ?Sized>(
    params: &PlantParams,
    config: &RelayConfig,
    rng: &mut R,
) -> Result<RelayResult, RelayError> {
    params.validate()?;
    config.validate()?;
    let dt = params.dt;
    let h = config.amplitude;
    let max_ticks = (config.max_time / dt).ceil() as u64;
    let min_period = config.min_period_samples as f64 * dt;

    let mut state = reset_plant(params);
    let mut prev_y = measure(&state, params, rng);
    let mut last_crossing: Option<f64> = None;
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut cycles: Vec<Cycle> = Vec::new();
    let mut short_cycles = 0usize;

    for _ in 0..max_ticks {
        let error = -prev_y;
        let u = if error >= 0.0 { h } else { -h };
        state.step(u, params)?;
        let y = measure(&state, params, rng);
        hi = hi.max(y);
        lo = lo.min(y);

        if prev_y < 0.0 && y >= 0.0 {
            // linear interpolation of the upward zero crossing
            let t = state.time() - dt + dt * (-prev_y) / (y - prev_y);
            if let Some(t0) = last_crossing {
                let period = t - t0;
                if period < min_period {
                    short_cycles += 1;
                    if short_cycles >= config.cycles {
                        return Err(RelayError::NoOscillation {
                            reason: format!(
                                "relay chatter with period {:.4} s is below {} samples",
                                period, config.min_period_samples
                            ),
                        });
                    }
                } else {
                    short_cycles = 0;
                    cycles.push(Cycle {
                        period,
                        amplitude: 0.5 * (hi - lo),
                    });
                }
            }
            last_crossing = Some(t);
            hi = f64::NEG_INFINITY;
            lo = f64::INFINITY;

            if cycles.len() >= config.cycles {
                let recent = &cycles[cycles.len() - config.cycles..];
                let settled = recent.windows(2).all(|w| {
                    within(w[1].period, w[0].period, config.tolerance)
                        && within(w[1].amplitude, w[0].amplitude, config.tolerance)
                });
                if settled {
                    let n = recent.len() as f64;
                    let period = recent.iter().map(|c| c.period).sum::<f64>() / n;
                    let amplitude = recent.iter().map(|c| c.amplitude).sum::<f64>() / n;
                    if amplitude <= 0.0 || !amplitude.is_finite() {
                        break;
                    }
                    return Ok(RelayResult::from_cycle(h, amplitude, period));
                }
            }
        }
        prev_y = y;
    }

    if cycles.len() < config.cycles {
        return Err(RelayError::NoOscillation {
            reason: format!(
                "{} full cycles observed in {} s, need {}",
                cycles.len(),
                config.max_time,
                config.cycles
            ),
        });
    }
    let periods = cycles[cycles.len() - config.cycles..]
        .iter()
        .map(|c| c.period)
        .collect();
    Err(RelayError::NotConverged {
        periods,
        tolerance: config.tolerance,
    })
}

/// Classic Ziegler-Nichols PID row, unclamped:
/// `kp = 0.6·Ku`, `Ti = Tu/2`, `Td = Tu/8`, `ki = kp/Ti`, `kd = kp·Td`.
pub fn zn_raw_gains(result: &RelayResult) -> PidGains {
    let kp = 0.6 * result.ultimate_gain;
    let ti = result.ultimate_period / 2.0;
    let td = result.ultimate_period / 8.0;
    PidGains::new(kp, kp / ti, kp * td)
}

pub fn zn_gains(result: &RelayResult, bounds: &GainBounds) -> PidGains {
    clamp_gains(&zn_raw_gains(result), bounds)
}
