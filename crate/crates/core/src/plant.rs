//! One-degree-of-freedom axial stage: a mass-damper-spring driven by a force
//! input that passes through a pure transport delay.
//!
//! The stage obeys `u = m·ẍ + c·ẋ + k·x`. Integration is semi-implicit Euler
//! (velocity first, then position with the new velocity), one `dt` per call.

use std::collections::VecDeque;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("invalid plant parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error("non-finite value in plant step: {0}")]
    NonFinite(&'static str),
}

/// Physical coefficients of the stage. Units: kg, N·s/m, N/m, s, s, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantParams {
    pub mass: f64,
    pub damping: f64,
    pub stiffness: f64,
    pub actuation_delay: f64,
    pub dt: f64,
    pub noise_std: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            mass: 0.1,
            damping: 1.0,
            stiffness: 0.5,
            actuation_delay: 0.1,
            dt: 0.01,
            noise_std: 0.0,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> PlantError {
    PlantError::InvalidParam {
        field,
        reason: reason.into(),
    }
}

impl PlantParams {
    pub fn validate(&self) -> Result<(), PlantError> {
        let finite = [
            ("mass", self.mass),
            ("damping", self.damping),
            ("stiffness", self.stiffness),
            ("actuation_delay", self.actuation_delay),
            ("dt", self.dt),
            ("noise_std", self.noise_std),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.mass <= 0.0 {
            return Err(invalid("mass", "must be > 0"));
        }
        if self.damping < 0.0 {
            return Err(invalid("damping", "must be >= 0"));
        }
        if self.stiffness < 0.0 {
            return Err(invalid("stiffness", "must be >= 0"));
        }
        if self.dt <= 0.0 {
            return Err(invalid("dt", "must be > 0"));
        }
        if self.actuation_delay < 0.0 {
            return Err(invalid("actuation_delay", "must be >= 0"));
        }
        if self.noise_std < 0.0 {
            return Err(invalid("noise_std", "must be >= 0"));
        }
        let ratio = self.actuation_delay / self.dt;
        if (ratio - ratio.round()).abs() > 1e-6 * ratio.max(1.0) {
            return Err(invalid(
                "actuation_delay",
                format!("{} s is not a whole number of dt={} steps", self.actuation_delay, self.dt),
            ));
        }
        Ok(())
    }

    /// Length of the transport-delay FIFO.
    pub fn delay_steps(&self) -> usize {
        (self.actuation_delay / self.dt).round() as usize
    }
}

/// Kinematic state plus the queue of control inputs still in transit.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub position: f64,
    pub velocity: f64,
    ticks: u64,
    dt: f64,
    delay_line: VecDeque<f64>,
}

impl PlantState {
    /// Elapsed simulated time, always `ticks · dt`.
    pub fn time(&self) -> f64 {
        self.ticks as f64 * self.dt
    }

    pub fn ticks(&self) -> u64 {
        self.ticks
    }

    pub fn delay_line(&self) -> &VecDeque<f64> {
        &self.delay_line
    }

    /// In-place version of [`plant_step`]; on error the state is left untouched.
    pub fn step(&mut self, u: f64, params: &PlantParams) -> Result<(), PlantError> {
        if !u.is_finite() {
            return Err(PlantError::NonFinite("control input"));
        }
        if !self.position.is_finite() || !self.velocity.is_finite() {
            return Err(PlantError::NonFinite("plant state"));
        }
        let applied = self.delay_line.front().copied().unwrap_or(u);
        let accel = (applied - params.damping * self.velocity - params.stiffness * self.position)
            / params.mass;
        let velocity = self.velocity + accel * params.dt;
        let position = self.position + velocity * params.dt;
        if !velocity.is_finite() || !position.is_finite() {
            return Err(PlantError::NonFinite("plant state"));
        }
        if !self.delay_line.is_empty() {
            self.delay_line.pop_front();
            self.delay_line.push_back(u);
        }
        self.velocity = velocity;
        self.position = position;
        self.ticks += 1;
        Ok(())
    }

    /// Mechanical energy `½mẋ² + ½kx²`.
    pub fn energy(&self, params: &PlantParams) -> f64 {
        0.5 * params.mass * self.velocity * self.velocity
            + 0.5 * params.stiffness * self.position * self.position
    }
}

/// Rest state: zero position and velocity, empty (zero-filled) delay line.
pub fn reset_plant(params: &PlantParams) -> PlantState {
    PlantState {
        position: 0.0,
        velocity: 0.0,
        ticks: 0,
        dt: params.dt,
        delay_line: std::iter::repeat_n(0.0, params.delay_steps()).collect(),
    }
}

/// Advance one `dt`. `u` enters the delay line; the oldest queued input drives the stage.
pub fn plant_step(state: &PlantState, u: f64, params: &PlantParams) -> Result<PlantState, PlantError> {
    let mut next = state.clone();
    next.step(u, params)?;
    Ok(next)
}

/// Position as seen by the sensor: true position plus zero-mean Gaussian noise.
pub fn measure<R: Rng + ?Sized>(state: &PlantState, params: &PlantParams, rng: &mut R) -> f64 {
    if params.noise_std == 0.0 {
        return state.position;
    }
    let noise = Normal::new(0.0, params.noise_std).expect("noise_std validated non-negative");
    state.position + noise.sample(rng)
}
