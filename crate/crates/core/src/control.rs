//! Closed-loop rollouts: sensor, PID and plant ticked together.

use rand::Rng;

use crate::pid::{compute_error, PidGains, PidState};
use crate::plant::{measure, reset_plant, PlantParams, PlantState};
use crate::Result;

/// Outcome of holding one setpoint for a fixed number of control ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settled {
    pub setpoint: f64,
    pub measured: f64,
    pub error: f64,
}

#[derive(Debug, Clone)]
pub struct ClosedLoop {
    pub params: PlantParams,
    pub plant: PlantState,
    pub pid: PidState,
}

impl ClosedLoop {
    pub fn new(params: PlantParams, pid_template: &PidState) -> Self {
        Self {
            plant: reset_plant(&params),
            pid: crate::pid::reset_pid(pid_template),
            params,
        }
    }

    pub fn reset(&mut self) {
        self.plant = reset_plant(&self.params);
        self.pid = crate::pid::reset_pid(&self.pid);
    }

    /// One control tick: sense, compute the PID output, advance the plant.
    /// `schedule` sees `(error, error_rate)` and returns the gains for this tick.
    pub fn tick<R, F>(&mut self, setpoint: f64, rng: &mut R, schedule: &mut F) -> Result<f64>
    where
        R: Rng + ?Sized,
        F: FnMut(f64, f64) -> PidGains,
    {
        let dt = self.params.dt;
        let measured = measure(&self.plant, &self.params, rng);
        let error = compute_error(setpoint, measured)?;
        let gains = schedule(error, self.pid.error_rate(error, dt));
        let u = self.pid.update(&gains, error, dt)?;
        self.plant.step(u, &self.params)?;
        Ok(u)
    }

    /// Hold `setpoint` for `ticks` control ticks, then take one final sensor reading.
    pub fn hold_scheduled<R, F>(
        &mut self,
        setpoint: f64,
        ticks: usize,
        rng: &mut R,
        mut schedule: F,
    ) -> Result<Settled>
    where
        R: Rng + ?Sized,
        F: FnMut(f64, f64) -> PidGains,
    {
        for _ in 0..ticks {
            self.tick(setpoint, rng, &mut schedule)?;
        }
        let measured = measure(&self.plant, &self.params, rng);
        Ok(Settled {
            setpoint,
            measured,
            error: compute_error(setpoint, measured)?,
        })
    }

    pub fn hold<R: Rng + ?Sized>(
        &mut self,
        setpoint: f64,
        gains: &PidGains,
        ticks: usize,
        rng: &mut R,
    ) -> Result<Settled> {
        self.hold_scheduled(setpoint, ticks, rng, |_, _| *gains)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_setpoint_stays_at_rest() {
        let mut lp = ClosedLoop::new(PlantParams::default(), &PidState::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = lp.hold(0.0, &PidGains::default(), 100, &mut rng).unwrap();
        assert_eq!(s.error, 0.0);
        assert_eq!(lp.plant.ticks(), 100);
    }

    #[test]
    fn base_gains_track_a_step() {
        let mut lp = ClosedLoop::new(PlantParams::default(), &PidState::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let gains = PidGains::new(2.1, 1.0, 0.01);
        let mut last = f64::INFINITY;
        for _ in 0..5 {
            last = lp.hold(0.1, &gains, 100, &mut rng).unwrap().error.abs();
        }
        assert!(last < 1e-3, "settled error {last}");
    }
}
