//! Setpoint-tracking evaluation shared by all controllers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::agent::{apply_action, greedy, observe, ActionSteps, FeatureScale};
use crate::control::ClosedLoop;
use crate::nn::DenseNet;
use crate::pid::{GainBounds, PidGains};
use crate::tuners::{fuzzy_step, FuzzyRuleTable, FuzzyScaling};
use crate::Result;

/// RNG stream offsets so setpoints stay identical across controllers no matter
/// how many noise samples a controller consumes.
const SETPOINT_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 1 << 32;

pub fn trial_rng(seed: u64, stream: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream + trial as u64);
    rng
}

#[derive(Debug, Clone)]
pub enum Controller {
    /// Fixed gains for the whole trial.
    Fixed(PidGains),
    /// Base gains plus the fuzzy increment, rescheduled every control tick.
    Fuzzy {
        base: PidGains,
        table: FuzzyRuleTable,
        scaling: FuzzyScaling,
    },
    /// Greedy Q-network policy adjusting the gains once per setpoint. With
    /// `stop` set to `(ε, n)`, tuning ends for the trial once `n` consecutive
    /// settled errors fall below `ε`, as a training episode does.
    Drl {
        net: DenseNet,
        start: PidGains,
        features: FeatureScale,
        steps: ActionSteps,
        stop: Option<(f64, usize)>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalRow {
    pub step: usize,
    /// m
    pub setpoint: f64,
    pub measured: f64,
    pub error: f64,
    pub gains: PidGains,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub rows: Vec<EvalRow>,
    pub max_abs_mm: f64,
    pub rms_mm: f64,
    pub mean_abs_mm: f64,
    pub std_abs_mm: f64,
}

/// Max, RMS, mean and population standard deviation of `|e|`, for errors in mm.
pub fn error_stats(errors_mm: &[f64]) -> (f64, f64, f64, f64) {
    if errors_mm.is_empty() {
        return (0.0, 0.0, 0.0, 0.0);
    }
    let n = errors_mm.len() as f64;
    let max = errors_mm.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let rms = (errors_mm.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let mean = errors_mm.iter().map(|e| e.abs()).sum::<f64>() / n;
    let var = errors_mm.iter().map(|e| (e.abs() - mean).powi(2)).sum::<f64>() / n;
    (max, rms, mean, var.sqrt())
}

impl TrialResult {
    pub fn from_rows(trial: usize, rows: Vec<EvalRow>) -> Self {
        let mm: Vec<f64> = rows.iter().map(|r| r.error * 1e3).collect();
        let (max_abs_mm, rms_mm, mean_abs_mm, std_abs_mm) = error_stats(&mm);
        Self { trial, rows, max_abs_mm, rms_mm, mean_abs_mm, std_abs_mm }
    }
}

pub fn run_trial(cfg: &ExperimentConfig, controller: &Controller, trial: usize) -> Result<TrialResult> {
    let ev = &cfg.eval;
    let dist = Normal::new(ev.setpoint_mean, ev.setpoint_std).map_err(|e| HarnessError::Config(format!("eval.setpoint_std: {e}")))?;
    let mut sp_rng = trial_rng(cfg.seed, SETPOINT_STREAM, trial);
    let mut noise = trial_rng(cfg.seed, NOISE_STREAM, trial);
    let bounds: GainBounds = cfg.pid.bounds;
    let ticks = cfg.pid.rollout_ticks;
    let mut lp = ClosedLoop::new(cfg.plant, &cfg.pid.state());
    let mut gains = match controller {
        Controller::Fixed(g) => *g,
        Controller::Fuzzy { base, .. } => *base,
        Controller::Drl { start, .. } => crate::pid::clamp_gains(start, &bounds),
    };
    let mut obs = observe(0.0, 0.0, &lp.pid, &gains, &bounds, cfg.plant.dt);
    let (mut in_target, mut tuning) = (0usize, true);
    let mut rows = Vec::with_capacity(ev.setpoints);

    for step in 0..ev.setpoints {
        let setpoint = dist.sample(&mut sp_rng);
        let settled = match controller {
            Controller::Fixed(g) => lp.hold(setpoint, g, ticks, &mut noise)?,
            Controller::Fuzzy { base, table, scaling } => {
                let mut last = gains;
                let s = lp.hold_scheduled(setpoint, ticks, &mut noise, |e, edot| {
                    last = fuzzy_step(e, edot, base, table, scaling, &bounds);
                    last
                })?;
                gains = last;
                s
            }
            Controller::Drl { net, features, steps, stop, .. } => {
                if tuning {
                    let action = greedy(net, &obs.encode(features))?;
                    gains = apply_action(&gains, action, steps, &bounds);
                }
                let s = lp.hold(setpoint, &gains, ticks, &mut noise)?;
                if let Some((eps, window)) = *stop {
                    in_target = if s.error.abs() < eps { in_target + 1 } else { 0 };
                    tuning &= in_target < window;
                }
                s
            }
        };
        obs = observe(setpoint, settled.measured, &lp.pid, &gains, &bounds, cfg.plant.dt);
        rows.push(EvalRow { step, setpoint, measured: settled.measured, error: settled.error, gains });
    }
    Ok(TrialResult::from_rows(trial, rows))
}

/// All trials, run in parallel and returned in trial order.
pub fn run_eval(cfg: &ExperimentConfig, controller: &Controller) -> Result<Vec<TrialResult>> {
    (0..cfg.eval.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, controller, t))
        .collect()
}
