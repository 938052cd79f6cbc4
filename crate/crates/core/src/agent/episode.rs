use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dqn::argmax;
use super::{
    apply_action, invalid, observe, select_action, step_reward, ActionSteps, AgentError, EpsilonSchedule, Experience,
    FeatureScale, GainAction, Observation, QAgent, RewardParams, ACTION_COUNT, OBSERVATION_SIZE,
};
use crate::control::ClosedLoop;
use crate::nn::{Activation, DenseNet};
use crate::pid::{GainBounds, PidGains, PidState};
use crate::plant::PlantParams;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub episodes: usize,
    pub steps_per_episode: usize,
    /// Leading tuning steps held at setpoint 0.
    pub warmup_steps: usize,
    pub batch_size: usize,
    /// Gradient steps per stored transition.
    pub updates_per_step: usize,
    pub gamma: f64,
    /// Target-network sync interval, in stored transitions.
    pub tau: u64,
    pub replay_capacity: usize,
    pub learning_rate: f64,
    pub hidden_layers: Vec<usize>,
    pub epsilon: EpsilonSchedule,
    pub steps: ActionSteps,
    pub features: FeatureScale,
    /// Consecutive in-target steps needed before the loop counts as converged.
    pub convergence_window: usize,
    /// Post-warmup setpoint sequence.
    pub setpoint_mode: SetpointMode,
    /// Setpoint level, m.
    pub setpoint_mean: f64,
    /// Square-wave half amplitude or normal standard deviation, m.
    pub setpoint_std: f64,
    /// Restart plant and PID from rest before every tuning step, so each step
    /// scores one step response. Otherwise the loop carries over within an episode.
    pub reset_each_step: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetpointMode {
    /// Always `mean`.
    Constant,
    /// `mean + std`, `mean − std`, alternating.
    SquareWave,
    /// Independent `Normal(mean, std)` draws.
    Normal,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 20,
            steps_per_episode: 100,
            warmup_steps: 10,
            batch_size: 32,
            updates_per_step: 4,
            gamma: 0.85,
            tau: 50,
            replay_capacity: 10_000,
            learning_rate: 0.001,
            hidden_layers: vec![64, 64, 32],
            epsilon: EpsilonSchedule::default(),
            steps: ActionSteps::default(),
            features: FeatureScale::default(),
            convergence_window: 3,
            setpoint_mode: SetpointMode::SquareWave,
            setpoint_mean: 0.1,
            setpoint_std: 0.05,
            reset_each_step: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.steps_per_episode == 0 {
            return Err(invalid("agent.steps_per_episode", "must be at least 1"));
        }
        if self.warmup_steps > self.steps_per_episode {
            return Err(invalid("agent.warmup_steps", "exceeds agent.steps_per_episode"));
        }
        if self.batch_size == 0 || self.batch_size > self.replay_capacity {
            return Err(invalid(
                "agent.batch_size",
                format!("must lie in 1..={} (replay capacity), got {}", self.replay_capacity, self.batch_size),
            ));
        }
        if self.updates_per_step == 0 {
            return Err(invalid("agent.updates_per_step", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("agent.gamma", format!("must lie in [0, 1), got {}", self.gamma)));
        }
        if self.tau == 0 {
            return Err(invalid("agent.tau", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("agent.learning_rate", format!("must be positive, got {}", self.learning_rate)));
        }
        if self.hidden_layers.contains(&0) {
            return Err(invalid("agent.hidden_layers", "layer widths must be positive"));
        }
        if self.convergence_window == 0 {
            return Err(invalid("agent.convergence_window", "must be at least 1"));
        }
        if !self.setpoint_mean.is_finite() || !(self.setpoint_std.is_finite() && self.setpoint_std >= 0.0) {
            return Err(invalid("agent.setpoint_std", "setpoint distribution must be finite with std >= 0"));
        }
        self.epsilon.validate()?;
        self.steps.validate()?;
        self.features.validate()
    }

    pub fn network_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![OBSERVATION_SIZE];
        sizes.extend(&self.hidden_layers);
        sizes.push(ACTION_COUNT);
        sizes
    }

    pub fn init_network<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DenseNet> {
        Ok(DenseNet::new(&self.network_sizes(), Activation::Tanh, Activation::Identity, rng)?)
    }

    /// Global steps over which ε decays, when every episode runs its full budget.
    pub fn decay_steps(&self) -> u64 {
        (self.episodes * self.steps_per_episode).saturating_sub(1) as u64
    }

    fn setpoints(&self) -> Result<Normal<f64>> {
        Normal::new(self.setpoint_mean, self.setpoint_std)
            .map_err(|e| invalid("agent.setpoint_std", e.to_string()).into())
    }
}

/// Plant, PID and gain box the agent tunes against.
#[derive(Debug, Clone)]
pub struct TuningEnv {
    pub loop_: ClosedLoop,
    pub bounds: GainBounds,
    pub base_gains: PidGains,
    /// Control ticks per tuning step.
    pub rollout_ticks: usize,
}

impl TuningEnv {
    pub fn new(params: PlantParams, pid: PidState, bounds: GainBounds, base_gains: PidGains, rollout_ticks: usize) -> Result<Self> {
        params.validate()?;
        pid.validate()?;
        bounds.validate()?;
        if rollout_ticks == 0 {
            return Err(invalid("pid.rollout_ticks", "must be at least 1").into());
        }
        Ok(Self {
            loop_: ClosedLoop::new(params, &pid),
            bounds,
            base_gains: crate::pid::clamp_gains(&base_gains, &bounds),
            rollout_ticks,
        })
    }

    pub fn observe(&self, setpoint: f64, measured: f64, gains: &PidGains) -> Observation {
        observe(setpoint, measured, &self.loop_.pid, gains, &self.bounds, self.loop_.params.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    /// 1-based tuning step.
    pub step: usize,
    pub setpoint: f64,
    pub measured: f64,
    pub error: f64,
    pub action: GainAction,
    pub gains: PidGains,
    pub reward: f64,
    pub epsilon: f64,
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub total_reward: f64,
    pub discounted_reward: f64,
    /// |settled error| at the last step, m.
    pub final_error: f64,
    /// Mean |settled error| over the last ten steps, m.
    pub mean_last10_error: f64,
    pub converged_step: Option<usize>,
    pub terminated: bool,
    pub final_gains: PidGains,
    pub records: Vec<StepRecord>,
}

/// Runs one episode from the base gains. The plant and PID reset at the start
/// and, with `reset_each_step`, again before every tuning step.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<R: Rng + ?Sized>(
    env: &mut TuningEnv,
    agent: &mut QAgent,
    config: &TrainConfig,
    reward: &RewardParams,
    episode: usize,
    rng: &mut R,
) -> Result<EpisodeLog> {
    let setpoints = config.setpoints()?;
    let budget = config.steps_per_episode;
    let eps_target = reward.epsilon_target;
    env.loop_.reset();
    let mut gains = env.base_gains;
    let mut obs = env.observe(0.0, 0.0, &gains);
    let mut in_target = 0usize;
    let mut converged_step = None;
    let mut records = Vec::with_capacity(budget);
    let (mut total, mut discounted, mut discount) = (0.0, 0.0, 1.0);
    let mut terminated = false;

    for step in 1..=budget {
        let warmup = step <= config.warmup_steps;
        let setpoint = match config.setpoint_mode {
            _ if warmup => 0.0,
            SetpointMode::Constant => config.setpoint_mean,
            SetpointMode::SquareWave if (step - config.warmup_steps) % 2 == 1 => config.setpoint_mean + config.setpoint_std,
            SetpointMode::SquareWave => config.setpoint_mean - config.setpoint_std,
            SetpointMode::Normal => setpoints.sample(rng),
        };
        let state = obs.encode(&config.features);
        let epsilon = config.epsilon.value(agent.steps, config.decay_steps());
        let action = GainAction::new(select_action(&agent.source, &state, epsilon, rng)?)?;
        gains = apply_action(&gains, action, &config.steps, &env.bounds);
        if config.reset_each_step {
            env.loop_.reset();
        }
        let settled = env.loop_.hold(setpoint, &gains, env.rollout_ticks, rng)?;
        let next = env.observe(setpoint, settled.measured, &gains);
        let err = settled.error.abs();

        let conv = if warmup {
            None
        } else {
            in_target = if err < eps_target { in_target + 1 } else { 0 };
            if converged_step.is_none() && in_target >= config.convergence_window {
                converged_step = Some(step);
            }
            converged_step
        };
        let r = step_reward(setpoint, settled.measured, reward, budget, conv);
        let terminal = err < eps_target
            && conv.is_some_and(|c| c as f64 <= reward.fastconv_fraction * budget as f64);

        let loss = agent.learn(
            Experience {
                state: state.to_vec(),
                action: action.index(),
                reward: r,
                next_state: next.encode(&config.features).to_vec(),
                terminal,
            },
            config.batch_size,
            config.updates_per_step,
            config.gamma,
            config.tau,
            rng,
        )?;

        total += r;
        discounted += discount * r;
        discount *= config.gamma;
        records.push(StepRecord {
            step,
            setpoint,
            measured: settled.measured,
            error: settled.error,
            action,
            gains,
            reward: r,
            epsilon,
            loss,
        });
        obs = next;
        if terminal {
            terminated = true;
            break;
        }
    }

    let tail = &records[records.len().saturating_sub(10)..];
    let mean_last10_error = tail.iter().map(|s| s.error.abs()).sum::<f64>() / tail.len().max(1) as f64;
    Ok(EpisodeLog {
        episode,
        steps: records.len(),
        total_reward: total,
        discounted_reward: discounted,
        final_error: records.last().map_or(0.0, |s| s.error.abs()),
        mean_last10_error,
        converged_step,
        terminated,
        final_gains: gains,
        records,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingReport {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingReport {
    /// Mean final error over the first and last `n` episodes.
    pub fn head_tail_final_error(&self, n: usize) -> Option<(f64, f64)> {
        if self.episodes.len() < n || n == 0 {
            return None;
        }
        let mean = |s: &[EpisodeLog]| s.iter().map(|e| e.final_error).sum::<f64>() / n as f64;
        Some((mean(&self.episodes[..n]), mean(&self.episodes[self.episodes.len() - n..])))
    }
}

#[derive(Debug, Clone)]
pub struct TrainedAgent {
    pub agent: QAgent,
    pub report: TrainingReport,
    pub final_gains: PidGains,
    /// Network snapshot after the episode with the lowest mean last-ten error.
    pub best_net: DenseNet,
    pub best_gains: PidGains,
    pub best_episode: Option<usize>,
}

/// Trains for `config.episodes` episodes. The replay buffer, both networks and
/// the optimizer persist from one episode to the next.
pub fn train_agent<R: Rng + ?Sized>(env: &mut TuningEnv, config: &TrainConfig, reward: &RewardParams, rng: &mut R) -> Result<TrainedAgent> {
    config.validate()?;
    reward.validate()?;
    let net = config.init_network(rng)?;
    let mut agent = QAgent::new(net, config.learning_rate, config.replay_capacity)?;
    let mut report = TrainingReport::default();
    let mut best: Option<(f64, usize, DenseNet, PidGains)> = None;
    for episode in 0..config.episodes {
        let log = run_episode(env, &mut agent, config, reward, episode, rng)?;
        if best.as_ref().is_none_or(|b| log.mean_last10_error < b.0) {
            best = Some((log.mean_last10_error, episode, agent.source.clone(), log.final_gains));
        }
        report.episodes.push(log);
    }
    let final_gains = report.episodes.last().map_or(env.base_gains, |e| e.final_gains);
    let (best_episode, best_net, best_gains) = match best {
        Some((_, ep, net, g)) => (Some(ep), net, g),
        None => (None, agent.source.clone(), env.base_gains),
    };
    Ok(TrainedAgent { agent, report, final_gains, best_net, best_gains, best_episode })
}

/// Greedy action for an already-encoded observation.
pub(crate) fn greedy(net: &DenseNet, state: &[f64]) -> Result<GainAction> {
    Ok(GainAction::new(argmax(&net.predict(state)?))?)
}
