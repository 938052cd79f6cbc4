//! Deep Q-learning gain tuner: observations, the 27-way delta action set,
//! the shaped reward, experience replay, source/target networks and the
//! episodic training loop.

mod action;
mod dqn;
mod episode;
mod observation;
mod replay;
mod reward;

pub use action::{apply_action, ActionSteps, GainAction, ACTION_COUNT};
pub use dqn::{dqn_target, select_action, sync_target, train_step, EpsilonSchedule, QAgent};
pub(crate) use episode::greedy;
pub use episode::{run_episode, train_agent, EpisodeLog, SetpointMode, StepRecord, TrainConfig, TrainedAgent, TrainingReport, TuningEnv};
pub use observation::{observe, FeatureScale, Observation, OBSERVATION_SIZE};
pub use replay::{Experience, ReplayBuffer};
pub use reward::{gaussian_reward, schedule_reward, step_reward, RewardParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("replay buffer holds {have} experiences, batch needs {need}")]
    InsufficientExperience { have: usize, need: usize },
    #[error("action index {0} outside 0..27")]
    BadAction(usize),
    #[error("invalid agent setting `{field}`: {reason}")]
    InvalidSetting { field: &'static str, reason: String },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
}

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> AgentError {
    AgentError::InvalidSetting { field, reason: reason.into() }
}
