//! Experiment configuration: TOML with dotted keys (`plant.mass = 0.1`),
//! unknown keys rejected.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::agent::{RewardParams, TrainConfig, TuningEnv};
use crate::pid::{GainBounds, PidGains, PidState};
use crate::plant::PlantParams;
use crate::tuners::{FuzzyRuleTable, FuzzyScaling, RelayConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PidConfig {
    /// Factor on the derivative term.
    pub d_scale: f64,
    pub integral_limit: f64,
    pub bounds: GainBounds,
    pub base_gains: PidGains,
    /// Control ticks per commanded setpoint (and per tuning step).
    pub rollout_ticks: usize,
}

impl Default for PidConfig {
    fn default() -> Self {
        let st = PidState::default();
        Self {
            d_scale: st.d_scale,
            integral_limit: st.integral_limit,
            bounds: GainBounds::default(),
            base_gains: PidGains::default(),
            rollout_ticks: 100,
        }
    }
}

impl PidConfig {
    pub fn state(&self) -> PidState {
        PidState::new(self.d_scale, self.integral_limit)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuzzyConfig {
    pub scaling: FuzzyScaling,
    /// Rule table in the bundled text format; the built-in table when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule_file: Option<PathBuf>,
}

impl FuzzyConfig {
    pub fn table(&self) -> Result<FuzzyRuleTable> {
        match &self.rule_file {
            None => Ok(FuzzyRuleTable::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse()
                    .map_err(|e| HarnessError::Config(format!("fuzzy.rule_file {}: {e}", p.display())).into())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub trials: usize,
    pub setpoints: usize,
    /// Setpoint distribution, m.
    pub setpoint_mean: f64,
    pub setpoint_std: f64,
    /// When false the drl controller runs the gains exported with its checkpoint.
    /// When true it keeps choosing gain actions online from those gains.
    pub adapt: bool,
    /// Online adaptation stops once its convergence test passes.
    pub stop_on_convergence: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            trials: 10,
            setpoints: 100,
            setpoint_mean: 0.1,
            setpoint_std: 0.05,
            adapt: false,
            stop_on_convergence: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub plant: PlantParams,
    pub pid: PidConfig,
    pub agent: TrainConfig,
    pub reward: RewardParams,
    pub relay: RelayConfig,
    pub fuzzy: FuzzyConfig,
    pub eval: EvalConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            output_dir: PathBuf::from("runs"),
            plant: PlantParams::default(),
            pid: PidConfig::default(),
            agent: TrainConfig::default(),
            reward: RewardParams::default(),
            relay: RelayConfig::default(),
            fuzzy: FuzzyConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn cfg_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| cfg_err(e.to_string().trim_end()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.plant.validate().map_err(|e| cfg_err(format!("plant: {e}")))?;
        self.pid.state().validate().map_err(|e| cfg_err(format!("pid: {e}")))?;
        self.pid.bounds.validate().map_err(|e| cfg_err(format!("pid.bounds: {e}")))?;
        if !self.pid.base_gains.is_finite() {
            return Err(cfg_err("pid.base_gains must be finite"));
        }
        if self.pid.rollout_ticks == 0 {
            return Err(cfg_err("pid.rollout_ticks must be at least 1"));
        }
        self.agent.validate().map_err(cfg_err)?;
        self.reward.validate().map_err(cfg_err)?;
        self.relay.validate().map_err(|e| cfg_err(format!("relay: {e}")))?;
        self.fuzzy.scaling.validate().map_err(|e| cfg_err(format!("fuzzy.scaling: {e}")))?;
        let ev = &self.eval;
        if ev.trials == 0 || ev.setpoints == 0 {
            return Err(cfg_err("eval.trials and eval.setpoints must be at least 1"));
        }
        if !ev.setpoint_mean.is_finite() || !(ev.setpoint_std.is_finite() && ev.setpoint_std >= 0.0) {
            return Err(cfg_err("eval.setpoint_mean must be finite and eval.setpoint_std >= 0"));
        }
        Ok(())
    }

    /// Every setting as one sorted `dotted.key = value` line; the form hashed
    /// and echoed into run manifests.
    pub fn canonical(&self) -> String {
        let value = toml::Table::try_from(self).expect("config serializes to a table");
        let mut lines = Vec::new();
        flatten("", &toml::Value::Table(value), &mut lines);
        lines.sort();
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    /// Hex SHA-256 of [`canonical`](Self::canonical) with `output_dir` blanked,
    /// since where files land does not change what is in them.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let digest = Sha256::digest(c.canonical().as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    pub fn tuning_env(&self) -> Result<TuningEnv> {
        TuningEnv::new(self.plant, self.pid.state(), self.pid.bounds, self.pid.base_gains, self.pid.rollout_ticks)
    }
}

fn flatten(prefix: &str, v: &toml::Value, out: &mut Vec<String>) {
    match v {
        toml::Value::Table(t) => {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        other => out.push(format!("{prefix} = {other}")),
    }
}
