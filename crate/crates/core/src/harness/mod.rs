//! Experiment runner: training, evaluation, comparison and relay autotuning,
//! each writing CSV files that start with a `# ... config_hash=<hex> seed=<n>` line.

mod compare;
mod config;
mod eval;

pub use compare::{parse_eval_csv, Comparison, ControllerSummary, CsvRow, CONTROLLERS, EVAL_COLUMNS};
pub use config::{EvalConfig, ExperimentConfig, FuzzyConfig, PidConfig};
pub use eval::{error_stats, run_eval, run_trial, trial_rng, Controller, EvalRow, TrialResult};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::agent::{train_agent, TrainedAgent};
use crate::nn::{load_net_file, save_net_file};
use crate::pid::PidGains;
use crate::tuners::{relay_autotune, zn_gains, zn_raw_gains, RelayResult};
use crate::{Error, Result};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing input: {0}")]
    MissingInput(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControllerKind {
    Drl,
    Classical,
    Fuzzy,
}

impl ControllerKind {
    pub fn name(self) -> &'static str {
        match self {
            ControllerKind::Drl => "drl",
            ControllerKind::Classical => "classical",
            ControllerKind::Fuzzy => "fuzzy",
        }
    }
}

impl FromStr for ControllerKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        match s {
            "drl" => Ok(ControllerKind::Drl),
            "classical" => Ok(ControllerKind::Classical),
            "fuzzy" => Ok(ControllerKind::Fuzzy),
            other => Err(HarnessError::Config(format!("unknown controller `{other}` (expected drl, classical or fuzzy)"))),
        }
    }
}

/// First line of every output file.
pub fn file_header(kind: &str, cfg: &ExperimentConfig) -> String {
    format!("# drl-pid {kind} config_hash={} seed={}\n", cfg.hash(), cfg.seed)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = cfg.output_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    if !path.exists() {
        return Err(HarnessError::MissingInput(path.display().to_string()).into());
    }
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn gains_file_text(gains: &PidGains) -> String {
    format!("kp={}\nki={}\nkd={}\n", gains.kp, gains.ki, gains.kd)
}

pub fn parse_gains(text: &str) -> Result<PidGains, HarnessError> {
    let mut g = [None; 3];
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| HarnessError::Parse { line: i + 1, msg };
        let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key=value".into()))?;
        let slot = match k.trim() {
            "kp" => 0,
            "ki" => 1,
            "kd" => 2,
            other => return Err(bad(format!("unknown gain `{other}`"))),
        };
        g[slot] = Some(v.trim().parse::<f64>().map_err(|e| bad(e.to_string()))?);
    }
    match g {
        [Some(kp), Some(ki), Some(kd)] => Ok(PidGains::new(kp, ki, kd)),
        _ => Err(HarnessError::Parse { line: 0, msg: "gains file needs kp, ki and kd".into() }),
    }
}

/// Gains exported next to a checkpoint: `final.dqn` pairs with `final.gains`.
pub fn gains_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("gains")
}

pub fn training_csv(cfg: &ExperimentConfig, trained: &TrainedAgent) -> String {
    let mut out = file_header("training", cfg);
    out.push_str("# final_error and mean_last10_error in mm\n");
    out.push_str("episode,steps,total_reward,discounted_reward,final_error,mean_last10_error\n");
    for e in &trained.report.episodes {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.episode + 1,
            e.steps,
            e.total_reward,
            e.discounted_reward,
            e.final_error * 1e3,
            e.mean_last10_error * 1e3
        );
    }
    out
}

/// Trains the agent and writes `training.csv`, `final.dqn`/`best.dqn`, their
/// `.gains` companions and `manifest.toml`.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainedAgent> {
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let mut env = cfg.tuning_env()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trained = train_agent(&mut env, &cfg.agent, &cfg.reward, &mut rng)?;

    write(&dir.join("training.csv"), &training_csv(cfg, &trained))?;
    for (name, net, gains) in [
        ("final", &trained.agent.source, &trained.final_gains),
        ("best", &trained.best_net, &trained.best_gains),
    ] {
        let ckpt = dir.join(format!("{name}.{}", crate::nn::CHECKPOINT_EXTENSION));
        save_net_file(net, &ckpt)?;
        write(&gains_path(&ckpt), &(file_header("gains", cfg) + &gains_file_text(gains)))?;
    }
    let mut manifest = file_header("manifest", cfg);
    if let Some(b) = trained.best_episode {
        let _ = writeln!(manifest, "# best checkpoint from episode {}", b + 1);
    }
    manifest.push_str(&cfg.canonical());
    write(&dir.join("manifest.toml"), &manifest)?;
    Ok(trained)
}

pub fn build_controller(cfg: &ExperimentConfig, kind: ControllerKind, checkpoint: Option<&Path>) -> Result<Controller> {
    Ok(match kind {
        ControllerKind::Classical => {
            let (_, gains) = cmd_autotune(cfg)?;
            Controller::Fixed(gains)
        }
        ControllerKind::Fuzzy => Controller::Fuzzy {
            base: cfg.pid.base_gains,
            table: cfg.fuzzy.table()?,
            scaling: cfg.fuzzy.scaling,
        },
        ControllerKind::Drl => {
            let default = cfg.output_dir.join(format!("final.{}", crate::nn::CHECKPOINT_EXTENSION));
            let path = checkpoint.map(Path::to_path_buf).unwrap_or(default);
            if !path.exists() {
                return Err(HarnessError::MissingInput(format!("checkpoint {}", path.display())).into());
            }
            let net = load_net_file(&path)?;
            if net.input_size() != crate::agent::OBSERVATION_SIZE || net.output_size() != crate::agent::ACTION_COUNT {
                return Err(HarnessError::Config(format!(
                    "checkpoint {} maps {} inputs to {} outputs, expected {} to {}",
                    path.display(),
                    net.input_size(),
                    net.output_size(),
                    crate::agent::OBSERVATION_SIZE,
                    crate::agent::ACTION_COUNT
                ))
                .into());
            }
            let gp = gains_path(&path);
            if !cfg.eval.adapt {
                if !gp.exists() {
                    return Err(HarnessError::MissingInput(format!("tuned gains {}", gp.display())).into());
                }
                return Ok(Controller::Fixed(parse_gains(&read(&gp)?)?));
            }
            let start = if gp.exists() { parse_gains(&read(&gp)?)? } else { cfg.pid.base_gains };
            let stop = cfg.eval.stop_on_convergence.then_some((cfg.reward.epsilon_target, cfg.agent.convergence_window));
            Controller::Drl { net, start, features: cfg.agent.features, steps: cfg.agent.steps, stop }
        }
    })
}

pub fn eval_csv(cfg: &ExperimentConfig, kind: ControllerKind, trials: &[TrialResult]) -> String {
    let mut out = file_header(&format!("eval controller={}", kind.name()), cfg);
    out.push_str("# setpoint, measured and error in mm\n");
    out.push_str(EVAL_COLUMNS);
    out.push('\n');
    for t in trials {
        for r in &t.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                t.trial,
                r.step,
                r.setpoint * 1e3,
                r.measured * 1e3,
                r.error * 1e3,
                r.gains.kp,
                r.gains.ki,
                r.gains.kd
            );
        }
    }
    out
}

/// Evaluates one controller and writes `eval_<controller>.csv`.
pub fn cmd_eval(cfg: &ExperimentConfig, kind: ControllerKind, checkpoint: Option<&Path>) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let controller = build_controller(cfg, kind, checkpoint)?;
    let dir = out_dir(cfg)?;
    let trials = run_eval(cfg, &controller)?;
    write(&dir.join(format!("eval_{}.csv", kind.name())), &eval_csv(cfg, kind, &trials))?;
    Ok(trials)
}

/// Reads the three `eval_*.csv` files and writes `comparison.csv`,
/// `verdict.txt` and one `fig5_<controller>.csv` per controller.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<Comparison> {
    let dir = cfg.output_dir.clone();
    let mut summaries = Vec::new();
    let mut figs = Vec::new();
    for name in CONTROLLERS {
        let path = dir.join(format!("eval_{name}.csv"));
        let rows = parse_eval_csv(&read(&path)?).map_err(|e| match e {
            HarnessError::Parse { line, msg } => HarnessError::Parse { line, msg: format!("{}: {msg}", path.display()) },
            other => other,
        })?;
        summaries.push(ControllerSummary::from_rows(name, &rows));
        figs.push((name, rows));
    }
    let cmp = Comparison::new(summaries);
    let dir = out_dir(cfg)?;
    write(&dir.join("comparison.csv"), &(file_header("comparison", cfg) + "# errors in mm\n" + &cmp.to_csv()))?;
    write(&dir.join("verdict.txt"), &(file_header("verdict", cfg) + &cmp.verdict()))?;
    for (name, rows) in figs {
        let first = rows.first().map(|r| r.trial);
        let mut out = file_header(&format!("fig5 controller={name}"), cfg);
        out.push_str("# first trial; setpoint and measured in mm\nstep,setpoint,measured\n");
        for r in rows.iter().filter(|r| Some(r.trial) == first) {
            let _ = writeln!(out, "{},{},{}", r.step, r.setpoint, r.measured);
        }
        write(&dir.join(format!("fig5_{name}.csv")), &out)?;
    }
    Ok(cmp)
}

/// Relay experiment followed by the clamped Ziegler-Nichols gains.
pub fn cmd_autotune(cfg: &ExperimentConfig) -> Result<(RelayResult, PidGains)> {
    let mut rng = trial_rng(cfg.seed, 0, 0);
    let r = relay_autotune(&cfg.plant, &cfg.relay, &mut rng)?;
    Ok((r, zn_gains(&r, &cfg.pid.bounds)))
}

pub fn autotune_report(r: &RelayResult, gains: &PidGains) -> String {
    let raw = zn_raw_gains(r);
    format!(
        "ultimate_gain={}\nultimate_period={}\noscillation_amplitude={}\nrelay_amplitude={}\nraw_kp={}\nraw_ki={}\nraw_kd={}\nkp={}\nki={}\nkd={}\n",
        r.ultimate_gain, r.ultimate_period, r.amplitude, r.relay_amplitude, raw.kp, raw.ki, raw.kd, gains.kp, gains.ki, gains.kd
    )
}
