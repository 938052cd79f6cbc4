use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use drl_pid::harness::{self, ControllerKind, ExperimentConfig};
use drl_pid::Error;

#[derive(Parser, Debug)]
#[command(name = "drl-pid", version, about = "Train, evaluate and compare PID gain tuners on a delayed axial stage")]
struct Cli {
    /// Experiment config (TOML, dotted keys); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the Q-network tuner; writes training.csv, checkpoints and a manifest.
    Train,
    /// Run the setpoint-tracking protocol for one controller.
    Eval {
        #[arg(long, value_parser = ["drl", "classical", "fuzzy"])]
        controller: String,
        /// Checkpoint for the drl controller (default: <out>/final.dqn).
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Rank the three controllers from their eval CSVs.
    Compare,
    /// Relay experiment and Ziegler-Nichols gains, printed as key=value lines.
    Autotune,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let cfg = load(cli)?;
    match &cli.command {
        Command::Train => {
            let t = harness::cmd_train(&cfg)?;
            if let Some((head, tail)) = t.report.head_tail_final_error(5) {
                println!("first5_final_error_mm={}", head * 1e3);
                println!("last5_final_error_mm={}", tail * 1e3);
            }
            println!("episodes={}", t.report.episodes.len());
            println!("final_gains={},{},{}", t.final_gains.kp, t.final_gains.ki, t.final_gains.kd);
            println!("output_dir={}", cfg.output_dir.display());
        }
        Command::Eval { controller, checkpoint } => {
            let kind: ControllerKind = controller.parse()?;
            let trials = harness::cmd_eval(&cfg, kind, checkpoint.as_deref())?;
            for t in &trials {
                println!(
                    "trial={} mean_abs_error_mm={} std_abs_error_mm={} rms_error_mm={} max_abs_error_mm={}",
                    t.trial, t.mean_abs_mm, t.std_abs_mm, t.rms_mm, t.max_abs_mm
                );
            }
        }
        Command::Compare => {
            let c = harness::cmd_compare(&cfg)?;
            print!("{}", c.verdict());
        }
        Command::Autotune => {
            let (r, g) = harness::cmd_autotune(&cfg)?;
            print!("{}", harness::autotune_report(&r, &g));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error kind={} message={msg:?}", e.kind());
            ExitCode::FAILURE
        }
    }
}
