//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. Tolerances and time limits are pinned below.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use drl_pid::agent::{
    gaussian_reward, schedule_reward, select_action, train_agent, Experience, QAgent, RewardParams,
};
use drl_pid::harness::ExperimentConfig;
use drl_pid::nn::{load_net, save_net, Activation, DenseNet, NnError};
use drl_pid::plant::{reset_plant, PlantParams};
use drl_pid::tuners::{fuzzy_delta, zn_raw_gains, FuzzyRuleTable, FuzzyScaling, RelayResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{numeric_gradient, one_hot, random_net, relative_error, step_response, Mdp};

const BIN: &str = env!("CARGO_BIN_EXE_drl-pid");

/// Name, check, time limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn within_time(o: Outcome, elapsed: Duration, limit: Duration) -> Outcome {
    if elapsed > limit {
        outcome(false, format!("{} but took {:.1}s, limit {:.0}s", o.detail, elapsed.as_secs_f64(), limit.as_secs_f64()))
    } else {
        o
    }
}

fn gradient_check() -> Outcome {
    const NETS: usize = 100;
    const H: f64 = 1e-5;
    const TOL: f64 = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..NETS {
        let net = random_net(&mut rng);
        let x: Vec<f64> = (0..net.input_size()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let w: Vec<f64> = (0..net.output_size()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = net.forward(&x).unwrap();
        let analytic = net.backward(&cache, &w).unwrap();
        let numeric = numeric_gradient(&net, &x, &w, H);
        for (a, n) in analytic.iter().zip(&numeric) {
            worst = worst.max(relative_error(*a, *n, 1e-6));
        }
    }
    outcome(worst < TOL, format!("{NETS} nets, worst relative error {worst:.2e} (< {TOL:.0e})"))
}

/// s0 --a0 (r 1)--> s1, s0 --a1 (r 0)--> s0, s1 --a0 (r 0.5)--> s0, s1 --a1 (r 2)--> end.
fn toy_mdp() -> Mdp {
    Mdp {
        reward: vec![vec![1.0, 0.0], vec![0.5, 2.0]],
        next: vec![vec![Some(1), Some(0)], vec![Some(0), None]],
    }
}

fn bellman_oracle() -> Outcome {
    const GAMMA: f64 = 0.85;
    const TOL: f64 = 1e-2;
    let mdp = toy_mdp();
    let q_star = mdp.value_iteration(GAMMA);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let net = DenseNet::new(&[2, 16, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
    let mut agent = QAgent::new(net, 0.005, 1000).unwrap();
    let mut s = 0;
    for _ in 0..20_000 {
        let a = select_action(&agent.source, &one_hot(s, 2), 1.0, &mut rng).unwrap();
        let next = mdp.next[s][a];
        let exp = Experience {
            state: one_hot(s, 2),
            action: a,
            reward: mdp.reward[s][a],
            next_state: one_hot(next.unwrap_or(0), 2),
            terminal: next.is_none(),
        };
        agent.learn(exp, 32, 1, GAMMA, 50, &mut rng).unwrap();
        s = next.unwrap_or(0);
    }
    let mut worst: f64 = 0.0;
    for (s, row) in q_star.iter().enumerate() {
        let q = agent.source.predict(&one_hot(s, 2)).unwrap();
        for (a, &v) in row.iter().enumerate() {
            worst = worst.max((q[a] - v).abs());
        }
    }
    outcome(worst < TOL, format!("max |Q - Q*| = {worst:.2e} (< {TOL:.0e}), Q* = {q_star:.4?}"))
}

fn reward_table() -> Outcome {
    let mut failures = Vec::new();
    for sigma2 in [0.25, 1.0, 4.0] {
        let peak = gaussian_reward(0.3, 0.3, sigma2);
        let expect = 1.0 / (2.0 * std::f64::consts::PI * sigma2);
        if peak != expect {
            failures.push(format!("peak at sigma2={sigma2}: {peak} != {expect}"));
        }
    }
    let p = RewardParams::default();
    let eps = p.epsilon_target;
    let budget = 100;
    // (error, converged step, expected)
    let table: [(f64, Option<usize>, f64); 8] = [
        (0.5 * eps, Some(50), 5.0),
        (0.5 * eps, Some(80), 5.0),
        (0.5 * eps, Some(81), 1.0),
        (0.5 * eps, None, 1.0),
        (11.0 * eps, None, -5.0),
        (11.0 * eps, Some(10), -5.0),
        (2.0 * eps, None, -1.5),
        (1.2 * eps, None, -1.0),
    ];
    for (err, conv, expect) in table {
        let got = schedule_reward(0.1 - err, 0.1, &p, budget, conv);
        if got != expect {
            failures.push(format!("error {err:.1e} converged {conv:?}: {got} != {expect}"));
        }
    }
    if failures.is_empty() {
        outcome(true, "Gaussian peak and 8 schedule rows exact")
    } else {
        outcome(false, failures.join("; "))
    }
}

fn training_improvement() -> Outcome {
    const SEEDS: u64 = 10;
    const NEED: usize = 8;
    let cfg = ExperimentConfig::default();
    let mut wins = 0;
    let mut lines = Vec::new();
    for seed in 0..SEEDS {
        let mut env = cfg.tuning_env().unwrap();
        let trained = train_agent(&mut env, &cfg.agent, &cfg.reward, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (head, tail) = trained.report.head_tail_final_error(5).unwrap();
        if tail < head {
            wins += 1;
        }
        lines.push(format!("{:.2}->{:.2}", head * 1e3, tail * 1e3));
    }
    outcome(
        wins >= NEED,
        format!("{wins}/{SEEDS} seeds improve (need {NEED}); first5->last5 mm: {}", lines.join(" ")),
    )
}

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(BIN).arg("--out").arg(out).args(args).output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn controller_ranking() -> Outcome {
    const RATIO: f64 = 0.5;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let steps: [&[&str]; 5] = [
        &["train"],
        &["eval", "--controller", "drl"],
        &["eval", "--controller", "classical"],
        &["eval", "--controller", "fuzzy"],
        &["compare"],
    ];
    for args in steps {
        if let Err(e) = run_cli(out, args) {
            return outcome(false, e);
        }
    }
    let text = std::fs::read_to_string(out.join("comparison.csv")).unwrap();
    let mean = |name: &str| -> f64 {
        let row = text.lines().find(|l| l.starts_with(&format!("{name},"))).expect("controller row");
        row.split(',').nth(3).unwrap().parse().unwrap()
    };
    let (drl, classical, fuzzy) = (mean("drl"), mean("classical"), mean("fuzzy"));
    let ordered = drl <= classical && classical <= fuzzy;
    let margin = drl < RATIO * classical;
    outcome(
        ordered && margin,
        format!(
            "mean abs error mm: drl {drl:.3}, classical {classical:.3}, fuzzy {fuzzy:.3}; ordered={ordered}, drl < {RATIO}x classical={margin}"
        ),
    )
}

fn zn_arithmetic() -> Outcome {
    let r = RelayResult { ultimate_gain: 2.0, ultimate_period: 1.0, amplitude: 1.0, relay_amplitude: 1.0 };
    let g = zn_raw_gains(&r);
    let got = (g.kp, g.ki, g.kd);
    outcome(got == (1.2, 2.4, 0.15), format!("Ku=2, Tu=1 -> {got:?}"))
}

fn fuzzy_symmetry() -> Outcome {
    const TOL: f64 = 1e-9;
    let table = FuzzyRuleTable::default();
    let scale = FuzzyScaling::default();
    let origin = fuzzy_delta(0.0, 0.0, &table, &scale);
    let mut worst: f64 = 0.0;
    for i in 0..21 {
        for j in 0..21 {
            let e = scale.error_range * (-1.5 + 0.15 * i as f64);
            let r = scale.rate_range * (-1.5 + 0.15 * j as f64);
            let a = fuzzy_delta(e, r, &table, &scale);
            let b = fuzzy_delta(-e, -r, &table, &scale);
            worst = worst.max((a[0] + b[0]).abs()).max((a[1] + b[1]).abs());
        }
    }
    let zero = origin.iter().all(|d| d.abs() <= TOL);
    outcome(
        zero && worst <= TOL,
        format!("origin deltas {origin:?}, worst |d(e,r) + d(-e,-r)| over 21x21 = {worst:.1e}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        for args in [&["train"][..], &["eval", "--controller", "drl"][..]] {
            if let Err(e) = run_cli(&out, args) {
                return outcome(false, e);
            }
        }
        let files: Vec<Vec<u8>> = ["training.csv", "eval_drl.csv"]
            .iter()
            .map(|f| std::fs::read(out.join(f)).unwrap())
            .collect();
        runs.push(files);
    }
    outcome(runs[0] == runs[1], "training.csv and eval_drl.csv compared byte for byte across two runs")
}

fn plant_physics() -> Outcome {
    const DT: f64 = 1e-4;
    const HORIZON: f64 = 5.0;
    const TOL: f64 = 0.005;
    const ENERGY_TOL: f64 = 1e-9;
    let u = 0.2;
    let cases = [
        PlantParams { dt: DT, ..Default::default() },
        PlantParams { mass: 0.5, damping: 1.0, stiffness: 10.0, actuation_delay: 0.0, dt: DT, noise_std: 0.0 },
        PlantParams { mass: 1.0, damping: 2.0, stiffness: 1.0, actuation_delay: 0.05, dt: DT, noise_std: 0.0 },
    ];
    let mut worst_step: f64 = 0.0;
    for p in &cases {
        let mut s = reset_plant(p);
        let delay = p.delay_steps();
        let n = (HORIZON / DT).round() as usize;
        for i in 1..=n {
            s.step(u, p).unwrap();
            let t = i.saturating_sub(delay) as f64 * DT;
            let exact = step_response(p.mass, p.damping, p.stiffness, u, t);
            worst_step = worst_step.max((s.position - exact).abs() / (u / p.stiffness));
        }
    }
    let mut worst_rise = f64::NEG_INFINITY;
    for p in &cases {
        let mut s = reset_plant(p);
        s.position = 0.3;
        s.velocity = -0.7;
        for _ in 0..(HORIZON / DT) as usize {
            let before = s.energy(p);
            s.step(0.0, p).unwrap();
            worst_rise = worst_rise.max(s.energy(p) - before);
        }
    }
    outcome(
        worst_step < TOL && worst_rise <= ENERGY_TOL,
        format!(
            "step response worst deviation {:.3}% of final value (< {:.1}%), largest per-step energy change {worst_rise:.1e} (<= {ENERGY_TOL:.0e})",
            worst_step * 100.0,
            TOL * 100.0
        ),
    )
}

fn checkpoint_round_trip() -> Outcome {
    const NETS: usize = 50;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut exact = 0;
    let mut rejected = 0;
    let mut attempts = 0;
    for _ in 0..NETS {
        let net = random_net(&mut rng);
        let bytes = save_net(&net);
        let back = load_net(&bytes).unwrap();
        if back.layers.len() == net.layers.len()
            && back.layers.iter().zip(&net.layers).all(|(a, b)| a.activation == b.activation)
            && back.params().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits())
        {
            exact += 1;
        }
        let mut corrupt = Vec::new();
        let cut = rng.random_range(0..bytes.len());
        corrupt.push(bytes[..cut].to_vec());
        for _ in 0..4 {
            let mut b = bytes.clone();
            let at = rng.random_range(0..b.len());
            b[at] ^= 1 << rng.random_range(0..8);
            corrupt.push(b);
        }
        let mut longer = bytes.clone();
        longer.push(0);
        corrupt.push(longer);
        for c in corrupt {
            attempts += 1;
            let r: Result<DenseNet, NnError> = load_net(&c);
            if r.is_err() {
                rejected += 1;
            }
        }
    }
    outcome(
        exact == NETS && rejected == attempts,
        format!("{exact}/{NETS} bit-exact, {rejected}/{attempts} corrupted streams rejected"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("1 gradient check", gradient_check, 10),
        ("2 bellman oracle", bellman_oracle, 30),
        ("3 reward table", reward_table, 10),
        ("4 training improvement", training_improvement, 300),
        ("5 controller ranking", controller_ranking, 600),
        ("6 ziegler-nichols arithmetic", zn_arithmetic, 10),
        ("7 fuzzy symmetry", fuzzy_symmetry, 10),
        ("8 determinism", determinism, 120),
        ("9 plant physics", plant_physics, 60),
        ("10 checkpoint round trip", checkpoint_round_trip, 10),
    ];
    let mut failed = Vec::new();
    for (name, run, limit) in criteria {
        let start = Instant::now();
        let o = match std::panic::catch_unwind(run) {
            Ok(o) => o,
            Err(p) => {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                outcome(false, format!("panicked: {msg}"))
            }
        };
        let elapsed = start.elapsed();
        let o = within_time(o, elapsed, Duration::from_secs(limit));
        println!(
            "{} criterion {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
