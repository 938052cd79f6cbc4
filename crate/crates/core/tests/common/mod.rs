//! Test-side oracles. Nothing here calls into the code under test except to
//! read parameters or run a forward pass.
#![allow(dead_code)]

use drl_pid::nn::{Activation, DenseNet};
use rand::Rng;

/// Random dense net: 1..=3 hidden tanh layers, identity or tanh output.
pub fn random_net<R: Rng>(rng: &mut R) -> DenseNet {
    let depth = rng.random_range(1..=3);
    let mut sizes = vec![rng.random_range(1..=6)];
    for _ in 0..depth {
        sizes.push(rng.random_range(1..=8));
    }
    sizes.push(rng.random_range(1..=5));
    let out = if rng.random_bool(0.5) { Activation::Identity } else { Activation::Tanh };
    let mut net = DenseNet::new(&sizes, Activation::Tanh, out, rng).unwrap();
    // non-zero biases so every parameter gets exercised
    for l in &mut net.layers {
        l.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
    }
    net
}

/// Central-difference gradient of `w · net(x)` with respect to every parameter.
pub fn numeric_gradient(net: &DenseNet, x: &[f64], w: &[f64], h: f64) -> Vec<f64> {
    let objective = |n: &DenseNet| -> f64 { n.predict(x).unwrap().iter().zip(w).map(|(y, w)| y * w).sum() };
    let mut probe = net.clone();
    (0..net.param_count())
        .map(|i| {
            let orig = *probe.params_mut().nth(i).unwrap();
            *probe.params_mut().nth(i).unwrap() = orig + h;
            let up = objective(&probe);
            *probe.params_mut().nth(i).unwrap() = orig - h;
            let down = objective(&probe);
            *probe.params_mut().nth(i).unwrap() = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / max(|a|, |b|, floor)`. The floor keeps near-zero gradients from
/// turning rounding noise into a large ratio.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Deterministic finite MDP: `next[s][a]` is `None` for a terminal transition.
pub struct Mdp {
    pub reward: Vec<Vec<f64>>,
    pub next: Vec<Vec<Option<usize>>>,
}

impl Mdp {
    /// Q* by value iteration to a fixed point.
    pub fn value_iteration(&self, gamma: f64) -> Vec<Vec<f64>> {
        let ns = self.reward.len();
        let mut q = vec![vec![0.0; self.reward[0].len()]; ns];
        for _ in 0..10_000 {
            let v: Vec<f64> = q.iter().map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max)).collect();
            let mut delta: f64 = 0.0;
            for (s, row) in q.iter_mut().enumerate() {
                for (a, slot) in row.iter_mut().enumerate() {
                    let next = self.reward[s][a] + self.next[s][a].map_or(0.0, |s2| gamma * v[s2]);
                    delta = delta.max((next - *slot).abs());
                    *slot = next;
                }
            }
            if delta < 1e-13 {
                break;
            }
        }
        q
    }
}

pub fn one_hot(i: usize, n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Position of `m·x'' + c·x' + k·x = u` from rest under a constant force `u`
/// applied at `t = 0`. Requires `k > 0`, `c >= 0`.
pub fn step_response(m: f64, c: f64, k: f64, u: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let x_inf = u / k;
    let wn = (k / m).sqrt();
    let zeta = c / (2.0 * (k * m).sqrt());
    if (zeta - 1.0).abs() < 1e-12 {
        x_inf * (1.0 - (-wn * t).exp() * (1.0 + wn * t))
    } else if zeta < 1.0 {
        let wd = wn * (1.0 - zeta * zeta).sqrt();
        x_inf * (1.0 - (-zeta * wn * t).exp() * ((wd * t).cos() + zeta * wn / wd * (wd * t).sin()))
    } else {
        let s = wn * (zeta * zeta - 1.0).sqrt();
        let r1 = -zeta * wn + s;
        let r2 = -zeta * wn - s;
        x_inf * (1.0 + (r2 * (r1 * t).exp() - r1 * (r2 * t).exp()) / (r1 - r2))
    }
}
