use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{invalid, AgentError, Experience, ReplayBuffer};
use crate::nn::{AdamState, DenseNet, Gradients};
use crate::Result;

/// Linear ε decay from `start` to `end` over `decay_steps` global steps, then flat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self { start: 1.0, end: 0.01 }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<(), AgentError> {
        for (field, v) in [("agent.epsilon.start", self.start), ("agent.epsilon.end", self.end)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(invalid(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn value(&self, step: u64, decay_steps: u64) -> f64 {
        if decay_steps == 0 {
            return self.end;
        }
        let frac = (step as f64 / decay_steps as f64).min(1.0);
        self.start + (self.end - self.start) * frac
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub(crate) fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy over the network outputs. No random number is drawn when `epsilon == 0`.
pub fn select_action<R: Rng + ?Sized>(net: &DenseNet, input: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..net.output_size()));
    }
    Ok(argmax(&net.predict(input)?))
}

/// `r + γ·max_a Q_target(s', a)`, or just `r` at a terminal transition.
pub fn dqn_target(reward: f64, next_state: &[f64], target: &DenseNet, gamma: f64, terminal: bool) -> Result<f64> {
    if terminal || gamma == 0.0 {
        return Ok(reward);
    }
    let q = target.predict(next_state)?;
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(reward + gamma * max)
}

/// One mini-batch regression step on the squared Bellman error. Only the
/// taken action's output receives gradient. Returns the batch loss before
/// the update.
pub fn train_step<R: Rng + ?Sized>(
    source: &mut DenseNet,
    target: &DenseNet,
    buffer: &ReplayBuffer,
    opt: &mut AdamState,
    batch: usize,
    gamma: f64,
    rng: &mut R,
) -> Result<f64> {
    if batch == 0 {
        return Err(invalid("agent.batch_size", "must be at least 1").into());
    }
    let idx = buffer.sample_indices(batch, rng)?;
    let mut grads = Gradients::zeros_like(source);
    let mut loss = 0.0;
    let n = source.output_size();
    let mut out_grad = vec![0.0; n];
    for i in idx {
        let exp: &Experience = buffer.get(i).expect("sampled index in range");
        if exp.action >= n {
            return Err(AgentError::BadAction(exp.action).into());
        }
        let y = dqn_target(exp.reward, &exp.next_state, target, gamma, exp.terminal)?;
        let cache = source.forward(&exp.state)?;
        let diff = cache.output()[exp.action] - y;
        loss += diff * diff;
        out_grad.iter_mut().for_each(|g| *g = 0.0);
        out_grad[exp.action] = 2.0 * diff / batch as f64;
        source.backward_accumulate(&cache, &out_grad, &mut grads)?;
    }
    opt.step(source, &grads)?;
    if !source.is_finite() {
        return Err(AgentError::NonFinite("network parameters").into());
    }
    Ok(loss / batch as f64)
}

/// Copies `source` into `target` when `step` is a positive multiple of `tau`.
pub fn sync_target(source: &DenseNet, target: &mut DenseNet, step: u64, tau: u64) -> bool {
    if tau > 0 && step > 0 && step.is_multiple_of(tau) {
        target.clone_from(source);
        true
    } else {
        false
    }
}

/// Source and target networks with their optimizer and replay memory.
#[derive(Debug, Clone)]
pub struct QAgent {
    pub source: DenseNet,
    pub target: DenseNet,
    pub opt: AdamState,
    pub buffer: ReplayBuffer,
    /// Transitions stored so far; drives target synchronization.
    pub steps: u64,
}

impl QAgent {
    pub fn new(source: DenseNet, learning_rate: f64, replay_capacity: usize) -> Result<Self> {
        Ok(Self {
            target: source.clone(),
            opt: AdamState::new(&source, learning_rate),
            buffer: ReplayBuffer::new(replay_capacity)?,
            source,
            steps: 0,
        })
    }

    /// Stores `exp`, runs `updates` training steps if the buffer can fill a
    /// batch, then syncs the target every `tau` stored transitions. Returns the
    /// last batch loss when training ran.
    pub fn learn<R: Rng + ?Sized>(
        &mut self,
        exp: Experience,
        batch: usize,
        updates: usize,
        gamma: f64,
        tau: u64,
        rng: &mut R,
    ) -> Result<Option<f64>> {
        self.buffer.push(exp)?;
        self.steps += 1;
        let mut loss = None;
        if self.buffer.len() >= batch {
            for _ in 0..updates {
                loss = Some(train_step(&mut self.source, &self.target, &self.buffer, &mut self.opt, batch, gamma, rng)?);
            }
        }
        sync_target(&self.source, &mut self.target, self.steps, tau);
        Ok(loss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Single identity layer with zero weights whose output is just the bias.
    fn bias_net(bias: &[f64]) -> DenseNet {
        let mut l = Layer::zeros(1, bias.len(), Activation::Identity);
        l.bias = bias.to_vec();
        DenseNet::from_layers(vec![l]).unwrap()
    }

    #[test]
    fn greedy_picks_unique_max() {
        let mut q = vec![0.0; 27];
        q[5] = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&bias_net(&q), &[0.0], 0.0, &mut rng).unwrap(), 5);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut q = vec![0.0; 27];
        q[3] = 2.0;
        q[9] = 2.0;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_action(&bias_net(&q), &[0.0], 0.0, &mut rng).unwrap(), 3);
    }

    #[test]
    fn greedy_is_shift_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let q: Vec<f64> = (0..27).map(|_| rng.random_range(-1.0..1.0)).collect();
            let shifted: Vec<f64> = q.iter().map(|v| v + 3.7).collect();
            assert_eq!(argmax(&q), argmax(&shifted));
        }
    }

    #[test]
    fn full_exploration_is_uniform() {
        let net = bias_net(&[0.0; 27]);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut counts = [0usize; 27];
        for _ in 0..10_000 {
            counts[select_action(&net, &[0.0], 1.0, &mut rng).unwrap()] += 1;
        }
        assert!(counts.iter().all(|&c| (250..=500).contains(&c)), "{counts:?}");
    }

    #[test]
    fn bellman_target_arithmetic() {
        let t = bias_net(&[0.5, 2.0, -1.0]);
        assert!((dqn_target(1.0, &[0.0], &t, 0.85, false).unwrap() - 2.7).abs() < 1e-12);
        assert_eq!(dqn_target(1.0, &[0.0], &t, 0.85, true).unwrap(), 1.0);
        assert_eq!(dqn_target(1.0, &[0.0], &t, 0.0, false).unwrap(), 1.0);
    }

    #[test]
    fn epsilon_schedule_is_linear() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.value(0, 1000), 1.0);
        assert!((s.value(1000, 1000) - 0.01).abs() < 1e-15);
        assert!((s.value(500, 1000) - 0.505).abs() < 1e-12);
        assert!((s.value(5000, 1000) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn sync_copies_on_multiples_of_tau() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut source = DenseNet::new(&[2, 3, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let mut target = DenseNet::new(&[2, 3, 2], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        assert!(!sync_target(&source, &mut target, 49, 50));
        assert_ne!(source, target);
        assert!(sync_target(&source, &mut target, 50, 50));
        assert_eq!(source, target);
        source.layers[0].bias[0] += 1.0;
        assert!(!sync_target(&source, &mut target, 51, 50));
        assert_ne!(source, target);
        assert!(sync_target(&source, &mut target, 51, 1));
        assert_eq!(source, target);
    }

    #[test]
    fn insufficient_experience() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = bias_net(&[0.0, 0.0]);
        let target = net.clone();
        let mut opt = AdamState::new(&net, 0.01);
        let mut buf = ReplayBuffer::new(100).unwrap();
        for _ in 0..10 {
            buf.push(Experience { state: vec![0.0], action: 0, reward: 1.0, next_state: vec![0.0], terminal: true }).unwrap();
        }
        let r = train_step(&mut net, &target, &buf, &mut opt, 32, 0.85, &mut rng);
        assert!(matches!(r, Err(crate::Error::Agent(AgentError::InsufficientExperience { have: 10, need: 32 }))));
    }

    #[test]
    fn matched_targets_leave_net_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = bias_net(&[1.0, 2.0]);
        let before = net.clone();
        let target = net.clone();
        let mut opt = AdamState::new(&net, 0.01);
        let mut buf = ReplayBuffer::new(64).unwrap();
        for a in 0..2 {
            for _ in 0..20 {
                buf.push(Experience { state: vec![0.3], action: a, reward: a as f64 + 1.0, next_state: vec![0.0], terminal: true }).unwrap();
            }
        }
        let loss = train_step(&mut net, &target, &buf, &mut opt, 32, 0.85, &mut rng).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(net, before);
        assert_eq!(opt.t, 1);
    }

    #[test]
    fn single_transition_regresses_to_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut net = DenseNet::new(&[2, 8, 3], Activation::Tanh, Activation::Identity, &mut rng).unwrap();
        let target = net.clone();
        let mut opt = AdamState::new(&net, 0.01);
        let mut buf = ReplayBuffer::new(1).unwrap();
        buf.push(Experience { state: vec![0.5, -0.2], action: 1, reward: 0.7, next_state: vec![0.0, 0.0], terminal: false }).unwrap();
        for _ in 0..200 {
            train_step(&mut net, &target, &buf, &mut opt, 1, 0.0, &mut rng).unwrap();
        }
        let q = net.predict(&[0.5, -0.2]).unwrap()[1];
        assert!((q - 0.7).abs() < 1e-3, "q = {q}");
    }
}
