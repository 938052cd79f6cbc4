use super::{DenseNet, Gradients, NnError};

/// Bias-corrected adaptive-moment optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(net: &DenseNet, learning_rate: f64) -> Self {
        Self::with_betas(net, learning_rate, 0.9, 0.999, 1e-8)
    }

    pub fn with_betas(net: &DenseNet, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let n = net.param_count();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
        }
    }

    /// One update step in place; increments `t`.
    pub fn step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<(), NnError> {
        let n = net.param_count();
        if self.m.len() != n || grads.iter().count() != n {
            return Err(NnError::CacheMismatch);
        }
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for (((p, g), m), v) in net.params_mut().zip(grads.iter()).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Functional form: returns the updated network and optimizer state.
pub fn adam_update(net: &DenseNet, grads: &Gradients, opt: &AdamState) -> Result<(DenseNet, AdamState), NnError> {
    let mut net = net.clone();
    let mut opt = opt.clone();
    opt.step(&mut net, grads)?;
    Ok((net, opt))
}
