use rand::Rng;

use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
}

impl Activation {
    pub fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Activation::Identity),
            1 => Some(Activation::Tanh),
            _ => None,
        }
    }

    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation output `y`.
    fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Affine map `y = act(W·x + b)` with `W` stored row-major, `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            activation,
        }
    }

    /// Uniform in `±sqrt(6 / (fan_in + fan_out))`, zero bias.
    pub fn init<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs)
            .map(|_| rng.random_range(-limit..limit))
            .collect();
        Self {
            inputs,
            outputs,
            weights,
            bias: vec![0.0; outputs],
            activation,
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn forward_into(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.weights.chunks_exact(self.inputs).zip(&self.bias).map(|(row, b)| {
            let z = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
            self.activation.apply(z)
        }));
    }
}

/// Per-layer inputs and outputs of one forward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    /// `activations[0]` is the network input, `activations[i+1]` the output of layer `i`.
    pub activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Gradients laid out exactly like the network parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Layer>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            layers: net
                .layers
                .iter()
                .map(|l| Layer::zeros(l.inputs, l.outputs, l.activation))
                .collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn scale(&mut self, factor: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= factor);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

/// Fully connected feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    pub layers: Vec<Layer>,
}

impl DenseNet {
    /// Builds and validates a network from explicit layers.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, NnError> {
        if layers.is_empty() {
            return Err(NnError::Empty);
        }
        for (i, l) in layers.iter().enumerate() {
            if l.inputs == 0 || l.outputs == 0 {
                return Err(NnError::Empty);
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(NnError::Shape { layer: i });
            }
            if i > 0 && layers[i - 1].outputs != l.inputs {
                return Err(NnError::LayerChain {
                    layer: i,
                    expected: layers[i - 1].outputs,
                    got: l.inputs,
                });
            }
        }
        Ok(Self { layers })
    }

    /// Random network with `sizes = [input, hidden.., output]`; `hidden` on
    /// every layer but the last, `output` on the last.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], hidden: Activation, output: Activation, rng: &mut R) -> Result<Self, NnError> {
        if sizes.len() < 2 {
            return Err(NnError::Empty);
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer::init(w[0], w[1], if i + 1 == n { output } else { hidden }, rng))
            .collect();
        Self::from_layers(layers)
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers.iter_mut().flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    fn check_input(&self, input: &[f64]) -> Result<(), NnError> {
        if input.len() != self.input_size() {
            return Err(NnError::Dimension {
                expected: self.input_size(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Output only, without keeping intermediate activations.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>, NnError> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut y = Vec::new();
        for l in &self.layers {
            l.forward_into(&x, &mut y);
            std::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Result<ForwardCache, NnError> {
        self.check_input(input)?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input.to_vec());
        for l in &self.layers {
            let mut y = Vec::with_capacity(l.outputs);
            l.forward_into(activations.last().expect("non-empty"), &mut y);
            activations.push(y);
        }
        Ok(ForwardCache { activations })
    }

    /// Reverse-mode gradients for the loss whose gradient w.r.t. the network
    /// output is `loss_grad`.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &[f64]) -> Result<Gradients, NnError> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_accumulate(cache, loss_grad, &mut grads)?;
        Ok(grads)
    }

    /// As [`backward`](Self::backward) but adds into `grads`, for mini-batches.
    pub fn backward_accumulate(&self, cache: &ForwardCache, loss_grad: &[f64], grads: &mut Gradients) -> Result<(), NnError> {
        if cache.activations.len() != self.layers.len() + 1
            || cache.activations.iter().zip(self.layers.iter()).any(|(a, l)| a.len() != l.inputs)
        {
            return Err(NnError::CacheMismatch);
        }
        if loss_grad.len() != self.output_size() {
            return Err(NnError::Dimension {
                expected: self.output_size(),
                got: loss_grad.len(),
            });
        }
        if grads.layers.len() != self.layers.len() {
            return Err(NnError::CacheMismatch);
        }

        let mut upstream = loss_grad.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let x = &cache.activations[idx];
            let y = &cache.activations[idx + 1];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(y)
                .map(|(g, &yo)| g * layer.activation.grad_from_output(yo))
                .collect();
            let g = &mut grads.layers[idx];
            for (o, &d) in delta.iter().enumerate() {
                g.bias[o] += d;
                if d != 0.0 {
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    row.iter_mut().zip(x).for_each(|(gw, &xi)| *gw += d * xi);
                }
            }
            if idx > 0 {
                let mut down = vec![0.0; layer.inputs];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    down.iter_mut().zip(row).for_each(|(dn, w)| *dn += d * w);
                }
                upstream = down;
            }
        }
        Ok(())
    }
}
