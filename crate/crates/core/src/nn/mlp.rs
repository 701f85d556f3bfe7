use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;

use super::NnError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Tanh => z.mapv_inplace(f64::tanh),
            Activation::Identity => {}
        }
    }

    /// Multiply `grad` by the activation derivative, given pre- and post-activation values.
    fn backprop(self, grad: &mut Array2<f64>, pre: &Array2<f64>, post: &Array2<f64>) {
        match self {
            Activation::Relu => Zip::from(grad).and(pre).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => Zip::from(grad).and(post).for_each(|g, &y| *g *= 1.0 - y * y),
            Activation::Identity => {}
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// One affine layer. `weight` is `(out, in)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { weight: Array2::zeros((outputs, inputs)), bias: Array1::zeros(outputs) }
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.weight.dim() == other.weight.dim() && self.bias.len() == other.bias.len()
    }
}

static NEXT_VERSION: AtomicU64 = AtomicU64::new(1);

fn fresh_version() -> u64 {
    NEXT_VERSION.fetch_add(1, Ordering::Relaxed)
}

/// ReLU multilayer perceptron with a configurable output activation.
#[derive(Clone, Debug)]
pub struct Mlp {
    layers: Vec<Dense>,
    output: Activation,
    version: u64,
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.output == other.output
    }
}

/// Per-layer values saved by a forward pass.
#[derive(Clone, Debug)]
pub struct Cache {
    version: u64,
    /// `inputs[i]` is the input to layer `i`, batch-major.
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        &self.output
    }
}

/// Parameter gradients with the same layout as the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weight.iter().chain(l.bias.iter()))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

impl Mlp {
    /// Build from explicit layers. Hidden layers use ReLU.
    pub fn from_layers(layers: Vec<Dense>, output: Activation) -> Result<Self, NnError> {
        if layers.is_empty() || layers.windows(2).any(|w| w[0].outputs() != w[1].inputs()) {
            return Err(NnError::ParamShape);
        }
        if layers.iter().any(|l| l.bias.len() != l.outputs()) {
            return Err(NnError::ParamShape);
        }
        Ok(Self { layers, output, version: fresh_version() })
    }

    /// Uniform initialisation in `+-1/sqrt(fan_in)`, with the last layer
    /// multiplied by `last_scale`.
    pub fn new(sizes: &[usize], output: Activation, last_scale: f64, rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "an mlp needs at least input and output sizes");
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                let scale = if i + 1 == n { last_scale } else { 1.0 };
                let mut init = || rng.random_range(-bound..=bound) * scale;
                let weight = Array2::from_shape_simple_fn((w[1], w[0]), &mut init);
                let bias = Array1::from_shape_simple_fn(w[1], &mut init);
                Dense { weight, bias }
            })
            .collect();
        Self { layers, output, version: fresh_version() }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Mutable access to the parameters. Invalidates outstanding caches.
    pub fn layers_mut(&mut self) -> &mut [Dense] {
        self.version = fresh_version();
        &mut self.layers
    }

    pub fn output_activation(&self) -> Activation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    fn activation(&self, i: usize) -> Activation {
        if i + 1 == self.layers.len() {
            self.output
        } else {
            Activation::Relu
        }
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<(), NnError> {
        if x.ncols() != self.input_dim() {
            return Err(NnError::InputShape { expected: self.input_dim(), got: x.ncols() });
        }
        Ok(())
    }

    /// Forward a batch (one row per sample) without keeping intermediates.
    pub fn predict(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        self.check_input(&x)?;
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight.t());
            z += &layer.bias;
            self.activation(i).apply(&mut z);
            h = z;
        }
        Ok(h)
    }

    /// Forward a batch and keep what [`Mlp::backward`] needs.
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Cache), NnError> {
        self.check_input(&x)?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = h.dot(&layer.weight.t());
            z += &layer.bias;
            let mut a = z.clone();
            self.activation(i).apply(&mut a);
            inputs.push(h);
            pre.push(z);
            h = a;
        }
        let cache = Cache { version: self.version, inputs, pre, output: h.clone() };
        Ok((h, cache))
    }

    /// Single-sample forward.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, Cache), NnError> {
        let view = ArrayView2::from_shape((1, x.len()), x).expect("row view");
        let (out, cache) = self.forward_batch(view)?;
        Ok((out.into_raw_vec_and_offset().0, cache))
    }

    fn backprop(
        &self,
        cache: &Cache,
        output_grad: ArrayView2<f64>,
        mut param_grads: Option<&mut Vec<Dense>>,
    ) -> Result<Array2<f64>, NnError> {
        if cache.version != self.version {
            return Err(NnError::StaleCache);
        }
        if output_grad.dim() != cache.output.dim() {
            return Err(NnError::GradShape { expected: cache.output.dim(), got: output_grad.dim() });
        }
        let mut grad = output_grad.to_owned();
        for i in (0..self.layers.len()).rev() {
            let post = if i + 1 == self.layers.len() { &cache.output } else { &cache.inputs[i + 1] };
            self.activation(i).backprop(&mut grad, &cache.pre[i], post);
            if let Some(out) = param_grads.as_deref_mut() {
                out[i].weight = grad.t().dot(&cache.inputs[i]);
                out[i].bias = grad.sum_axis(Axis(0));
            }
            grad = grad.dot(&self.layers[i].weight);
        }
        Ok(grad)
    }

    /// Reverse-mode gradients of `sum(output * output_grad)` with respect to
    /// every parameter and to the input batch.
    pub fn backward(
        &self,
        cache: &Cache,
        output_grad: ArrayView2<f64>,
    ) -> Result<(Gradients, Array2<f64>), NnError> {
        let mut layers: Vec<Dense> = self
            .layers
            .iter()
            .map(|l| Dense::zeros(l.inputs(), l.outputs()))
            .collect();
        let input_grad = self.backprop(cache, output_grad, Some(&mut layers))?;
        Ok((Gradients { layers }, input_grad))
    }

    /// Like [`Mlp::backward`] but only the input gradient is formed.
    pub fn input_gradient(&self, cache: &Cache, output_grad: ArrayView2<f64>) -> Result<Array2<f64>, NnError> {
        self.backprop(cache, output_grad, None)
    }

    /// `self <- tau * source + (1 - tau) * self`.
    pub fn polyak_from(&mut self, source: &Mlp, tau: f64) -> Result<(), NnError> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(NnError::Tau(tau));
        }
        if self.layers.len() != source.layers.len()
            || self.layers.iter().zip(&source.layers).any(|(a, b)| !a.same_shape(b))
        {
            return Err(NnError::ParamShape);
        }
        for (t, s) in self.layers_mut().iter_mut().zip(&source.layers) {
            Zip::from(&mut t.weight).and(&s.weight).for_each(|t, &s| *t = tau * s + (1.0 - tau) * *t);
            Zip::from(&mut t.bias).and(&s.bias).for_each(|t, &s| *t = tau * s + (1.0 - tau) * *t);
        }
        Ok(())
    }

    pub(crate) fn check_grads(&self, grads: &Gradients) -> Result<(), NnError> {
        if grads.layers.len() != self.layers.len()
            || grads.layers.iter().zip(&self.layers).any(|(g, l)| !g.same_shape(l))
        {
            return Err(NnError::ParamShape);
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Euclidean distance between two networks' flattened parameters.
    pub fn distance(&self, other: &Mlp) -> f64 {
        self.layers
            .iter()
            .zip(&other.layers)
            .map(|(a, b)| {
                let w: f64 = a.weight.iter().zip(b.weight.iter()).map(|(x, y)| (x - y).powi(2)).sum();
                let c: f64 = a.bias.iter().zip(b.bias.iter()).map(|(x, y)| (x - y).powi(2)).sum();
                w + c
            })
            .sum::<f64>()
            .sqrt()
    }
}
