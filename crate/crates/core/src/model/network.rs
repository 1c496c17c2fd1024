use rand::{RngCore, SeedableRng};

use super::config::{shape_trace, Activation, FeatureShape, LayerSpec, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::{
    conv2d, conv2d_backward, dropout, dropout_backward, elu, elu_backward, linear, linear_backward, maxpool2d,
    maxpool2d_backward, mfm, mfm_backward, relu, relu_backward, xavier_init, DropoutMask, MfmWinners, PoolIndices, Rng,
    Tensor,
};
use crate::scalar::Real;

/// Where a layer's parameters live in [`Network::params`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slots {
    weight: usize,
    bias: Option<usize>,
}

/// An instantiated [`ModelConfig`] with named parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<F> {
    config: ModelConfig,
    seed: u64,
    names: Vec<String>,
    params: Vec<Tensor<F>>,
    slots: Vec<Option<Slots>>,
}

enum Cache<F> {
    Conv { input: Tensor<F> },
    Pool(PoolIndices),
    Mfm(MfmWinners),
    Relu { input: Tensor<F> },
    Elu { input: Tensor<F>, alpha: F },
    Identity,
    Flatten { shape: Vec<usize> },
    Dropout(DropoutMask<F>),
    Linear { input: Tensor<F> },
}

/// Per-layer state saved by a forward pass for the matching backward pass.
pub struct ForwardTrace<F> {
    caches: Vec<Cache<F>>,
}

impl<F: Real> Network<F> {
    /// Xavier-uniform weights and zero biases drawn from `seed`.
    pub fn build(config: ModelConfig, seed: u64) -> Result<Self> {
        let rows = shape_trace(&config)?;
        let mut rng = Rng::seed_from_u64(seed);
        let mut names = Vec::new();
        let mut params = Vec::new();
        let mut slots = Vec::with_capacity(config.layers.len());
        let (mut n_conv, mut n_fc) = (0, 0);
        let mut shape = config.input_feature_shape();
        for (layer, row) in config.layers.iter().zip(&rows) {
            let (prefix, weight_shape, bias) = match (layer, shape) {
                (LayerSpec::Conv { filters, kernel, bias, .. }, FeatureShape::Map { channels, .. }) => {
                    n_conv += 1;
                    (format!("conv{n_conv}"), vec![*filters, channels, kernel.0, kernel.1], bias.then_some(*filters))
                }
                (LayerSpec::Linear { width, bias }, FeatureShape::Flat(d)) => {
                    n_fc += 1;
                    (format!("fc{n_fc}"), vec![d, *width], bias.then_some(*width))
                }
                _ => {
                    slots.push(None);
                    shape = row.output;
                    continue;
                }
            };
            let weight = params.len();
            names.push(format!("{prefix}.weight"));
            params.push(xavier_init(&weight_shape, &mut rng)?);
            let bias = bias.map(|b| {
                names.push(format!("{prefix}.bias"));
                params.push(Tensor::zeros(&[b]));
                params.len() - 1
            });
            slots.push(Some(Slots { weight, bias }));
            shape = row.output;
        }
        Ok(Network { config, seed, names, params, slots })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn params(&self) -> &[Tensor<F>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor<F>] {
        &mut self.params
    }

    pub fn param(&self, name: &str) -> Option<&Tensor<F>> {
        self.names.iter().position(|n| n == name).map(|i| &self.params[i])
    }

    pub fn param_mut(&mut self, name: &str) -> Option<&mut Tensor<F>> {
        self.names.iter().position(|n| n == name).map(move |i| &mut self.params[i])
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(Tensor::numel).sum()
    }

    /// Replaces all parameter values, checking names and shapes.
    pub fn load_params(&mut self, names: &[String], params: Vec<Tensor<F>>) -> Result<()> {
        if names != self.names.as_slice() || params.len() != self.params.len() {
            return Err(Error::shape(format!("checkpoint parameters {names:?} do not match network {:?}", self.names)));
        }
        for (i, p) in params.iter().enumerate() {
            if !p.same_shape(&self.params[i]) {
                return Err(Error::shape(format!(
                    "{}: checkpoint shape {:?}, network {:?}",
                    self.names[i],
                    p.shape(),
                    self.params[i].shape()
                )));
            }
        }
        self.params = params;
        Ok(())
    }

    fn check_input(&self, batch: &Tensor<F>) -> Result<()> {
        let [c, t, f] = self.config.input_shape;
        match batch.shape() {
            [_, bc, bt, bf] if [*bc, *bt, *bf] == [c, t, f] => Ok(()),
            s => Err(Error::shape(format!("batch {s:?} does not match input [N, {c}, {t}, {f}]"))),
        }
    }

    /// Runs the layers in order. `rng` drives dropout and is only drawn from
    /// when `training` is set.
    pub fn forward<R: RngCore>(&self, batch: &Tensor<F>, training: bool, rng: &mut R) -> Result<Tensor<F>> {
        let rng: Option<&mut dyn RngCore> = if training { Some(rng) } else { None };
        self.run(batch, rng, None)
    }

    /// Inference-mode forward pass.
    pub fn infer(&self, batch: &Tensor<F>) -> Result<Tensor<F>> {
        self.run(batch, None, None)
    }

    /// Forward pass that keeps what [`Network::backward`] needs.
    pub fn forward_traced(
        &self,
        batch: &Tensor<F>,
        rng: Option<&mut dyn RngCore>,
    ) -> Result<(Tensor<F>, ForwardTrace<F>)> {
        let mut caches = Vec::with_capacity(self.config.layers.len());
        let out = self.run(batch, rng, Some(&mut caches))?;
        Ok((out, ForwardTrace { caches }))
    }

    /// Inference-mode output of the first linear layer, the embedding used
    /// by the Gaussian back-end.
    pub fn embed(&self, batch: &Tensor<F>) -> Result<Tensor<F>> {
        let first_linear = self
            .config
            .layers
            .iter()
            .position(|l| matches!(l, LayerSpec::Linear { .. }))
            .ok_or_else(|| Error::config("network has no linear layer to tap"))?;
        self.run_until(batch, None, None, first_linear + 1)
    }

    fn run(
        &self,
        batch: &Tensor<F>,
        rng: Option<&mut dyn RngCore>,
        caches: Option<&mut Vec<Cache<F>>>,
    ) -> Result<Tensor<F>> {
        let out = self.run_until(batch, rng, caches, self.config.layers.len())?;
        out.ensure_finite("logits")?;
        Ok(out)
    }

    fn run_until(
        &self,
        batch: &Tensor<F>,
        mut rng: Option<&mut dyn RngCore>,
        mut caches: Option<&mut Vec<Cache<F>>>,
        stop: usize,
    ) -> Result<Tensor<F>> {
        self.check_input(batch)?;
        let keep = caches.is_some();
        let mut x = batch.clone();
        for (i, layer) in self.config.layers.iter().enumerate().take(stop) {
            let slots = self.slots[i];
            let (y, cache) = match layer {
                LayerSpec::Conv { padding, .. } => {
                    let s = slots.expect("conv has parameters");
                    let bias = s.bias.map(|b| &self.params[b]);
                    let y = conv2d(&x, &self.params[s.weight], bias, *padding)?;
                    (y, Cache::Conv { input: x })
                }
                LayerSpec::Pool(spec) => {
                    let (y, idx) = maxpool2d(&x, spec)?;
                    (y, Cache::Pool(idx))
                }
                LayerSpec::Activation(Activation::Mfm) => {
                    let (y, w) = mfm(&x)?;
                    (y, Cache::Mfm(w))
                }
                LayerSpec::Activation(Activation::Relu) => (relu(&x), Cache::Relu { input: x }),
                LayerSpec::Activation(Activation::Elu { alpha }) => {
                    let alpha = F::of(*alpha);
                    (elu(&x, alpha), Cache::Elu { input: x, alpha })
                }
                LayerSpec::Activation(Activation::Identity) => (x, Cache::Identity),
                LayerSpec::Flatten => {
                    let shape = x.shape().to_vec();
                    let n = shape[0];
                    let d = x.numel() / n;
                    (x.reshape(&[n, d])?, Cache::Flatten { shape })
                }
                LayerSpec::Dropout { rate } => match rng.as_deref_mut() {
                    Some(mut r) => {
                        let (y, mask) = dropout(&x, *rate, &mut r, true)?;
                        (y, Cache::Dropout(mask))
                    }
                    None => (x, Cache::Identity),
                },
                LayerSpec::Linear { .. } => {
                    let s = slots.expect("linear has parameters");
                    let bias = s.bias.map(|b| &self.params[b]);
                    let y = linear(&x, &self.params[s.weight], bias)?;
                    (y, Cache::Linear { input: x })
                }
            };
            if keep {
                caches.as_deref_mut().expect("keep implies caches").push(cache);
            }
            x = y;
        }
        Ok(x)
    }

    /// Back-propagates `grad_out` (gradient of the loss w.r.t. the logits)
    /// and returns one gradient per parameter plus the input gradient.
    pub fn backward(&self, trace: ForwardTrace<F>, grad_out: &Tensor<F>) -> Result<(Vec<Tensor<F>>, Tensor<F>)> {
        if trace.caches.len() != self.config.layers.len() {
            return Err(Error::shape("forward trace does not cover every layer"));
        }
        let mut grads: Vec<Tensor<F>> = self.params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        let mut g = grad_out.clone();
        for (i, cache) in trace.caches.into_iter().enumerate().rev() {
            g = match cache {
                Cache::Conv { input } => {
                    let s = self.slots[i].expect("conv slots");
                    let padding = match &self.config.layers[i] {
                        LayerSpec::Conv { padding, .. } => *padding,
                        _ => unreachable!("cache kind follows layer kind"),
                    };
                    let cg = conv2d_backward(&input, &self.params[s.weight], padding, &g)?;
                    grads[s.weight] = cg.weight;
                    if let Some(b) = s.bias {
                        grads[b] = cg.bias;
                    }
                    cg.input
                }
                Cache::Pool(idx) => maxpool2d_backward(&g, &idx)?,
                Cache::Mfm(w) => mfm_backward(&g, &w)?,
                Cache::Relu { input } => relu_backward(&input, &g),
                Cache::Elu { input, alpha } => elu_backward(&input, alpha, &g),
                Cache::Identity => g,
                Cache::Flatten { shape } => g.reshape(&shape)?,
                Cache::Dropout(mask) => dropout_backward(&g, &mask),
                Cache::Linear { input } => {
                    let s = self.slots[i].expect("linear slots");
                    let lg = linear_backward(&input, &self.params[s.weight], &g)?;
                    grads[s.weight] = lg.weight;
                    if let Some(b) = s.bias {
                        grads[b] = lg.bias;
                    }
                    lg.input
                }
            };
        }
        Ok((grads, g))
    }

    /// Stores `grads` in each parameter's `grad` slot.
    pub fn set_grads(&mut self, grads: Vec<Tensor<F>>) -> Result<()> {
        if grads.len() != self.params.len() {
            return Err(Error::shape("one gradient per parameter expected"));
        }
        for (p, g) in self.params.iter_mut().zip(grads) {
            if !p.same_shape(&g) {
                return Err(Error::shape("gradient shape mismatch"));
            }
            p.grad = Some(g.into_data());
        }
        Ok(())
    }
}
