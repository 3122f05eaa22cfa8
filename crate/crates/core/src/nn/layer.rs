use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

/// Variance offset inside the layer-norm square root.
pub const LAYER_NORM_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    /// Row-wise softmax; only valid on the last layer.
    Softmax,
}

impl Activation {
    pub(crate) fn code(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Tanh => 1,
            Activation::Sigmoid => 2,
            Activation::Softmax => 3,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => Activation::Identity,
            1 => Activation::Tanh,
            2 => Activation::Sigmoid,
            3 => Activation::Softmax,
            _ => return None,
        })
    }

    fn apply<F: Scalar>(self, h: &mut Array2<F>) {
        match self {
            Activation::Identity => {}
            Activation::Tanh => h.mapv_inplace(F::tanh),
            Activation::Sigmoid => h.mapv_inplace(sigmoid),
            Activation::Softmax => {
                for mut row in h.axis_iter_mut(Axis(0)) {
                    let max = row.fold(F::neg_infinity(), |m, &x| m.max(x));
                    row.mapv_inplace(|x| (x - max).exp());
                    let total = row.sum();
                    row.mapv_inplace(|x| x / total);
                }
            }
        }
    }

    /// Gradient w.r.t. the pre-activation given the activation output.
    fn backprop<F: Scalar>(self, output: &Array2<F>, d_output: &Array2<F>) -> Array2<F> {
        match self {
            Activation::Identity => d_output.clone(),
            Activation::Tanh => Zip::from(output)
                .and(d_output)
                .map_collect(|&y, &g| g * (F::one() - y * y)),
            Activation::Sigmoid => Zip::from(output)
                .and(d_output)
                .map_collect(|&y, &g| g * y * (F::one() - y)),
            Activation::Softmax => {
                let mut d = Array2::zeros(output.raw_dim());
                for ((mut d_row, y), g) in d
                    .axis_iter_mut(Axis(0))
                    .zip(output.axis_iter(Axis(0)))
                    .zip(d_output.axis_iter(Axis(0)))
                {
                    let inner = y.dot(&g);
                    Zip::from(&mut d_row)
                        .and(&y)
                        .and(&g)
                        .for_each(|d, &y, &g| *d = y * (g - inner));
                }
                d
            }
        }
    }
}

fn sigmoid<F: Scalar>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Learned per-unit gain and shift applied after normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerNorm<F> {
    pub gain: Array1<F>,
    pub shift: Array1<F>,
}

impl<F: Scalar> LayerNorm<F> {
    /// Gain 1, shift 0.
    pub fn identity(dim: usize) -> Self {
        LayerNorm {
            gain: Array1::ones(dim),
            shift: Array1::zeros(dim),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<F> {
    /// `out x in`
    pub weights: Array2<F>,
    pub bias: Array1<F>,
    pub activation: Activation,
    pub layer_norm: Option<LayerNorm<F>>,
}

/// Shape of one layer for [`Network::init`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpec {
    pub units: usize,
    pub activation: Activation,
    pub layer_norm: bool,
}

impl LayerSpec {
    pub const fn new(units: usize, activation: Activation) -> Self {
        LayerSpec {
            units,
            activation,
            layer_norm: false,
        }
    }

    pub const fn normalized(units: usize, activation: Activation) -> Self {
        LayerSpec {
            units,
            activation,
            layer_norm: true,
        }
    }
}

impl<F: Scalar> DenseLayer<F> {
    pub fn new(
        weights: Array2<F>,
        bias: Array1<F>,
        activation: Activation,
        layer_norm: Option<LayerNorm<F>>,
    ) -> Result<Self> {
        let out = weights.nrows();
        if bias.len() != out {
            return Err(Error::dim("layer bias", out, bias.len()));
        }
        if let Some(ln) = &layer_norm {
            if ln.gain.len() != out || ln.shift.len() != out {
                return Err(Error::dim("layer-norm parameters", out, ln.gain.len().min(ln.shift.len())));
            }
        }
        // Keep every parameter tensor contiguous so optimizers can treat
        // them as flat slices.
        let layer = DenseLayer {
            weights: weights.as_standard_layout().into_owned(),
            bias,
            activation,
            layer_norm,
        };
        if layer.params().any(|p| p.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("layer parameters".into()));
        }
        Ok(layer)
    }

    /// Uniform `±sqrt(6 / (in + out))` weights, zero bias, identity layer norm.
    pub fn init<R: Rng + ?Sized>(inputs: usize, spec: LayerSpec, rng: &mut R) -> Self {
        let limit = (6.0 / (inputs + spec.units) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((spec.units, inputs), || {
            F::lit(rng.random_range(-limit..=limit))
        });
        DenseLayer {
            weights,
            bias: Array1::zeros(spec.units),
            activation: spec.activation,
            layer_norm: spec.layer_norm.then(|| LayerNorm::identity(spec.units)),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    fn params(&self) -> impl Iterator<Item = &[F]> {
        let ln = self
            .layer_norm
            .iter()
            .flat_map(|ln| [&ln.gain, &ln.shift]);
        [self.weights.as_slice().expect("contiguous weights")]
            .into_iter()
            .chain(std::iter::once(self.bias.as_slice().expect("contiguous bias")))
            .chain(ln.map(|a| a.as_slice().expect("contiguous layer norm")))
    }

    fn params_mut(&mut self) -> Vec<&mut [F]> {
        let mut out = vec![
            self.weights.as_slice_mut().expect("contiguous weights"),
            self.bias.as_slice_mut().expect("contiguous bias"),
        ];
        if let Some(ln) = &mut self.layer_norm {
            out.push(ln.gain.as_slice_mut().expect("contiguous gain"));
            out.push(ln.shift.as_slice_mut().expect("contiguous shift"));
        }
        out
    }

    fn forward(&self, input: Array2<F>) -> LayerCache<F> {
        let mut h = input.dot(&self.weights.t()) + &self.bias;
        let mut normalized = None;
        let mut inv_std = None;
        if let Some(ln) = &self.layer_norm {
            let eps = F::lit(LAYER_NORM_EPS);
            let units = F::from_usize(h.ncols()).expect("unit count");
            let mut inv = Array1::zeros(h.nrows());
            for (mut row, s) in h.axis_iter_mut(Axis(0)).zip(inv.iter_mut()) {
                let mean = row.sum() / units;
                row.mapv_inplace(|x| x - mean);
                let var = row.fold(F::zero(), |acc, &x| acc + x * x) / units;
                *s = F::one() / (var + eps).sqrt();
                let scale = *s;
                row.mapv_inplace(|x| x * scale);
            }
            let xhat = h.clone();
            h = &xhat * &ln.gain + &ln.shift;
            normalized = Some(xhat);
            inv_std = Some(inv);
        }
        self.activation.apply(&mut h);
        LayerCache {
            input,
            normalized,
            inv_std,
            output: h,
        }
    }

    /// Backpropagates from the gradient w.r.t. the pre-activation.
    fn backward(&self, cache: &LayerCache<F>, d_pre: Array2<F>) -> (LayerGradients<F>, Array2<F>) {
        let (d_affine, ln_grads) = match (&self.layer_norm, &cache.normalized, &cache.inv_std) {
            (Some(ln), Some(xhat), Some(inv_std)) => {
                let d_gain = (&d_pre * xhat).sum_axis(Axis(0));
                let d_shift = d_pre.sum_axis(Axis(0));
                let d_xhat = &d_pre * &ln.gain;
                let units = F::from_usize(d_xhat.ncols()).expect("unit count");
                let mut d_affine = Array2::zeros(d_xhat.raw_dim());
                for (((mut out, dx), x), &s) in d_affine
                    .axis_iter_mut(Axis(0))
                    .zip(d_xhat.axis_iter(Axis(0)))
                    .zip(xhat.axis_iter(Axis(0)))
                    .zip(inv_std.iter())
                {
                    let mean_dx = dx.sum() / units;
                    let mean_dx_x = dx.dot(&x) / units;
                    Zip::from(&mut out)
                        .and(&dx)
                        .and(&x)
                        .for_each(|o, &g, &xh| *o = s * (g - mean_dx - xh * mean_dx_x));
                }
                (
                    d_affine,
                    Some(LayerNorm {
                        gain: d_gain,
                        shift: d_shift,
                    }),
                )
            }
            _ => (d_pre, None),
        };
        let grads = LayerGradients {
            weights: d_affine.t().dot(&cache.input),
            bias: d_affine.sum_axis(Axis(0)),
            layer_norm: ln_grads,
        };
        let d_input = d_affine.dot(&self.weights);
        (grads, d_input)
    }
}

#[derive(Clone, Debug)]
struct LayerCache<F> {
    input: Array2<F>,
    normalized: Option<Array2<F>>,
    inv_std: Option<Array1<F>>,
    output: Array2<F>,
}

/// Intermediate activations of one batched forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache<F> {
    layers: Vec<LayerCache<F>>,
}

impl<F: Scalar> ForwardCache<F> {
    pub fn output(&self) -> &Array2<F> {
        &self.layers.last().expect("non-empty network").output
    }

    pub fn into_output(mut self) -> Array2<F> {
        self.layers.pop().expect("non-empty network").output
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients<F> {
    pub weights: Array2<F>,
    pub bias: Array1<F>,
    /// Gradients of the gain and shift, when the layer is normalized.
    pub layer_norm: Option<LayerNorm<F>>,
}

impl<F: Scalar> LayerGradients<F> {
    fn tensors(&self) -> impl Iterator<Item = &[F]> {
        let ln = self.layer_norm.iter().flat_map(|ln| [&ln.gain, &ln.shift]);
        std::iter::once(self.weights.as_slice().expect("contiguous"))
            .chain(std::iter::once(self.bias.as_slice().expect("contiguous")))
            .chain(ln.map(|a| a.as_slice().expect("contiguous")))
    }
}

/// Parameter gradients of a whole network plus the input gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<F> {
    pub layers: Vec<LayerGradients<F>>,
    pub input: Array2<F>,
}

impl<F: Scalar> Gradients<F> {
    /// Parameter gradient tensors in the order of [`Network::flat_params`].
    pub fn tensors(&self) -> impl Iterator<Item = &[F]> {
        self.layers.iter().flat_map(LayerGradients::tensors)
    }

    pub fn flatten(&self) -> Vec<F> {
        self.tensors().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

/// An ordered stack of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<F> {
    layers: Vec<DenseLayer<F>>,
}

impl<F: Scalar> Network<F> {
    pub fn new(layers: Vec<DenseLayer<F>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::dim("adjacent layers", pair[0].out_dim(), pair[1].in_dim()));
            }
        }
        let last = layers.len() - 1;
        if layers[..last]
            .iter()
            .any(|l| l.activation == Activation::Softmax)
        {
            return Err(Error::Config("softmax is only allowed on the last layer".into()));
        }
        Ok(Network { layers })
    }

    /// Randomly initialized network with the given layer stack.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, specs: &[LayerSpec], rng: &mut R) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        let mut inputs = input_dim;
        for spec in specs {
            layers.push(DenseLayer::init(inputs, *spec, rng));
            inputs = spec.units;
        }
        Network::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer<F>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(<[F]>::len)
            .sum()
    }

    /// All parameters, layer by layer: weights (row-major), bias, then gain
    /// and shift when present.
    pub fn flat_params(&self) -> Vec<F> {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .flat_map(|p| p.iter().copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, values: &[F]) -> Result<()> {
        let expected = self.num_params();
        if values.len() != expected {
            return Err(Error::dim("flat parameters", expected, values.len()));
        }
        let mut offset = 0;
        for tensor in self.params_mut() {
            let n = tensor.len();
            tensor.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> Vec<&mut [F]> {
        self.layers
            .iter_mut()
            .flat_map(DenseLayer::params_mut)
            .collect()
    }

    fn check_input(&self, rows: ArrayView2<'_, F>) -> Result<()> {
        if rows.ncols() != self.input_dim() {
            return Err(Error::dim("network input", self.input_dim(), rows.ncols()));
        }
        if rows.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    /// Forward pass of a single input vector.
    pub fn forward(&self, input: &[F]) -> Result<(Vec<F>, ForwardCache<F>)> {
        let row = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        let cache = self.forward_batch(row)?;
        let output = cache.output().row(0).to_vec();
        Ok((output, cache))
    }

    /// Forward pass of a batch of row vectors, keeping what backward needs.
    pub fn forward_batch(&self, input: ArrayView2<'_, F>) -> Result<ForwardCache<F>> {
        self.check_input(input)?;
        let mut caches: Vec<LayerCache<F>> = Vec::with_capacity(self.layers.len());
        let mut x = input.to_owned();
        for layer in &self.layers {
            let cache = layer.forward(x);
            x = cache.output.clone();
            caches.push(cache);
        }
        Ok(ForwardCache { layers: caches })
    }

    /// Batch outputs without retaining a cache.
    pub fn predict(&self, input: ArrayView2<'_, F>) -> Result<Array2<F>> {
        self.check_input(input)?;
        let mut x = input.to_owned();
        for layer in &self.layers {
            x = layer.forward(x).output;
        }
        Ok(x)
    }

    /// Gradients from `d_output`, the loss gradient w.r.t. the network output.
    pub fn backward(&self, cache: &ForwardCache<F>, d_output: &Array2<F>) -> Result<Gradients<F>> {
        self.check_cache(cache, d_output)?;
        let last = self.layers.len() - 1;
        let d_pre = self.layers[last]
            .activation
            .backprop(&cache.layers[last].output, d_output);
        Ok(self.backward_from(cache, d_pre))
    }

    /// Gradients from the loss gradient w.r.t. the last layer's
    /// pre-activation (e.g. `p - onehot` for softmax with cross-entropy).
    pub fn backward_from_logits(&self, cache: &ForwardCache<F>, d_logits: &Array2<F>) -> Result<Gradients<F>> {
        self.check_cache(cache, d_logits)?;
        Ok(self.backward_from(cache, d_logits.clone()))
    }

    fn check_cache(&self, cache: &ForwardCache<F>, d: &Array2<F>) -> Result<()> {
        if cache.layers.len() != self.layers.len() {
            return Err(Error::dim("forward cache layers", self.layers.len(), cache.layers.len()));
        }
        for (layer, c) in self.layers.iter().zip(&cache.layers) {
            if c.output.ncols() != layer.out_dim() || c.input.ncols() != layer.in_dim() {
                return Err(Error::dim("forward cache", layer.out_dim(), c.output.ncols()));
            }
        }
        if d.dim() != cache.output().dim() {
            return Err(Error::dim("output gradient", cache.output().len(), d.len()));
        }
        Ok(())
    }

    fn backward_from(&self, cache: &ForwardCache<F>, mut d_pre: Array2<F>) -> Gradients<F> {
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut d_input = None;
        for (i, (layer, c)) in self.layers.iter().zip(&cache.layers).enumerate().rev() {
            let (g, d_in) = layer.backward(c, d_pre);
            grads.push(g);
            if i == 0 {
                d_input = Some(d_in);
                break;
            }
            let below = &self.layers[i - 1];
            d_pre = below.activation.backprop(&cache.layers[i - 1].output, &d_in);
        }
        grads.reverse();
        Gradients {
            layers: grads,
            input: d_input.expect("at least one layer"),
        }
    }
}
