//! One-layer text CNN: embedding lookup, convolution over token windows,
//! max-pooling per feature map and a linear classifier.
//!
//! Gradients are derived by hand. The max-pool routes gradient only to the
//! window that attained the maximum (first window on ties).

mod checkpoint;
mod config;

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use crate::data::UNK;
use crate::error::{Error, Result};
use crate::numerics::{argmax, Matrix, Rng};

pub use checkpoint::{fingerprint, load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, CHECKPOINT_VERSION};
pub use config::ModelConfig;

const INIT_RANGE: f64 = 0.05;

/// Filters of one kernel width. `weights` is `m × (t·d)`, each row laid
/// out as the concatenation of `t` embedding-sized slices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub kernel: usize,
    pub weights: Matrix,
    pub bias: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub embeddings: Matrix,
    pub convs: Vec<ConvLayer>,
    pub linear_weights: Matrix,
    pub linear_bias: Matrix,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.embed_dim;
        let m = config.filters_per_kernel;
        Self {
            embeddings: Matrix::zeros(config.vocab_size, d),
            convs: config
                .kernel_sizes
                .iter()
                .map(|&t| ConvLayer {
                    kernel: t,
                    weights: Matrix::zeros(m, t * d),
                    bias: Matrix::zeros(1, m),
                })
                .collect(),
            linear_weights: Matrix::zeros(config.num_classes, config.feature_maps()),
            linear_bias: Matrix::zeros(1, config.num_classes),
        }
    }

    /// Uniform(-0.05, 0.05) weights and zero biases.
    pub fn init(config: &ModelConfig, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(config);
        let mut fill = |m: &mut Matrix| {
            for v in m.as_mut_slice() {
                *v = rng.uniform(-INIT_RANGE, INIT_RANGE);
            }
        };
        fill(&mut p.embeddings);
        for c in &mut p.convs {
            fill(&mut c.weights);
        }
        fill(&mut p.linear_weights);
        p
    }

    /// Every trainable tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&Matrix> {
        let mut v = vec![&self.embeddings];
        for c in &self.convs {
            v.push(&c.weights);
            v.push(&c.bias);
        }
        v.push(&self.linear_weights);
        v.push(&self.linear_bias);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        let mut v = vec![&mut self.embeddings];
        for c in &mut self.convs {
            v.push(&mut c.weights);
            v.push(&mut c.bias);
        }
        v.push(&mut self.linear_weights);
        v.push(&mut self.linear_bias);
        v
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    pub(crate) fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let want = ModelParams::zeros(config);
        if self.convs.len() != want.convs.len()
            || self.convs.iter().zip(&want.convs).any(|(a, b)| a.kernel != b.kernel)
        {
            return Err(Error::Config("kernel sizes differ from config".into()));
        }
        for (a, b) in self.tensors().iter().zip(want.tensors()) {
            if a.shape() != b.shape() {
                return Err(Error::Shape {
                    op: "model parameters",
                    left: a.shape(),
                    right: b.shape(),
                });
            }
        }
        Ok(())
    }
}

/// Everything the forward pass computes for one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForwardTrace {
    /// Per kernel size, `windows × m` activations `f(W·x + b)`.
    pub conv_values: Vec<Matrix>,
    /// Per feature map (kernel-major), the window that attained the max.
    pub pool_argmax: Vec<usize>,
    pub pooled: Vec<f64>,
    pub logits: Vec<f64>,
}

impl ForwardTrace {
    pub fn predicted(&self) -> usize {
        argmax(&self.logits)
    }
}

/// Gradients of everything except the embedding table; embedding gradients
/// come back per input position and are scattered by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGrads {
    pub conv_weights: Vec<Matrix>,
    pub conv_bias: Vec<Matrix>,
    pub linear_weights: Matrix,
    pub linear_bias: Matrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Backward {
    pub params: ParamGrads,
    /// `n × d`, gradient with respect to each input embedding row.
    pub inputs: Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, params: ModelParams) -> Result<Self> {
        config.validate()?;
        params.check_shapes(&config)?;
        Ok(Self { config, params })
    }

    pub fn init(config: ModelConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::init(&config, rng);
        Ok(Self { config, params })
    }

    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let params = ModelParams::zeros(&config);
        Ok(Self { config, params })
    }

    /// Pads inputs shorter than the widest kernel with UNK.
    pub fn prepare<'a>(&self, tokens: &'a [usize]) -> Cow<'a, [usize]> {
        let need = self.config.max_kernel();
        if tokens.len() >= need {
            Cow::Borrowed(tokens)
        } else {
            let mut v = tokens.to_vec();
            v.resize(need, UNK);
            Cow::Owned(v)
        }
    }

    fn check_tokens(&self, tokens: &[usize]) -> Result<()> {
        if tokens.len() < self.config.max_kernel() {
            return Err(Error::Input(format!(
                "sentence of {} tokens is shorter than kernel size {}",
                tokens.len(),
                self.config.max_kernel()
            )));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.config.vocab_size) {
            return Err(Error::Input(format!(
                "token id {bad} outside vocabulary of {}",
                self.config.vocab_size
            )));
        }
        Ok(())
    }

    /// Forward pass with all intermediate values retained.
    pub fn forward(&self, tokens: &[usize]) -> Result<ForwardTrace> {
        self.check_tokens(tokens)?;
        Ok(self.forward_with(tokens, |id| self.params.embeddings.row(id)))
    }

    /// Forward pass on an explicit `n × d` input matrix instead of an
    /// embedding lookup. Used for gradient checks with respect to inputs.
    pub fn forward_embedded(&self, inputs: &Matrix) -> Result<ForwardTrace> {
        if inputs.cols() != self.config.embed_dim || inputs.rows() < self.config.max_kernel() {
            return Err(Error::Shape {
                op: "forward_embedded",
                left: inputs.shape(),
                right: (self.config.max_kernel(), self.config.embed_dim),
            });
        }
        let positions: Vec<usize> = (0..inputs.rows()).collect();
        Ok(self.forward_with(&positions, |i| inputs.row(i)))
    }

    fn forward_with<'a>(&self, ids: &[usize], row: impl Fn(usize) -> &'a [f64]) -> ForwardTrace {
        let cfg = &self.config;
        let (d, m) = (cfg.embed_dim, cfg.filters_per_kernel);
        let f = cfg.nonlinearity;
        let n = ids.len();

        let mut conv_values = Vec::with_capacity(self.params.convs.len());
        let mut pool_argmax = Vec::with_capacity(cfg.feature_maps());
        let mut pooled = Vec::with_capacity(cfg.feature_maps());
        let mut window = Vec::new();

        for conv in &self.params.convs {
            let t = conv.kernel;
            let nwin = cfg.windows(n, t);
            let mut values = Matrix::zeros(nwin, m);
            for w in 0..nwin {
                let start = w * cfg.stride;
                window.clear();
                for k in 0..t {
                    window.extend_from_slice(row(ids[start + k]));
                }
                debug_assert_eq!(window.len(), t * d);
                let out = values.row_mut(w);
                for (filter, o) in out.iter_mut().enumerate() {
                    let wrow = conv.weights.row(filter);
                    let mut acc = 0.0;
                    for (a, b) in wrow.iter().zip(&window) {
                        acc += a * b;
                    }
                    *o = f.apply(acc + conv.bias[(0, filter)]);
                }
            }
            for filter in 0..m {
                let mut best = 0;
                for w in 1..nwin {
                    if values[(w, filter)] > values[(best, filter)] {
                        best = w;
                    }
                }
                pool_argmax.push(best);
                pooled.push(values[(best, filter)]);
            }
            conv_values.push(values);
        }

        let logits = (0..cfg.num_classes)
            .map(|c| {
                let w = self.params.linear_weights.row(c);
                let mut acc = 0.0;
                for (a, b) in w.iter().zip(&pooled) {
                    acc += a * b;
                }
                acc + self.params.linear_bias[(0, c)]
            })
            .collect();

        ForwardTrace {
            conv_values,
            pool_argmax,
            pooled,
            logits,
        }
    }

    pub fn predict(&self, tokens: &[usize]) -> Result<usize> {
        Ok(self.forward(&self.prepare(tokens))?.predicted())
    }

    fn check_trace(&self, trace: &ForwardTrace, n: usize, grad_logits: &[f64]) -> Result<()> {
        let cfg = &self.config;
        let bad = |what: &str| Err(Error::Contract(format!("trace does not match input: {what}")));
        if trace.conv_values.len() != cfg.kernel_sizes.len() {
            return bad("kernel count");
        }
        for (vals, &t) in trace.conv_values.iter().zip(&cfg.kernel_sizes) {
            if vals.shape() != (cfg.windows(n, t), cfg.filters_per_kernel) {
                return bad("window count");
            }
        }
        if trace.pooled.len() != cfg.feature_maps() || trace.pool_argmax.len() != cfg.feature_maps() {
            return bad("feature map count");
        }
        if trace.logits.len() != cfg.num_classes || grad_logits.len() != cfg.num_classes {
            return bad("class count");
        }
        Ok(())
    }

    /// Backpropagates `grad_logits` (dL/dlogits) through the network.
    pub fn backward(&self, trace: &ForwardTrace, tokens: &[usize], grad_logits: &[f64]) -> Result<Backward> {
        self.check_tokens(tokens)?;
        self.check_trace(trace, tokens.len(), grad_logits)?;
        Ok(self.backward_with(trace, tokens.len(), grad_logits, |i| {
            self.params.embeddings.row(tokens[i])
        }))
    }

    /// Backward counterpart of [`Model::forward_embedded`].
    pub fn backward_embedded(&self, trace: &ForwardTrace, inputs: &Matrix, grad_logits: &[f64]) -> Result<Backward> {
        self.check_trace(trace, inputs.rows(), grad_logits)?;
        Ok(self.backward_with(trace, inputs.rows(), grad_logits, |i| inputs.row(i)))
    }

    fn backward_with<'a>(
        &self,
        trace: &ForwardTrace,
        n: usize,
        grad_logits: &[f64],
        row: impl Fn(usize) -> &'a [f64],
    ) -> Backward {
        let cfg = &self.config;
        let (d, m) = (cfg.embed_dim, cfg.filters_per_kernel);
        let f = cfg.nonlinearity;

        let mut linear_weights = Matrix::zeros(cfg.num_classes, cfg.feature_maps());
        let mut linear_bias = Matrix::zeros(1, cfg.num_classes);
        let mut grad_pooled = vec![0.0; cfg.feature_maps()];
        for (c, &g) in grad_logits.iter().enumerate() {
            linear_bias[(0, c)] = g;
            let wrow = self.params.linear_weights.row(c);
            let out = linear_weights.row_mut(c);
            for j in 0..cfg.feature_maps() {
                out[j] = g * trace.pooled[j];
                grad_pooled[j] += g * wrow[j];
            }
        }

        let mut inputs = Matrix::zeros(n, d);
        let mut conv_weights = Vec::with_capacity(self.params.convs.len());
        let mut conv_bias = Vec::with_capacity(self.params.convs.len());
        for (g, conv) in self.params.convs.iter().enumerate() {
            let t = conv.kernel;
            let mut gw = Matrix::zeros(m, t * d);
            let mut gb = Matrix::zeros(1, m);
            for filter in 0..m {
                let j = g * m + filter;
                let w = trace.pool_argmax[j];
                let y = trace.conv_values[g][(w, filter)];
                let g_pre = grad_pooled[j] * f.grad_from_output(y);
                if g_pre == 0.0 {
                    continue;
                }
                gb[(0, filter)] = g_pre;
                let start = w * cfg.stride;
                let wrow = conv.weights.row(filter);
                let grow = gw.row_mut(filter);
                for k in 0..t {
                    let x = row(start + k);
                    let seg = k * d..(k + 1) * d;
                    for (gv, xv) in grow[seg.clone()].iter_mut().zip(x) {
                        *gv += g_pre * xv;
                    }
                    for (iv, wv) in inputs.row_mut(start + k).iter_mut().zip(&wrow[seg]) {
                        *iv += g_pre * wv;
                    }
                }
            }
            conv_weights.push(gw);
            conv_bias.push(gb);
        }

        Backward {
            params: ParamGrads {
                conv_weights,
                conv_bias,
                linear_weights,
                linear_bias,
            },
            inputs,
        }
    }
}
