//! Helpers shared by the integration tests and the acceptance harness.
//!
//! The reference forward pass here is written against the raw parameter
//! buffers only, so it does not share code with the library's forward.

#![allow(dead_code)]

use std::path::PathBuf;

use convis::data::Example;
use convis::model::{Model, ModelConfig};
use convis::numerics::{Nonlinearity, Rng};
use convis::training::{example_gradient, GradBuffer};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// A small model with parameters drawn from U(-1, 1) and an input of
/// distinct tokens (so no two windows of width 1 coincide).
pub struct Instance {
    pub model: Model,
    pub tokens: Vec<usize>,
    pub label: usize,
}

/// Sizes: n ≤ 6, d ≤ 8, m ≤ 4, 2 to 5 classes, kernels from {1, 2, 3}.
pub fn random_instance(rng: &mut Rng) -> Instance {
    let n = 1 + rng.below(6);
    let d = 1 + rng.below(8);
    let m = 1 + rng.below(4);
    let k = 2 + rng.below(4);
    let vocab = n + 1 + rng.below(6);
    let mut kernels: Vec<usize> = (1..=n.min(3)).filter(|_| rng.below(2) == 0).collect();
    if kernels.is_empty() {
        kernels.push(1 + rng.below(n.min(3)));
    }
    let stride = if rng.below(4) == 0 { 2 } else { 1 };
    let nonlinearity = if rng.below(2) == 0 {
        Nonlinearity::Tanh
    } else {
        Nonlinearity::Relu
    };
    let cfg = ModelConfig {
        vocab_size: vocab,
        embed_dim: d,
        kernel_sizes: kernels,
        stride,
        filters_per_kernel: m,
        num_classes: k,
        nonlinearity,
    };
    let mut model = Model::zeros(cfg).unwrap();
    for t in model.params.tensors_mut() {
        for v in t.as_mut_slice() {
            *v = rng.uniform(-1.0, 1.0);
        }
    }
    let mut ids: Vec<usize> = (0..vocab).collect();
    rng.shuffle(&mut ids);
    ids.truncate(n);
    Instance {
        model,
        tokens: ids,
        label: rng.below(k),
    }
}

fn act(f: Nonlinearity, x: f64) -> f64 {
    match f {
        Nonlinearity::Tanh => x.tanh(),
        Nonlinearity::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
    }
}

/// Window pre-activations computed straight from the definition: for each
/// kernel width and filter, the list of `bias + w . window`.
pub fn naive_preactivations(model: &Model, tokens: &[usize]) -> Vec<Vec<f64>> {
    let cfg = &model.config;
    let d = cfg.embed_dim;
    let emb = model.params.embeddings.as_slice();
    let mut maps = Vec::new();
    for conv in &model.params.convs {
        let t = conv.kernel;
        let w = conv.weights.as_slice();
        let b = conv.bias.as_slice();
        for filter in 0..cfg.filters_per_kernel {
            let mut values = Vec::new();
            let mut start = 0;
            while start + t <= tokens.len() {
                let mut z = b[filter];
                for e in 0..d {
                    for k in 0..t {
                        z += w[filter * t * d + k * d + e] * emb[tokens[start + k] * d + e];
                    }
                }
                values.push(z);
                start += cfg.stride;
            }
            maps.push(values);
        }
    }
    maps
}

/// Feature maps: the pre-activations passed through the nonlinearity.
pub fn naive_feature_maps(model: &Model, tokens: &[usize]) -> Vec<Vec<f64>> {
    let f = model.config.nonlinearity;
    naive_preactivations(model, tokens)
        .into_iter()
        .map(|m| m.into_iter().map(|z| act(f, z)).collect())
        .collect()
}

/// Distance of an instance from the loss's non-differentiable points: the
/// smallest gap between the two largest activations of a feature map, and
/// for ReLU the smallest |pre-activation|. Maps whose maximum is a clipped
/// zero are flat there and do not count.
pub fn kink_margin(inst: &Instance) -> f64 {
    let relu = inst.model.config.nonlinearity == Nonlinearity::Relu;
    let pre = naive_preactivations(&inst.model, &inst.tokens);
    let mut margin = f64::INFINITY;
    for z in &pre {
        if relu {
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
        }
        let mut a: Vec<f64> = z.iter().map(|&v| act(inst.model.config.nonlinearity, v)).collect();
        a.sort_by(|x, y| y.total_cmp(x));
        if a.len() >= 2 && !(relu && a[0] == 0.0) {
            margin = margin.min(a[0] - a[1]);
        }
    }
    margin
}

/// A random instance at least `margin` away from any kink, so central
/// differences with a smaller step see a differentiable loss.
pub fn smooth_instance(rng: &mut Rng, margin: f64) -> Instance {
    loop {
        let inst = random_instance(rng);
        if kink_margin(&inst) > margin {
            return inst;
        }
    }
}

pub fn naive_logits(model: &Model, tokens: &[usize]) -> Vec<f64> {
    let pooled: Vec<f64> = naive_feature_maps(model, tokens)
        .iter()
        .map(|m| m.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let lw = model.params.linear_weights.as_slice();
    let lb = model.params.linear_bias.as_slice();
    (0..model.config.num_classes)
        .map(|c| lb[c] + (0..pooled.len()).map(|j| lw[c * pooled.len() + j] * pooled[j]).sum::<f64>())
        .collect()
}

fn log_softmax_at(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[label] - lse
}

/// Cross-entropy of the reference forward pass.
pub fn naive_loss(model: &Model, tokens: &[usize], label: usize) -> f64 {
    -log_softmax_at(&naive_logits(model, tokens), label)
}

/// Worst relative error between analytic and central-difference gradients
/// of the loss, over every parameter tensor. Index 0 is the embedding
/// table; the last two are the classifier weights and bias.
///
/// Central differences carry rounding noise of about `ε·|loss| / eps`; that
/// much of each discrepancy is attributed to the oracle, not the gradient.
pub fn loss_gradient_errors(inst: &Instance, eps: f64) -> Vec<f64> {
    let ex = Example {
        tokens: inst.tokens.clone(),
        text_tokens: vec![String::new(); inst.tokens.len()],
        label: inst.label,
        pos_tags: Vec::new(),
        source: convis::data::Source::SstSentence,
    };
    let (_, back, toks) = example_gradient(&inst.model, &ex).unwrap();
    let mut buf = GradBuffer::zeros_like(&inst.model.params);
    buf.accumulate(&back, &toks);
    let analytic = buf.tensors().to_vec();

    let loss = naive_loss(&inst.model, &inst.tokens, inst.label);
    let noise = 8.0 * f64::EPSILON * loss.abs().max(1.0) / eps;
    let mut probe = inst.model.clone();
    let mut errors = Vec::new();
    for (ti, grad) in analytic.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for idx in 0..grad.as_slice().len() {
            let orig = probe.params.tensors()[ti].as_slice()[idx];
            probe.params.tensors_mut()[ti].as_mut_slice()[idx] = orig + eps;
            let up = naive_loss(&probe, &inst.tokens, inst.label);
            probe.params.tensors_mut()[ti].as_mut_slice()[idx] = orig - eps;
            let down = naive_loss(&probe, &inst.tokens, inst.label);
            probe.params.tensors_mut()[ti].as_mut_slice()[idx] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = grad.as_slice()[idx];
            let err = ((a - numeric).abs() - noise).max(0.0) / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(err);
        }
        errors.push(worst);
    }
    errors
}

/// Columnwise maxima of row-major `rows`.
pub fn column_max(rows: &[Vec<f64>]) -> Vec<f64> {
    let width = rows.first().map_or(0, Vec::len);
    (0..width)
        .map(|j| rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}
