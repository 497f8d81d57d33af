//! Token attributions: convolution values, gradient saliency and
//! linear-layer contributions, plus per-token scalar reductions.
//!
//! Every function works on the padded token sequence the model actually
//! consumes ([`Model::prepare`]), so results have one entry per padded
//! position. With the default kernel size 1 no padding ever happens.
//!
//! For kernels wider than one token, a window's values are attributed to
//! the token at which the window starts. Tokens that start no window of a
//! given kernel (the last `t - 1` tokens, or tokens skipped by the stride)
//! get 0 for that kernel's feature maps.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ForwardTrace, Model};
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ConvValue,
    Saliency,
    Linear,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ConvValue => "conv_value",
            Method::Saliency => "saliency",
            Method::Linear => "linear",
        }
    }

    /// Reduction used when a method's per-token vectors become one score.
    pub fn default_reduction(self) -> Reduction {
        match self {
            Method::ConvValue => Reduction::MeanAbs,
            Method::Saliency | Method::Linear => Reduction::SumAbs,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "conv" | "conv_value" => Ok(Method::ConvValue),
            "saliency" => Ok(Method::Saliency),
            "linear" => Ok(Method::Linear),
            other => Err(Error::Input(format!("unknown attribution method {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    MeanAbs,
    SumAbs,
    MaxAbs,
}

impl Reduction {
    pub fn apply(self, values: &[f64]) -> f64 {
        let abs = values.iter().map(|v| v.abs());
        match self {
            Reduction::MeanAbs if values.is_empty() => 0.0,
            Reduction::MeanAbs => abs.sum::<f64>() / values.len() as f64,
            Reduction::SumAbs => abs.sum(),
            Reduction::MaxAbs => abs.fold(0.0, f64::max),
        }
    }
}

impl FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mean_abs" => Ok(Reduction::MeanAbs),
            "sum_abs" => Ok(Reduction::SumAbs),
            "max_abs" => Ok(Reduction::MaxAbs),
            other => Err(Error::Input(format!("unknown reduction {other}"))),
        }
    }
}

/// Signed convolution values of one token, one per feature map
/// (kernel-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAttribution {
    pub token_index: usize,
    pub values: Vec<f64>,
}

/// Per-feature-map maximum over all windows; the classifier's input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseVector {
    pub values: Vec<f64>,
}

impl PhraseVector {
    pub fn l1(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }

    pub fn signed_sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// `|∂S_c/∂e|` for every input position (rows) and embedding dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaliencyMap {
    pub class: usize,
    pub values: Matrix,
}

impl SaliencyMap {
    /// Total sensitivity per token.
    pub fn row_sums(&self) -> Vec<f64> {
        self.values.iter_rows().map(|r| r.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenScore {
    pub token_index: usize,
    pub score: f64,
    pub method: Method,
}

fn conv_from_trace(model: &Model, trace: &ForwardTrace, n: usize) -> Vec<TokenAttribution> {
    let cfg = &model.config;
    let m = cfg.filters_per_kernel;
    let mut out: Vec<TokenAttribution> = (0..n)
        .map(|i| TokenAttribution {
            token_index: i,
            values: vec![0.0; cfg.feature_maps()],
        })
        .collect();
    for (g, vals) in trace.conv_values.iter().enumerate() {
        for w in 0..vals.rows() {
            let start = w * cfg.stride;
            out[start].values[g * m..(g + 1) * m].copy_from_slice(vals.row(w));
        }
    }
    out
}

/// Convolution values per token.
pub fn conv_attributions(model: &Model, tokens: &[usize]) -> Result<Vec<TokenAttribution>> {
    let tokens = model.prepare(tokens);
    let trace = model.forward(&tokens)?;
    Ok(conv_from_trace(model, &trace, tokens.len()))
}

pub fn phrase_vector(model: &Model, tokens: &[usize]) -> Result<PhraseVector> {
    let trace = model.forward(&model.prepare(tokens))?;
    Ok(PhraseVector { values: trace.pooled })
}

/// Saliency of the logit of `class`, or of the predicted class when `None`.
pub fn saliency(model: &Model, tokens: &[usize], class: Option<usize>) -> Result<SaliencyMap> {
    let tokens = model.prepare(tokens);
    let trace = model.forward(&tokens)?;
    saliency_from_trace(model, &trace, &tokens, class)
}

fn saliency_from_trace(model: &Model, trace: &ForwardTrace, tokens: &[usize], class: Option<usize>) -> Result<SaliencyMap> {
    let k = model.config.num_classes;
    let class = class.unwrap_or_else(|| trace.predicted());
    if class >= k {
        return Err(Error::Input(format!("class {class} out of range for {k} classes")));
    }
    let mut onehot = vec![0.0; k];
    onehot[class] = 1.0;
    let back = model.backward(trace, tokens, &onehot)?;
    Ok(SaliencyMap {
        class,
        values: back.inputs.abs(),
    })
}

/// Contribution of each token to the predicted logit: `w[c, j] * pooled[j]`
/// summed over the feature maps whose max-pool selected a window starting
/// at that token. `n` is the (padded) input length.
pub fn linear_attributions(model: &Model, trace: &ForwardTrace, n: usize) -> Vec<TokenScore> {
    let cfg = &model.config;
    let c = trace.predicted();
    let w = model.params.linear_weights.row(c);
    let mut scores = vec![0.0; n];
    for (j, (&win, &p)) in trace.pool_argmax.iter().zip(&trace.pooled).enumerate() {
        scores[win * cfg.stride] += w[j] * p;
    }
    scores
        .into_iter()
        .enumerate()
        .map(|(token_index, score)| TokenScore {
            token_index,
            score,
            method: Method::Linear,
        })
        .collect()
}

/// Per-token vectors that reduce to one scalar each.
pub trait TokenVectors {
    fn method(&self) -> Method;
    fn rows(&self) -> Vec<&[f64]>;
}

impl TokenVectors for [TokenAttribution] {
    fn method(&self) -> Method {
        Method::ConvValue
    }

    fn rows(&self) -> Vec<&[f64]> {
        self.iter().map(|a| a.values.as_slice()).collect()
    }
}

impl TokenVectors for Vec<TokenAttribution> {
    fn method(&self) -> Method {
        Method::ConvValue
    }

    fn rows(&self) -> Vec<&[f64]> {
        self.as_slice().rows()
    }
}

impl TokenVectors for SaliencyMap {
    fn method(&self) -> Method {
        Method::Saliency
    }

    fn rows(&self) -> Vec<&[f64]> {
        self.values.iter_rows().collect()
    }
}

/// Min-max scales `scores` into [0, 1] in place. An entry whose scores are
/// all equal maps to 0.5 everywhere.
pub fn normalize_scores(scores: &mut [f64]) {
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if scores.is_empty() {
        return;
    }
    let range = hi - lo;
    for v in scores.iter_mut() {
        *v = if range > 0.0 { ((*v - lo) / range).clamp(0.0, 1.0) } else { 0.5 };
    }
}

pub fn token_scalar_scores<A: TokenVectors + ?Sized>(
    attribs: &A,
    reduction: Reduction,
    normalize: bool,
) -> Result<Vec<TokenScore>> {
    let rows = attribs.rows();
    if rows.is_empty() {
        return Err(Error::Input("no token attributions to reduce".into()));
    }
    let mut scores: Vec<f64> = rows.iter().map(|r| reduction.apply(r)).collect();
    if normalize {
        normalize_scores(&mut scores);
    }
    let method = attribs.method();
    Ok(scores
        .into_iter()
        .enumerate()
        .map(|(token_index, score)| TokenScore {
            token_index,
            score,
            method,
        })
        .collect())
}

/// Everything one attribution method says about one input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: Method,
    /// Class the attribution refers to; the predicted class unless chosen.
    pub class: usize,
    pub predicted: usize,
    pub logits: Vec<f64>,
    /// Per-token vectors (conv values or saliency rows); absent for linear.
    pub vectors: Option<Vec<Vec<f64>>>,
    pub scores: Vec<f64>,
}

/// Runs one forward pass and the requested attribution. `class` only
/// affects saliency; conv values are class-independent and linear scores
/// always refer to the predicted class.
pub fn explain(
    model: &Model,
    tokens: &[usize],
    method: Method,
    class: Option<usize>,
    reduction: Reduction,
    normalize: bool,
) -> Result<Explanation> {
    let tokens = model.prepare(tokens);
    let trace = model.forward(&tokens)?;
    let predicted = trace.predicted();
    let (class, vectors, scores) = match method {
        Method::ConvValue => {
            let a = conv_from_trace(model, &trace, tokens.len());
            let s = token_scalar_scores(&a, reduction, normalize)?;
            (predicted, Some(a.into_iter().map(|t| t.values).collect()), s)
        }
        Method::Saliency => {
            let map = saliency_from_trace(model, &trace, &tokens, class)?;
            let s = token_scalar_scores(&map, reduction, normalize)?;
            let rows = map.values.iter_rows().map(<[f64]>::to_vec).collect();
            (map.class, Some(rows), s)
        }
        Method::Linear => {
            let mut s = linear_attributions(model, &trace, tokens.len());
            if normalize {
                let mut v: Vec<f64> = s.iter().map(|t| t.score).collect();
                normalize_scores(&mut v);
                s.iter_mut().zip(v).for_each(|(t, v)| t.score = v);
            }
            (predicted, None, s)
        }
    };
    Ok(Explanation {
        method,
        class,
        predicted,
        logits: trace.logits,
        vectors,
        scores: scores.into_iter().map(|s| s.score).collect(),
    })
}

/// Serialized attribution result for one sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub tokens: Vec<String>,
    pub method: Method,
    pub class: usize,
    pub class_name: String,
    pub predicted: usize,
    pub logits: Vec<f64>,
    pub model_fingerprint: String,
    pub token_records: Vec<TokenRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub index: usize,
    pub token: String,
    pub score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub values: Option<Vec<f64>>,
}

impl AttributionRecord {
    /// `tokens` are the display strings for the padded input.
    pub fn new(tokens: Vec<String>, exp: Explanation, class_name: String, model_fingerprint: String) -> Self {
        let mut vectors = exp.vectors.map(|v| v.into_iter().map(Some).collect::<Vec<_>>());
        let token_records = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| TokenRecord {
                index: i,
                token: t.clone(),
                score: exp.scores[i],
                values: vectors.as_mut().and_then(|v| v[i].take()),
            })
            .collect();
        Self {
            tokens,
            method: exp.method,
            class: exp.class,
            class_name,
            predicted: exp.predicted,
            logits: exp.logits,
            model_fingerprint,
            token_records,
        }
    }
}
