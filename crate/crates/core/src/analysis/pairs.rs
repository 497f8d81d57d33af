use serde::{Deserialize, Serialize};

use super::Sentence;
use crate::attribution::conv_attributions;
use crate::error::Result;
use crate::model::Model;

/// One side of a comparison, with everything needed to draw its heatmap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceView {
    pub tokens: Vec<String>,
    pub predicted: usize,
    pub logits: Vec<f64>,
    /// Signed phrase vector.
    pub phrase: Vec<f64>,
    /// L1 norm of `phrase`.
    pub l1: f64,
    /// Signed per-token convolution values.
    pub token_values: Vec<Vec<f64>>,
}

impl SentenceView {
    pub fn new(model: &Model, s: &Sentence) -> Result<Self> {
        let ids = model.prepare(&s.ids);
        let trace = model.forward(&ids)?;
        let mut tokens = s.text_tokens.clone();
        tokens.resize(ids.len(), crate::data::UNK_TOKEN.to_string());
        Ok(Self {
            tokens,
            predicted: trace.predicted(),
            l1: trace.pooled.iter().map(|v| v.abs()).sum(),
            phrase: trace.pooled.clone(),
            logits: trace.logits,
            token_values: conv_attributions(model, &ids)?.into_iter().map(|a| a.values).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: SentenceView,
    pub b: SentenceView,
    /// `v_a - v_b`.
    pub delta: Vec<f64>,
    /// Feature maps whose signs differ, counting only nonzero pairs.
    pub reversal_count: usize,
    /// `|v_a|_1 / |v_b|_1`; absent when `v_b` is all zeros.
    pub magnitude_ratio: Option<f64>,
}

pub fn compare_pair(model: &Model, a: &Sentence, b: &Sentence) -> Result<PairComparison> {
    let a = SentenceView::new(model, a)?;
    let b = SentenceView::new(model, b)?;
    let delta = a.phrase.iter().zip(&b.phrase).map(|(x, y)| x - y).collect();
    let reversal_count = a
        .phrase
        .iter()
        .zip(&b.phrase)
        .filter(|(x, y)| **x != 0.0 && **y != 0.0 && (x.is_sign_negative() != y.is_sign_negative()))
        .count();
    let nb = b.l1;
    let magnitude_ratio = (nb > 0.0).then(|| a.l1 / nb);
    Ok(PairComparison {
        a,
        b,
        delta,
        reversal_count,
        magnitude_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensityComparison {
    /// `a` is the base sentence, `b` the intensified one.
    pub pair: PairComparison,
    pub base_l1: f64,
    pub intensified_l1: f64,
    /// True iff the intensified sentence has strictly larger L1 norm.
    pub intensified: bool,
}

pub fn compare_intensity(model: &Model, base: &Sentence, intensified: &Sentence) -> Result<IntensityComparison> {
    let pair = compare_pair(model, base, intensified)?;
    let base_l1 = pair.a.l1;
    let intensified_l1 = pair.b.l1;
    Ok(IntensityComparison {
        intensified: intensified_l1 > base_l1,
        pair,
        base_l1,
        intensified_l1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::numerics::Rng;

    fn sentence(ids: &[usize]) -> Sentence {
        Sentence::from_parts(ids.iter().map(|i| format!("w{i}")).collect(), ids.to_vec())
    }

    fn model() -> Model {
        let mut cfg = ModelConfig::new(8, 2);
        cfg.embed_dim = 4;
        cfg.filters_per_kernel = 6;
        let mut m = Model::init(cfg, &mut Rng::new(2)).unwrap();
        for v in m.params.embeddings.as_mut_slice() {
            *v *= 20.0;
        }
        m
    }

    #[test]
    fn identical_sentences() {
        let m = model();
        let c = compare_pair(&m, &sentence(&[1, 2]), &sentence(&[1, 2])).unwrap();
        assert!(c.delta.iter().all(|&d| d == 0.0));
        assert_eq!(c.reversal_count, 0);
        assert_eq!(c.magnitude_ratio, Some(1.0));
        let i = compare_intensity(&m, &sentence(&[1, 2]), &sentence(&[1, 2])).unwrap();
        assert!(!i.intensified);
    }

    #[test]
    fn zero_model_is_not_intensified() {
        let mut cfg = ModelConfig::new(8, 2);
        cfg.embed_dim = 4;
        let m = Model::zeros(cfg).unwrap();
        let i = compare_intensity(&m, &sentence(&[1]), &sentence(&[2, 3])).unwrap();
        assert_eq!(i.base_l1, i.intensified_l1);
        assert!(!i.intensified);
        assert_eq!(i.pair.magnitude_ratio, None);
    }

    #[test]
    fn reversal_counts_sign_flips() {
        let m = model();
        let c = compare_pair(&m, &sentence(&[1]), &sentence(&[2])).unwrap();
        let manual = c
            .a
            .phrase
            .iter()
            .zip(&c.b.phrase)
            .filter(|(x, y)| x.signum() * y.signum() < 0.0)
            .count();
        assert_eq!(c.reversal_count, manual);
        assert!(c.reversal_count <= c.delta.len());
    }
}
