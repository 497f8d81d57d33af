//! Corpus-level and pairwise studies built on the attribution views.

mod clauses;
mod dominance;
mod errors;
mod pairs;

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{tokenize, Vocabulary};
use crate::error::{Error, Result};

pub use clauses::{compose_check, decompose_clauses, find_span, ClauseDecomposition, ClauseSummary, CompositionReport, Span};
pub use dominance::{dominance, dominance_from_scores, method_agreement, Agreement, DominanceReport, TagStat, TopKOverlap};
pub use errors::{tally_errors, triage_errors, ErrorCategory, ErrorDistribution, ErrorTriageItem};
pub use pairs::{compare_intensity, compare_pair, IntensityComparison, PairComparison, SentenceView};

/// A sentence as the user wrote it and as the model sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub text_tokens: Vec<String>,
    pub ids: Vec<usize>,
}

impl Sentence {
    /// Tokenizes raw text and encodes it against `vocab`.
    pub fn encode(text: &str, vocab: &Vocabulary, lowercase: bool) -> Result<Self> {
        let mut text_tokens = tokenize(text);
        if lowercase {
            text_tokens.iter_mut().for_each(|t| *t = t.to_lowercase());
        }
        if text_tokens.is_empty() {
            return Err(Error::Input(format!("sentence {text:?} has no tokens")));
        }
        let ids = vocab.encode_all(&text_tokens);
        Ok(Self { text_tokens, ids })
    }

    pub fn from_parts(text_tokens: Vec<String>, ids: Vec<usize>) -> Self {
        Self { text_tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn slice(&self, span: Span) -> Sentence {
        Sentence {
            text_tokens: self.text_tokens[span.start..span.end].to_vec(),
            ids: self.ids[span.start..span.end].to_vec(),
        }
    }
}

/// How a phrase vector collapses to one number.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    #[default]
    L1,
    SignedSum,
}

impl Aggregate {
    pub fn apply(self, v: &[f64]) -> f64 {
        match self {
            Aggregate::L1 => v.iter().map(|x| x.abs()).sum(),
            Aggregate::SignedSum => v.iter().sum(),
        }
    }
}

impl FromStr for Aggregate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Aggregate::L1),
            "signed_sum" | "sum" => Ok(Aggregate::SignedSum),
            other => Err(Error::Input(format!("unknown aggregate {other}"))),
        }
    }
}

/// Runs `f` over `items`, on `jobs` threads when `jobs > 1`. Output order
/// always follows input order.
pub(crate) fn fan_out<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(usize, &T) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    use rayon::prelude::*;
    if jobs <= 1 {
        return items.iter().enumerate().map(|(i, x)| f(i, x)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect())
}
