use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::fan_out;
use crate::attribution::{explain, Method};
use crate::data::Example;
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Metaphors,
    IgnoringFlow,
    MultipleConcepts,
    Imbalance,
    Others,
}

impl ErrorCategory {
    pub const ALL: [ErrorCategory; 5] = [
        ErrorCategory::Metaphors,
        ErrorCategory::IgnoringFlow,
        ErrorCategory::MultipleConcepts,
        ErrorCategory::Imbalance,
        ErrorCategory::Others,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Metaphors => "metaphors",
            ErrorCategory::IgnoringFlow => "ignoring_flow",
            ErrorCategory::MultipleConcepts => "multiple_concepts",
            ErrorCategory::Imbalance => "imbalance",
            ErrorCategory::Others => "others",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ErrorCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Data(format!("unknown error category {s}")))
    }
}

/// A misclassified example with the attribution scores a human needs to
/// categorize it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorTriageItem {
    pub id: String,
    pub index: usize,
    pub tokens: Vec<String>,
    pub gold: usize,
    pub predicted: usize,
    pub logits: Vec<f64>,
    /// Per-token normalized scores of each method.
    pub conv_value: Vec<f64>,
    pub saliency: Vec<f64>,
    pub linear: Vec<f64>,
}

/// Every misclassified example of `examples`, in example order. The id of
/// an item is its zero-based index in `examples`.
pub fn triage_errors(model: &Model, examples: &[Example], jobs: usize) -> Result<Vec<ErrorTriageItem>> {
    let items = fan_out(examples, jobs, |index, e| {
        let scores = |method: Method| -> Result<_> {
            let mut ex = explain(model, &e.tokens, method, None, method.default_reduction(), true)?;
            ex.scores.truncate(e.len());
            Ok(ex)
        };
        let conv = scores(Method::ConvValue)?;
        if conv.predicted == e.label {
            return Ok(None);
        }
        Ok(Some(ErrorTriageItem {
            id: index.to_string(),
            index,
            tokens: e.text_tokens.clone(),
            gold: e.label,
            predicted: conv.predicted,
            logits: conv.logits,
            conv_value: conv.scores,
            saliency: scores(Method::Saliency)?.scores,
            linear: scores(Method::Linear)?.scores,
        }))
    })?;
    Ok(items.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryShare {
    pub count: usize,
    /// Exact share in percent.
    pub percent: f64,
    /// Share rounded to one decimal place so that all shares add up to
    /// exactly 100.0 (largest remainder first; ties in category order).
    pub display: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorDistribution {
    pub total: usize,
    pub categories: BTreeMap<ErrorCategory, CategoryShare>,
}

impl ErrorDistribution {
    pub fn from_counts(counts: &BTreeMap<ErrorCategory, usize>) -> Result<Self> {
        let total: usize = counts.values().sum();
        if total == 0 {
            return Err(Error::Data("no annotated failures to tally".into()));
        }
        let count = |c: &ErrorCategory| counts.get(c).copied().unwrap_or(0);
        // largest-remainder rounding in tenths of a percent, exact in integers
        let mut tenths: Vec<usize> = ErrorCategory::ALL.iter().map(|c| count(c) * 1000 / total).collect();
        let mut by_remainder: Vec<usize> = (0..tenths.len()).collect();
        by_remainder.sort_by_key(|&i| std::cmp::Reverse(count(&ErrorCategory::ALL[i]) * 1000 % total));
        let missing = 1000 - tenths.iter().sum::<usize>();
        for &i in &by_remainder[..missing] {
            tenths[i] += 1;
        }
        let categories = ErrorCategory::ALL
            .into_iter()
            .zip(tenths)
            .map(|(c, t)| {
                let n = count(&c);
                (
                    c,
                    CategoryShare {
                        count: n,
                        percent: 100.0 * n as f64 / total as f64,
                        display: t as f64 / 10.0,
                    },
                )
            })
            .collect();
        Ok(Self { total, categories })
    }

    pub fn display(&self, c: ErrorCategory) -> f64 {
        self.categories[&c].display
    }
}

/// Parses `example_id TAB category` lines. Blank lines and lines starting
/// with `#` are skipped. When `known_ids` is given, every id must be in it.
pub fn tally_errors(annotations: &str, known_ids: Option<&HashSet<String>>) -> Result<ErrorDistribution> {
    let mut seen = HashSet::new();
    let mut counts = BTreeMap::new();
    for (i, line) in annotations.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, cat) = line
            .split_once('\t')
            .ok_or_else(|| Error::Parse {
                line: i + 1,
                msg: "expected example_id<TAB>category".into(),
            })?;
        let (id, cat) = (id.trim(), cat.trim());
        let cat: ErrorCategory = cat.parse()?;
        if let Some(known) = known_ids {
            if !known.contains(id) {
                return Err(Error::Data(format!("annotation references unknown item {id}")));
            }
        }
        if !seen.insert(id.to_string()) {
            return Err(Error::Data(format!("item {id} annotated twice")));
        }
        *counts.entry(cat).or_insert(0) += 1;
    }
    ErrorDistribution::from_counts(&counts)
}
