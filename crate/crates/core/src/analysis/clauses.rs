use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Aggregate, Sentence};
use crate::attribution::phrase_vector;
use crate::error::{Error, Result};
use crate::model::Model;

/// Half-open, zero-based token range `start:end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Result<Self> {
        if start > end {
            return Err(Error::Input(format!("span {start}:{end} ends before it starts")));
        }
        Ok(Self { start, end })
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for Span {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Input(format!("malformed span {s:?}, expected i:j"));
        let (a, b) = s.split_once(':').ok_or_else(bad)?;
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        Span::new(a, b)
    }
}

/// Locates `clause` as a contiguous run of tokens in `sentence`.
pub fn find_span<S: AsRef<str>>(sentence: &[S], clause: &[S]) -> Result<Span> {
    if clause.is_empty() {
        return Ok(Span { start: 0, end: 0 });
    }
    let n = clause.len();
    (0..=sentence.len().saturating_sub(n))
        .find(|&i| {
            sentence.len() >= n && sentence[i..i + n].iter().zip(clause).all(|(a, b)| a.as_ref() == b.as_ref())
        })
        .map(|i| Span { start: i, end: i + n })
        .ok_or_else(|| Error::Input("clause tokens not found in sentence".into()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseDecomposition {
    pub tokens: Vec<String>,
    pub clause_1: Span,
    pub clause_2: Span,
    pub sentence_vector: Vec<f64>,
    pub clause_1_vector: Vec<f64>,
    pub clause_2_vector: Vec<f64>,
    /// `v_s - v_2`, the effective contribution of clause 1.
    pub contribution_1: Vec<f64>,
    /// `v_s - v_1`, the effective contribution of clause 2.
    pub contribution_2: Vec<f64>,
    pub aggregate: Aggregate,
    pub aggregate_1: f64,
    pub aggregate_2: f64,
    /// 1 or 2; clause 1 wins ties.
    pub dominant_clause: u8,
    pub sentence_predicted: usize,
    pub clause_1_predicted: Option<usize>,
    pub clause_2_predicted: Option<usize>,
}

fn check_span(s: &Sentence, span: Span) -> Result<()> {
    if span.start > span.end || span.end > s.len() {
        return Err(Error::Input(format!(
            "clause span {span} lies outside the {}-token sentence",
            s.len()
        )));
    }
    Ok(())
}

/// Phrase vector of a clause fed to the model on its own; an empty clause
/// contributes the zero vector.
fn clause_vector(model: &Model, clause: &Sentence) -> Result<(Vec<f64>, Option<usize>)> {
    if clause.is_empty() {
        return Ok((vec![0.0; model.config.feature_maps()], None));
    }
    let pv = phrase_vector(model, &clause.ids)?;
    Ok((pv.values, Some(model.predict(&clause.ids)?)))
}

pub fn decompose_clauses(
    model: &Model,
    sentence: &Sentence,
    clause_1: Span,
    clause_2: Span,
    aggregate: Aggregate,
) -> Result<ClauseDecomposition> {
    check_span(sentence, clause_1)?;
    check_span(sentence, clause_2)?;
    let vs = phrase_vector(model, &sentence.ids)?.values;
    let (v1, p1) = clause_vector(model, &sentence.slice(clause_1))?;
    let (v2, p2) = clause_vector(model, &sentence.slice(clause_2))?;
    let u1: Vec<f64> = vs.iter().zip(&v2).map(|(s, c)| s - c).collect();
    let u2: Vec<f64> = vs.iter().zip(&v1).map(|(s, c)| s - c).collect();
    let a1 = aggregate.apply(&u1);
    let a2 = aggregate.apply(&u2);
    Ok(ClauseDecomposition {
        tokens: sentence.text_tokens.clone(),
        clause_1,
        clause_2,
        sentence_vector: vs,
        clause_1_vector: v1,
        clause_2_vector: v2,
        contribution_1: u1,
        contribution_2: u2,
        aggregate,
        aggregate_1: a1,
        aggregate_2: a2,
        dominant_clause: if a2 > a1 { 2 } else { 1 },
        sentence_predicted: model.predict(&sentence.ids)?,
        clause_1_predicted: p1,
        clause_2_predicted: p2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClauseSummary {
    pub tokens: Vec<String>,
    pub aggregate: f64,
    pub predicted: usize,
    pub logits: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositionReport {
    pub aggregate: Aggregate,
    pub clauses: Vec<ClauseSummary>,
    pub combined: ClauseSummary,
    /// Per clause, whether the combined aggregate is strictly larger.
    pub combined_exceeds: Vec<bool>,
}

fn summarize(model: &Model, s: &Sentence, aggregate: Aggregate) -> Result<ClauseSummary> {
    let trace = model.forward(&model.prepare(&s.ids))?;
    Ok(ClauseSummary {
        tokens: s.text_tokens.clone(),
        aggregate: aggregate.apply(&trace.pooled),
        predicted: trace.predicted(),
        logits: trace.logits,
    })
}

/// Compares the phrase-vector aggregate of a combined sentence with those
/// of its clauses.
pub fn compose_check(
    model: &Model,
    clauses: &[Sentence],
    combined: &Sentence,
    aggregate: Aggregate,
) -> Result<CompositionReport> {
    if clauses.is_empty() {
        return Err(Error::Input("compose_check needs at least one clause".into()));
    }
    let clauses = clauses
        .iter()
        .map(|c| summarize(model, c, aggregate))
        .collect::<Result<Vec<_>>>()?;
    let combined = summarize(model, combined, aggregate)?;
    let combined_exceeds = clauses.iter().map(|c| combined.aggregate > c.aggregate).collect();
    Ok(CompositionReport {
        aggregate,
        clauses,
        combined,
        combined_exceeds,
    })
}
