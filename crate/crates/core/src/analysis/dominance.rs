use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::fan_out;
use crate::attribution::{explain, normalize_scores, Method, Reduction};
use crate::data::{Example, UniversalTag};
use crate::error::{Error, Result};
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TagStat {
    pub tag: UniversalTag,
    pub mean: f64,
    pub count: u64,
}

/// Mean per-entry-normalized token score per part-of-speech tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub method: Method,
    pub reduction: Reduction,
    pub entries: usize,
    /// Tags that occurred, most dominant first; equal means are ordered
    /// alphabetically by tag name.
    pub ranking: Vec<TagStat>,
    /// Tags that never occurred and are therefore not ranked.
    pub absent: Vec<UniversalTag>,
}

impl DominanceReport {
    pub fn rank_of(&self, tag: UniversalTag) -> Option<usize> {
        self.ranking.iter().position(|s| s.tag == tag)
    }

    pub fn order(&self) -> Vec<UniversalTag> {
        self.ranking.iter().map(|s| s.tag).collect()
    }
}

/// Computes the report from raw per-token scores of each entry. Each
/// entry's scores are min-max normalized before accumulation.
pub fn dominance_from_scores<'a>(
    entries: impl IntoIterator<Item = (Vec<f64>, &'a [UniversalTag])>,
    method: Method,
    reduction: Reduction,
) -> Result<DominanceReport> {
    let mut by_tag: HashMap<UniversalTag, Vec<f64>> = HashMap::new();
    let mut count = 0;
    for (mut scores, tags) in entries {
        if scores.len() != tags.len() {
            return Err(Error::Data(format!(
                "entry {count} has {} scores but {} tags",
                scores.len(),
                tags.len()
            )));
        }
        normalize_scores(&mut scores);
        for (s, &t) in scores.into_iter().zip(tags) {
            by_tag.entry(t).or_default().push(s);
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Input("dominance needs at least one entry".into()));
    }
    let mut ranking: Vec<TagStat> = by_tag
        .into_iter()
        .map(|(tag, mut v)| {
            // summing in sorted order makes the mean independent of entry order
            v.sort_by(f64::total_cmp);
            TagStat {
                tag,
                mean: v.iter().sum::<f64>() / v.len() as f64,
                count: v.len() as u64,
            }
        })
        .collect();
    ranking.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.tag.as_str().cmp(b.tag.as_str())));
    let absent = UniversalTag::ALL
        .iter()
        .copied()
        .filter(|t| ranking.iter().all(|s| s.tag != *t))
        .collect();
    Ok(DominanceReport {
        method,
        reduction,
        entries: count,
        ranking,
        absent,
    })
}

/// Dominance of each tag over `examples` (the test split) under `method`.
/// Scores of padding positions are dropped before normalization.
pub fn dominance(
    model: &Model,
    examples: &[Example],
    method: Method,
    reduction: Option<Reduction>,
    jobs: usize,
) -> Result<DominanceReport> {
    if examples.is_empty() {
        return Err(Error::Input("dominance needs a nonempty test set".into()));
    }
    if let Some((i, _)) = examples.iter().enumerate().find(|(_, e)| !e.is_tagged()) {
        return Err(Error::Data(format!("example {i} has no part-of-speech tags")));
    }
    let reduction = reduction.unwrap_or(method.default_reduction());
    let scores = fan_out(examples, jobs, |_, e| {
        let mut s = explain(model, &e.tokens, method, None, reduction, false)?.scores;
        s.truncate(e.len());
        Ok(s)
    })?;
    dominance_from_scores(
        scores.into_iter().zip(examples.iter().map(|e| e.pos_tags.as_slice())),
        method,
        reduction,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKOverlap {
    pub k: usize,
    pub shared: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub spearman_rho: f64,
    pub tags_compared: usize,
    pub top_k_overlap: Vec<TopKOverlap>,
}

/// Spearman correlation of two rank orders over their shared tags, and the
/// overlap of their top-3 and top-5 sets.
pub fn method_agreement(a: &DominanceReport, b: &DominanceReport) -> Result<Agreement> {
    let rank_b: BTreeMap<UniversalTag, usize> = b.ranking.iter().enumerate().map(|(i, s)| (s.tag, i)).collect();
    let shared: Vec<UniversalTag> = a.order().into_iter().filter(|t| rank_b.contains_key(t)).collect();
    if shared.is_empty() {
        return Err(Error::Input("the reports share no tags".into()));
    }
    let n = shared.len();
    if n < 2 {
        return Err(Error::Input("rank correlation needs at least two shared tags".into()));
    }
    // re-rank within the shared set so both rankings are permutations of 0..n
    let mut in_b: Vec<UniversalTag> = shared.clone();
    in_b.sort_by_key(|t| rank_b[t]);
    let d2: f64 = shared
        .iter()
        .enumerate()
        .map(|(ra, t)| {
            let rb = in_b.iter().position(|x| x == t).unwrap();
            let d = ra as f64 - rb as f64;
            d * d
        })
        .sum();
    let nf = n as f64;
    let spearman_rho = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));

    let top_k_overlap = [3, 5]
        .into_iter()
        .map(|k| {
            let k_eff = k.min(n);
            let top_a = &shared[..k_eff];
            let top_b = &in_b[..k_eff];
            let hits = top_a.iter().filter(|t| top_b.contains(t)).count();
            TopKOverlap {
                k,
                shared: hits,
                fraction: hits as f64 / k_eff as f64,
            }
        })
        .collect();
    Ok(Agreement {
        spearman_rho,
        tags_compared: n,
        top_k_overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use UniversalTag::*;

    #[test]
    fn single_entry_direct() {
        let tags = [Adj, Det];
        let r = dominance_from_scores([(vec![1.0, 0.0], &tags[..])], Method::ConvValue, Reduction::MeanAbs).unwrap();
        assert_eq!(r.order(), vec![Adj, Det]);
        assert_eq!(r.ranking[0].mean, 1.0);
        assert_eq!(r.ranking[1].mean, 0.0);
        assert_eq!(r.absent.len(), 10);
    }

    #[test]
    fn ties_break_alphabetically() {
        let tags = [Verb, Adv, Noun];
        let r = dominance_from_scores([(vec![3.0, 3.0, 3.0], &tags[..])], Method::Saliency, Reduction::SumAbs).unwrap();
        assert_eq!(r.order(), vec![Adv, Noun, Verb]);
        assert!(r.ranking.iter().all(|s| s.mean == 0.5));
    }

    fn report(order: &[UniversalTag]) -> DominanceReport {
        let n = order.len();
        DominanceReport {
            method: Method::ConvValue,
            reduction: Reduction::MeanAbs,
            entries: 1,
            ranking: order
                .iter()
                .enumerate()
                .map(|(i, &tag)| TagStat {
                    tag,
                    mean: (n - i) as f64 / n as f64,
                    count: 1,
                })
                .collect(),
            absent: vec![],
        }
    }

    #[test]
    fn identical_and_reversed() {
        let all = UniversalTag::ALL;
        let r = report(&all);
        let ag = method_agreement(&r, &r).unwrap();
        assert_eq!(ag.spearman_rho, 1.0);
        assert_eq!(ag.top_k_overlap[0].shared, 3);
        let mut rev = all;
        rev.reverse();
        assert_eq!(method_agreement(&r, &report(&rev)).unwrap().spearman_rho, -1.0);
    }

    #[test]
    fn disjoint_reports_rejected() {
        assert!(matches!(
            method_agreement(&report(&[Adj, Adv]), &report(&[Noun, Verb])),
            Err(Error::Input(_))
        ));
    }
}
