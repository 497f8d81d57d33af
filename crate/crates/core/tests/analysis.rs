mod common;

use std::collections::HashSet;

use common::fixture;
use convis::analysis::{
    compare_intensity, compare_pair, decompose_clauses, dominance_from_scores, method_agreement, tally_errors,
    Aggregate, DominanceReport, ErrorCategory, Sentence, Span,
};
use convis::attribution::{Method, Reduction};
use convis::data::UniversalTag;
use convis::model::{Model, ModelConfig};
use convis::numerics::Rng;
use proptest::prelude::*;

fn tag_strategy() -> impl Strategy<Value = UniversalTag> {
    (0usize..12).prop_map(|i| UniversalTag::ALL[i])
}

fn entries_strategy() -> impl Strategy<Value = Vec<(Vec<f64>, Vec<UniversalTag>)>> {
    prop::collection::vec(
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(tag_strategy(), n),
            )
        }),
        1..12,
    )
}

fn report_of(entries: &[(Vec<f64>, Vec<UniversalTag>)]) -> DominanceReport {
    dominance_from_scores(
        entries.iter().map(|(s, t)| (s.clone(), t.as_slice())),
        Method::ConvValue,
        Reduction::MeanAbs,
    )
    .unwrap()
}

fn random_model(seed: u64, vocab: usize, kernels: Vec<usize>) -> Model {
    let mut rng = Rng::new(seed);
    let mut m = Model::zeros(ModelConfig {
        embed_dim: 6,
        filters_per_kernel: 5,
        kernel_sizes: kernels,
        ..ModelConfig::new(vocab, 2)
    })
    .unwrap();
    for t in m.params.tensors_mut() {
        for v in t.as_mut_slice() {
            *v = rng.uniform(-1.0, 1.0);
        }
    }
    m
}

fn sentence(ids: &[usize]) -> Sentence {
    Sentence::from_parts(ids.iter().map(|i| format!("w{i}")).collect(), ids.to_vec())
}

/// Spearman correlation as the Pearson correlation of rank vectors.
fn pearson_of_ranks(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<usize>() as f64 / n;
    let mb = b.iter().sum::<usize>() as f64 / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x as f64 - ma, y as f64 - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    cov / (va * vb).sqrt()
}

proptest! {
    #[test]
    fn dominance_ignores_entry_order(entries in entries_strategy(), seed in any::<u64>()) {
        let mut shuffled = entries.clone();
        Rng::new(seed).shuffle(&mut shuffled);
        prop_assert_eq!(report_of(&entries), report_of(&shuffled));
    }

    #[test]
    fn dominance_ignores_per_entry_affine_rescaling(
        entries in entries_strategy(),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let rescaled: Vec<_> = entries
            .iter()
            .map(|(s, t)| (s.iter().map(|v| v * scale + shift).collect(), t.clone()))
            .collect();
        let (a, b) = (report_of(&entries), report_of(&rescaled));
        prop_assert_eq!(a.ranking.len(), b.ranking.len());
        for (x, y) in a.ranking.iter().zip(&b.ranking) {
            prop_assert!((x.mean - y.mean).abs() < 1e-9);
            prop_assert_eq!(x.count, y.count);
        }
    }

    #[test]
    fn dominance_means_are_bounded_and_tags_partitioned(entries in entries_strategy()) {
        let r = report_of(&entries);
        prop_assert!(r.ranking.iter().all(|s| (0.0..=1.0).contains(&s.mean)));
        prop_assert!(r.ranking.windows(2).all(|w| w[0].mean >= w[1].mean));
        prop_assert_eq!(r.ranking.len() + r.absent.len(), 12);
        let total: u64 = r.ranking.iter().map(|s| s.count).sum();
        prop_assert_eq!(total as usize, entries.iter().map(|e| e.0.len()).sum::<usize>());
    }

    #[test]
    fn agreement_with_itself_is_perfect(entries in entries_strategy()) {
        let r = report_of(&entries);
        prop_assume!(r.ranking.len() >= 2);
        let a = method_agreement(&r, &r).unwrap();
        prop_assert_eq!(a.spearman_rho, 1.0);
        prop_assert!(a.top_k_overlap.iter().all(|o| o.fraction == 1.0));
    }

    #[test]
    fn spearman_matches_rank_pearson(perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle()) {
        let tags = UniversalTag::ALL;
        let scores_a: Vec<f64> = (0..12).map(|i| 12.0 - i as f64).collect();
        let scores_b: Vec<f64> = perm.iter().map(|&p| 12.0 - p as f64).collect();
        // a single entry holding every tag keeps the scores distinct after
        // normalization
        let ra = dominance_from_scores([(scores_a.clone(), &tags[..])], Method::ConvValue, Reduction::MeanAbs).unwrap();
        let rb = dominance_from_scores([(scores_b.clone(), &tags[..])], Method::Saliency, Reduction::SumAbs).unwrap();
        let got = method_agreement(&ra, &rb).unwrap().spearman_rho;
        let ranks_a: Vec<usize> = tags.iter().map(|t| ra.rank_of(*t).unwrap()).collect();
        let ranks_b: Vec<usize> = tags.iter().map(|t| rb.rank_of(*t).unwrap()).collect();
        prop_assert!((got - pearson_of_ranks(&ranks_a, &ranks_b)).abs() < 1e-12);
    }

    #[test]
    fn pair_comparison_is_antisymmetric(
        seed in any::<u64>(),
        a in prop::collection::vec(0usize..10, 1..7),
        b in prop::collection::vec(0usize..10, 1..7),
    ) {
        let model = random_model(seed, 10, vec![1, 2]);
        let ab = compare_pair(&model, &sentence(&a), &sentence(&b)).unwrap();
        let ba = compare_pair(&model, &sentence(&b), &sentence(&a)).unwrap();
        prop_assert!(ab.delta.iter().zip(&ba.delta).all(|(x, y)| *x == -*y));
        prop_assert_eq!(ab.reversal_count, ba.reversal_count);
        if let (Some(r), Some(s)) = (ab.magnitude_ratio, ba.magnitude_ratio) {
            prop_assert!((r * s - 1.0).abs() < 1e-12);
        }
        let aa = compare_pair(&model, &sentence(&a), &sentence(&a)).unwrap();
        prop_assert!(aa.delta.iter().all(|&d| d == 0.0));
        prop_assert_eq!(aa.reversal_count, 0);
    }

    #[test]
    fn intensity_verdict_follows_l1(
        seed in any::<u64>(),
        a in prop::collection::vec(0usize..10, 1..7),
        b in prop::collection::vec(0usize..10, 1..7),
    ) {
        let model = random_model(seed, 10, vec![1]);
        let c = compare_intensity(&model, &sentence(&a), &sentence(&b)).unwrap();
        prop_assert_eq!(c.intensified, c.intensified_l1 > c.base_l1);
        let l1 = |v: &[f64]| v.iter().map(|x| x.abs()).sum::<f64>();
        prop_assert_eq!(c.base_l1, l1(&c.pair.a.phrase));
    }

    #[test]
    fn clause_contributions_add_up(
        seed in any::<u64>(),
        ids in prop::collection::vec(0usize..10, 2..9),
        cut in 1usize..8,
    ) {
        let cut = cut.min(ids.len() - 1);
        let model = random_model(seed, 10, vec![1]);
        let s = sentence(&ids);
        let d = decompose_clauses(&model, &s, Span::new(0, cut).unwrap(), Span::new(cut, ids.len()).unwrap(), Aggregate::L1).unwrap();
        for j in 0..d.sentence_vector.len() {
            prop_assert_eq!(d.contribution_1[j], d.sentence_vector[j] - d.clause_2_vector[j]);
            prop_assert_eq!(d.contribution_2[j], d.sentence_vector[j] - d.clause_1_vector[j]);
            // with unit kernels the sentence max covers both clause maxima
            prop_assert_eq!(d.sentence_vector[j], d.clause_1_vector[j].max(d.clause_2_vector[j]));
        }
        let want = if d.aggregate_1 >= d.aggregate_2 { 1 } else { 2 };
        prop_assert_eq!(d.dominant_clause, want);
    }

    #[test]
    fn tally_shares_sum_to_100(counts in prop::collection::vec(0usize..40, 5)) {
        prop_assume!(counts.iter().sum::<usize>() > 0);
        let mut text = String::new();
        let mut id = 0;
        for (c, &n) in ErrorCategory::ALL.iter().zip(&counts) {
            for _ in 0..n {
                text.push_str(&format!("x{id}\t{c}\n"));
                id += 1;
            }
        }
        let d = tally_errors(&text, None).unwrap();
        let exact: f64 = d.categories.values().map(|s| s.percent).sum();
        let shown: f64 = d.categories.values().map(|s| s.display).sum();
        prop_assert!((exact - 100.0).abs() < 1e-9);
        prop_assert!((shown - 100.0).abs() < 1e-9, "{shown}");
        for (c, &n) in ErrorCategory::ALL.iter().zip(&counts) {
            prop_assert_eq!(d.categories[c].count, n);
        }
    }
}

#[test]
fn figure_nine_counts_reproduce_published_shares() {
    let text = std::fs::read_to_string(fixture("fig9_annotations.tsv")).unwrap();
    let d = tally_errors(&text, None).unwrap();
    assert_eq!(d.total, 114);
    let want = [
        (ErrorCategory::Metaphors, 45, 39.5),
        (ErrorCategory::IgnoringFlow, 27, 23.7),
        (ErrorCategory::MultipleConcepts, 21, 18.4),
        (ErrorCategory::Imbalance, 16, 14.0),
        (ErrorCategory::Others, 5, 4.4),
    ];
    for (c, count, shown) in want {
        assert_eq!(d.categories[&c].count, count, "{c}");
        assert_eq!(d.display(c), shown, "{c}");
    }
    let back: convis::analysis::ErrorDistribution =
        serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
    assert_eq!(back, d);
}

#[test]
fn three_line_fixture_tallies_two_thirds() {
    let text = std::fs::read_to_string(fixture("three_annotations.tsv")).unwrap();
    let known: HashSet<String> = ["a", "b", "c"].map(String::from).into();
    let d = tally_errors(&text, Some(&known)).unwrap();
    assert_eq!(d.display(ErrorCategory::Metaphors), 66.7);
    assert_eq!(d.display(ErrorCategory::Others), 33.3);
}
