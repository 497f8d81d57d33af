mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use common::fixture;
use convis::analysis::{compare_intensity, compare_pair, dominance, tally_errors, Sentence};
use convis::attribution::{explain, AttributionRecord, Method};
use convis::model::{Model, ModelConfig};
use convis::numerics::Rng;
use convis::report::{render_report, Artifact, ReportBundle};
use convis::toy::separable_corpus;
use convis::training::{train, TrainConfig};

fn bundle() -> ReportBundle {
    let corpus = separable_corpus(20, 2);
    let model = Model::init(
        ModelConfig {
            embed_dim: 8,
            filters_per_kernel: 6,
            kernel_sizes: vec![1, 2],
            ..ModelConfig::new(corpus.vocab.len(), 2)
        },
        &mut Rng::new(3),
    )
    .unwrap();
    let tc = TrainConfig {
        max_epochs: 3,
        batch_size: 5,
        ..TrainConfig::default()
    };
    let (model, mut report) = train(model, &corpus.train, &corpus.val, Some(&corpus.test), &tc).unwrap();
    // not serialized, so zero it for round-trip comparisons
    report.wall_clock_seconds = 0.0;
    let s = |t: &str| Sentence::encode(t, &corpus.vocab, false).unwrap();

    let ex = &corpus.test[0];
    let exp = explain(&model, &ex.tokens, Method::ConvValue, None, Method::ConvValue.default_reduction(), true).unwrap();
    let record = AttributionRecord::new(ex.text_tokens.clone(), exp, "negative".into(), "abc".into());

    let mut b = ReportBundle::new("toy <report>");
    b.artifacts = vec![
        Artifact::Train(report),
        Artifact::Attribution(record),
        Artifact::Dominance(dominance(&model, &corpus.test, Method::Saliency, None, 1).unwrap()),
        Artifact::Pair(compare_pair(&model, &s("the film was good"), &s("the film was bad")).unwrap()),
        Artifact::Intensity(compare_intensity(&model, &s("good"), &s("really good")).unwrap()),
        Artifact::Tally(tally_errors(&fs::read_to_string(fixture("fig9_annotations.tsv")).unwrap(), None).unwrap()),
    ];
    b
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in [dir.to_path_buf(), dir.join("figures")] {
        let mut names: Vec<_> = fs::read_dir(&sub)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.is_file())
            .collect();
        names.sort();
        for p in names {
            out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
        }
    }
    out
}

#[test]
fn rendering_is_deterministic() {
    let b = bundle();
    let (x, y) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    render_report(&b, x.path()).unwrap();
    render_report(&b, y.path()).unwrap();
    render_report(&b, y.path()).unwrap();
    let (tx, ty) = (read_tree(x.path()), read_tree(y.path()));
    assert_eq!(tx, ty);
    assert!(tx.iter().any(|(n, _)| n.ends_with(".svg")));
}

fn json_numbers(v: &serde_json::Value, out: &mut HashSet<String>) {
    match v {
        serde_json::Value::Number(n) => {
            out.insert(n.to_string());
        }
        serde_json::Value::Array(a) => a.iter().for_each(|x| json_numbers(x, out)),
        serde_json::Value::Object(o) => o.values().for_each(|x| json_numbers(x, out)),
        _ => {}
    }
}

/// Text between each occurrence of `open` and the next `close`.
fn between<'a>(s: &'a str, open: &str, close: &str) -> Vec<&'a str> {
    let mut out = Vec::new();
    let mut rest = s;
    while let Some(i) = rest.find(open) {
        rest = &rest[i + open.len()..];
        let j = rest.find(close).expect("unclosed element");
        out.push(&rest[..j]);
        rest = &rest[j..];
    }
    out
}

#[test]
fn every_shown_number_is_in_report_json() {
    let dir = tempfile::tempdir().unwrap();
    render_report(&bundle(), dir.path()).unwrap();
    let html = fs::read_to_string(dir.path().join("index.html")).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let mut numbers = HashSet::new();
    json_numbers(&json, &mut numbers);

    let cells = between(&html, r#"<td class="num">"#, "</td>");
    let floats: Vec<&str> = cells.iter().copied().filter(|c| c.contains(['.', 'e'])).collect();
    assert!(floats.len() > 20);
    for c in floats {
        assert!(numbers.contains(c), "table value {c} missing from report.json");
    }
    // cell tooltips read "row / column: value"
    let tips: Vec<&str> = between(&html, "<title>", "</title>")
        .into_iter()
        .filter(|t| t.contains(" / "))
        .filter_map(|t| t.rsplit_once(": ").map(|(_, v)| v))
        .collect();
    assert!(tips.len() > 50);
    for v in tips {
        assert!(numbers.contains(v), "cell value {v} missing from report.json");
    }
}

#[test]
fn pair_section_shows_both_sentences_and_delta() {
    let b = bundle();
    let pair = ReportBundle {
        title: "pair".into(),
        artifacts: b.artifacts.into_iter().filter(|a| a.kind() == "pair").collect(),
    };
    let dir = tempfile::tempdir().unwrap();
    let written = render_report(&pair, dir.path()).unwrap();
    let html = fs::read_to_string(dir.path().join("index.html")).unwrap();
    assert_eq!(html.matches("<svg").count(), 3);
    for caption in ["sentence A", "sentence B", "phrase vectors and delta"] {
        assert!(html.contains(&format!(">{caption}</a></figcaption>")), "{caption}");
    }
    assert!(html.contains("the film was good") && html.contains("the film was bad"));
    assert_eq!(written.iter().filter(|p| p.extension().is_some_and(|e| e == "svg")).count(), 3);
}

#[test]
fn bundle_directory_round_trips() {
    let b = bundle();
    let dir = tempfile::tempdir().unwrap();
    for (i, a) in b.artifacts.iter().enumerate() {
        fs::write(dir.path().join(format!("{i:02}-{}.json", a.kind())), a.to_json().unwrap()).unwrap();
    }
    fs::write(dir.path().join("manifest.json"), "{}").unwrap();
    let loaded = ReportBundle::load_dir(dir.path()).unwrap();
    assert_eq!(loaded.artifacts, b.artifacts);
}
