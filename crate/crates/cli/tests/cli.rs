use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn convis(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convis"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("CONVIS_SST_DIR")
        .env_remove("CONVIS_SUBJ_DIR")
        .env_remove("CONVIS_TAG_LEXICON")
        .output()
        .unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> Value {
    let out = convis(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap_or(Value::Null)
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    convis(dir, args).status.code().unwrap()
}

/// A small, fast configuration over the treebank fixture.
fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let body = format!(
        "task = \"sst_coarse\"\nseed = 7\n\n[data]\nsst_dir = {:?}\ntag_lexicon = \"lexicon.tsv\"\n\n[model]\nembed_dim = 16\nfilters_per_kernel = 8\nkernel_sizes = [1]\n\n[train]\nmax_epochs = 4\nbatch_size = 25\n{extra}",
        fixtures().join("sst").display().to_string()
    );
    fs::write(&path, body).unwrap();
    path
}

fn trained(dir: &Path) {
    let tagged = fixtures().join("tagged.txt");
    ok(dir, &["lexicon", "--tagged", tagged.to_str().unwrap(), "--out", "lexicon.tsv"]);
    write_config(dir, "");
    ok(dir, &["train", "--config", "run.toml", "--out", "model"]);
}

#[test]
fn full_workflow() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    trained(d);
    for f in ["model.ckpt", "train.json", "manifest.json"] {
        assert!(d.join("model").join(f).is_file(), "{f}");
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(d.join("model/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "train");
    assert_eq!(manifest["created_at"], 1700000000);
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["outputs"], serde_json::json!(["model.ckpt", "train.json"]));

    let m = "model/model.ckpt";
    let ev = ok(d, &["eval", "--model", m, "--split", "val"]);
    assert_eq!(ev["kind"], "evaluation");
    assert!((0.0..=1.0).contains(&ev["accuracy"].as_f64().unwrap()));

    let at = ok(d, &["attribute", "--model", m, "--text", "a lovely film", "--svg", "a.svg", "--out", "attr"]);
    assert_eq!(at["token_records"].as_array().unwrap().len(), 3);
    assert_eq!(at["tokens"], serde_json::json!(["a", "lovely", "film"]));
    assert!(fs::read_to_string(d.join("a.svg")).unwrap().starts_with("<svg"));
    let sal = ok(d, &["attribute", "--model", m, "--text", "a lovely film", "--method", "saliency", "--class", "0"]);
    assert_eq!(sal["class"], 0);

    ok(d, &["dominance", "--model", m, "--method", "conv", "--out", "dom_conv"]);
    ok(d, &["dominance", "--model", m, "--method", "saliency", "--jobs", "3", "--out", "dom_sal"]);
    let ag = ok(d, &["agree", "--a", "dom_conv/dominance.json", "--b", "dom_sal/dominance.json"]);
    let rho = ag["spearman_rho"].as_f64().unwrap();
    assert!((-1.0..=1.0).contains(&rho));
    let self_ag = ok(d, &["agree", "--a", "dom_conv/dominance.json", "--b", "dom_conv/dominance.json"]);
    assert_eq!(self_ag["spearman_rho"], 1.0);

    let pair = ok(d, &["compare", "--model", m, "--a", "the story is good", "--b", "the story is n't good", "--out", "pair"]);
    assert_eq!(pair["kind"], "pair");
    let int = ok(d, &["compare", "--model", m, "--a", "good", "--b", "really good", "--intensity"]);
    assert_eq!(
        int["intensified"].as_bool().unwrap(),
        int["intensified_l1"].as_f64().unwrap() > int["base_l1"].as_f64().unwrap()
    );

    let dec = ok(d, &[
        "decompose", "--model", m, "--sentence", "the plot is dull but the acting is lovely",
        "--clause1", "0:4", "--clause2", "5:9", "--out", "clauses",
    ]);
    assert!(matches!(dec["dominant_clause"].as_u64(), Some(1 | 2)));
    let comp = ok(d, &[
        "compose", "--model", m, "--clause", "the plot is dull", "--clause", "the acting is poor",
        "--combined", "the plot is dull and the acting is poor",
    ]);
    assert_eq!(comp["combined_exceeds"].as_array().unwrap().len(), 2);

    let tri = ok(d, &["triage", "--model", m, "--out", "triage", "--jobs", "2"]);
    let items = tri["items"].as_array().unwrap();
    let ann: String = items.iter().map(|i| format!("{}\tothers\n", i["id"].as_str().unwrap())).collect();
    if !ann.is_empty() {
        fs::write(d.join("ann.tsv"), ann).unwrap();
        let t = ok(d, &["tally", "--annotations", "ann.tsv", "--triage", "triage/triage.json"]);
        assert_eq!(t["categories"]["others"]["display"], 100.0);
    }
    let three = fixtures().join("three_annotations.tsv");
    let t = ok(d, &["tally", "--annotations", three.to_str().unwrap(), "--out", "tally"]);
    assert_eq!(t["categories"]["metaphors"]["display"], 66.7);
    assert_eq!(t["categories"]["others"]["display"], 33.3);

    let bundle = d.join("bundle");
    fs::create_dir(&bundle).unwrap();
    for (src, name) in [
        ("attr/attribution.json", "1.json"),
        ("dom_conv/dominance.json", "2.json"),
        ("pair/pair.json", "3.json"),
        ("clauses/clauses.json", "4.json"),
        ("tally/tally.json", "5.json"),
        ("model/train.json", "6.json"),
    ] {
        fs::copy(d.join(src), bundle.join(name)).unwrap();
    }
    ok(d, &["report", "--bundle", "bundle", "--out", "html"]);
    let html = fs::read_to_string(d.join("html/index.html")).unwrap();
    assert!(html.contains("sentence A") && html.contains("phrase vectors and delta"));
    assert!(d.join("html/report.json").is_file() && d.join("html/manifest.json").is_file());
}

#[test]
fn exit_codes_follow_error_kind() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    trained(d);
    let m = "model/model.ckpt";

    // usage
    assert_eq!(code(d, &["train", "--bogus"]), 2);
    assert_eq!(code(d, &["decompose", "--model", m, "--sentence", "a b", "--clause1", "2:1", "--clause2", "0:1"]), 2);
    assert_eq!(code(d, &["attribute", "--model", m, "--text", "good", "--method", "saliency", "--class", "9"]), 2);
    assert_eq!(code(d, &["attribute", "--model", m, "--text", "   "]), 2);
    fs::write(d.join("bad.toml"), "[train]\nlearning_rate = -1.0\n").unwrap();
    assert_eq!(code(d, &["train", "--config", "bad.toml", "--out", "x"]), 2);

    // data
    assert_eq!(code(d, &["eval", "--model", "missing.ckpt"]), 3);
    fs::write(d.join("junk.ckpt"), b"not a checkpoint").unwrap();
    assert_eq!(code(d, &["eval", "--model", "junk.ckpt"]), 3);
    fs::write(d.join("ann.tsv"), "a\tsarcasm\n").unwrap();
    assert_eq!(code(d, &["tally", "--annotations", "ann.tsv"]), 3);
    assert_eq!(code(d, &["agree", "--a", "model/train.json", "--b", "model/train.json"]), 3);

    // runtime
    write_config(d, "learning_rate = 1e308\noptimizer = \"sgd\"\n");
    assert_eq!(code(d, &["train", "--config", "run.toml", "--out", "diverged"]), 4);
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(p) = stack.pop() {
        for e in fs::read_dir(&p).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn reruns_produce_identical_trees() {
    let run = || {
        let tmp = tempfile::tempdir().unwrap();
        let d = tmp.path();
        trained(d);
        ok(d, &["attribute", "--model", "model/model.ckpt", "--text", "a dull story", "--out", "attr"]);
        ok(d, &["dominance", "--model", "model/model.ckpt", "--out", "dom"]);
        let bundle = d.join("bundle");
        fs::create_dir(&bundle).unwrap();
        fs::copy(d.join("attr/attribution.json"), bundle.join("a.json")).unwrap();
        fs::copy(d.join("dom/dominance.json"), bundle.join("b.json")).unwrap();
        ok(d, &["report", "--bundle", "bundle", "--out", "html"]);
        tree(d)
    };
    let (a, b) = (run(), run());
    assert_eq!(a.len(), b.len());
    for ((pa, ba), (pb, bb)) in a.iter().zip(&b) {
        assert_eq!(pa, pb);
        assert!(ba == bb, "{} differs between runs", pa.display());
    }
}

#[test]
fn print_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let out = convis(tmp.path(), &["train", "--print-config", "--seed", "11"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("task = \"sst_coarse\""));
    assert!(text.contains("seed = 11"));
    fs::write(tmp.path().join("c.toml"), &text).unwrap();
    let again = convis(tmp.path(), &["train", "--print-config", "--config", "c.toml"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}
