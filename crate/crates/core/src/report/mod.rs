//! Heatmaps, a self-contained HTML report and its JSON mirror.

mod svg;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    Agreement, ClauseDecomposition, CompositionReport, DominanceReport, ErrorDistribution, ErrorTriageItem,
    IntensityComparison, PairComparison, SentenceView,
};
use crate::attribution::{AttributionRecord, Method};
use crate::error::{Error, Result};
use crate::training::TrainReport;

pub use svg::{color_for, render_svg, ColorMode, ColorStops, HeatmapSpec, Rgb};

/// Formats a number exactly as the JSON output does, so every value shown
/// in a figure or table can be found verbatim in `report.json`.
pub fn fmt_num(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| "null".into())
}

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub split: String,
    pub examples: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriageBundle {
    pub label_names: Vec<String>,
    pub items: Vec<ErrorTriageItem>,
}

/// Any result the CLI writes to disk. The `kind` field tags the variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    Train(TrainReport),
    Evaluation(EvaluationSummary),
    Attribution(AttributionRecord),
    Dominance(DominanceReport),
    Agreement(Agreement),
    Pair(PairComparison),
    Intensity(IntensityComparison),
    Clauses(ClauseDecomposition),
    Composition(CompositionReport),
    Triage(TriageBundle),
    Tally(ErrorDistribution),
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Train(_) => "train",
            Artifact::Evaluation(_) => "evaluation",
            Artifact::Attribution(_) => "attribution",
            Artifact::Dominance(_) => "dominance",
            Artifact::Agreement(_) => "agreement",
            Artifact::Pair(_) => "pair",
            Artifact::Intensity(_) => "intensity",
            Artifact::Clauses(_) => "clauses",
            Artifact::Composition(_) => "composition",
            Artifact::Triage(_) => "triage",
            Artifact::Tally(_) => "tally",
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub title: String,
    pub artifacts: Vec<Artifact>,
}

impl ReportBundle {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            artifacts: Vec::new(),
        }
    }

    /// Loads every artifact JSON file in `dir`, in file-name order.
    /// `manifest.json` and `report.json` are skipped.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut files: Vec<PathBuf> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .filter(|p| {
                let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
                name != "manifest.json" && name != "report.json"
            })
            .collect();
        files.sort();
        let mut artifacts = Vec::new();
        for f in files {
            let text = fs::read_to_string(&f).map_err(|e| Error::io(&f, e))?;
            let a: Artifact = serde_json::from_str(&text)
                .map_err(|e| Error::Data(format!("{}: not a result file: {e}", f.display())))?;
            artifacts.push(a);
        }
        let title = dir
            .file_name()
            .and_then(|n| n.to_str())
            .map_or_else(|| "report".to_string(), str::to_string);
        Ok(Self { title, artifacts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct FigureRecord<'a> {
    file: String,
    artifact: usize,
    legend_min: f64,
    legend_max: f64,
    spec: &'a HeatmapSpec,
}

#[derive(Serialize)]
struct ReportJson<'a> {
    title: &'a str,
    artifacts: &'a [Artifact],
    figures: Vec<FigureRecord<'a>>,
}

fn indexed(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn sentence_figure(title: String, v: &SentenceView) -> HeatmapSpec {
    HeatmapSpec::new(title, v.tokens.clone(), v.token_values.clone(), ColorMode::SignedDiverging)
}

fn labelled(tokens: &[String]) -> Vec<String> {
    tokens.iter().enumerate().map(|(i, t)| format!("{i} {t}")).collect()
}

/// Heatmaps drawn for one artifact.
pub fn figures_for(a: &Artifact) -> Vec<HeatmapSpec> {
    match a {
        Artifact::Attribution(r) => {
            let labels = labelled(&r.tokens);
            let mut out = Vec::new();
            if let Some(first) = r.token_records.first().and_then(|t| t.values.as_ref()) {
                let mode = match r.method {
                    Method::Saliency => ColorMode::AbsoluteSequential,
                    _ => ColorMode::SignedDiverging,
                };
                let rows = r.token_records.iter().map(|t| t.values.clone().unwrap_or_default()).collect();
                let cols = first.len();
                out.push(
                    HeatmapSpec::new(format!("{} values", r.method), labels.clone(), rows, mode)
                        .with_column_labels(indexed(cols)),
                );
            }
            let scores = r.token_records.iter().map(|t| vec![t.score]).collect();
            let mode = if r.token_records.iter().any(|t| t.score < 0.0) {
                ColorMode::SignedDiverging
            } else {
                ColorMode::AbsoluteSequential
            };
            out.push(HeatmapSpec::new(format!("{} token scores", r.method), labels, scores, mode));
            out
        }
        Artifact::Dominance(d) => vec![HeatmapSpec::new(
            format!("{} dominance by tag", d.method),
            d.ranking.iter().map(|s| s.tag.to_string()).collect(),
            d.ranking.iter().map(|s| vec![s.mean]).collect(),
            ColorMode::AbsoluteSequential,
        )],
        Artifact::Pair(p) => pair_figures(p),
        Artifact::Intensity(i) => pair_figures(&i.pair),
        Artifact::Clauses(c) => vec![HeatmapSpec::new(
            "clause phrase vectors and contributions",
            ["sentence", "clause 1", "clause 2", "contribution 1", "contribution 2"]
                .map(String::from)
                .to_vec(),
            vec![
                c.sentence_vector.clone(),
                c.clause_1_vector.clone(),
                c.clause_2_vector.clone(),
                c.contribution_1.clone(),
                c.contribution_2.clone(),
            ],
            ColorMode::SignedDiverging,
        )],
        Artifact::Triage(t) => t
            .items
            .iter()
            .map(|it| {
                HeatmapSpec::new(
                    format!("item {}", it.id),
                    labelled(&it.tokens),
                    (0..it.tokens.len())
                        .map(|k| vec![it.conv_value[k], it.saliency[k], it.linear[k]])
                        .collect(),
                    ColorMode::AbsoluteSequential,
                )
                .with_column_labels(vec!["conv".into(), "saliency".into(), "linear".into()])
            })
            .collect(),
        _ => vec![],
    }
}

fn pair_figures(p: &PairComparison) -> Vec<HeatmapSpec> {
    vec![
        sentence_figure("sentence A".into(), &p.a),
        sentence_figure("sentence B".into(), &p.b),
        HeatmapSpec::new(
            "phrase vectors and delta",
            vec!["A".into(), "B".into(), "delta".into()],
            vec![p.a.phrase.clone(), p.b.phrase.clone(), p.delta.clone()],
            ColorMode::SignedDiverging,
        ),
    ]
}

fn num(v: f64) -> String {
    format!(r#"<td class="num">{}</td>"#, fmt_num(v))
}

fn int(v: impl std::fmt::Display) -> String {
    format!(r#"<td class="num">{v}</td>"#)
}

fn text(v: &str) -> String {
    format!("<td>{}</td>", escape(v))
}

fn table(h: &mut String, head: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
    h.push_str("<table>\n<tr>");
    for c in head {
        let _ = write!(h, "<th>{}</th>", escape(c));
    }
    h.push_str("</tr>\n");
    for r in rows {
        let _ = writeln!(h, "<tr>{}</tr>", r.concat());
    }
    h.push_str("</table>\n");
}

fn opt_num(v: Option<f64>) -> String {
    v.map_or_else(|| text("n/a"), num)
}

fn artifact_tables(h: &mut String, a: &Artifact) {
    match a {
        Artifact::Train(r) => {
            table(
                h,
                &["best epoch", "best validation accuracy", "test accuracy", "stopped early"],
                [vec![
                    int(r.best_epoch),
                    num(r.best_val_accuracy),
                    opt_num(r.test_accuracy),
                    text(&r.stopped_early.to_string()),
                ]],
            );
            table(
                h,
                &["epoch", "train loss", "validation accuracy"],
                r.epochs
                    .iter()
                    .map(|e| vec![int(e.epoch), num(e.train_loss), num(e.val_accuracy)]),
            );
        }
        Artifact::Evaluation(e) => table(
            h,
            &["split", "examples", "accuracy"],
            [vec![text(&e.split), int(e.examples), num(e.accuracy)]],
        ),
        Artifact::Attribution(r) => {
            let _ = writeln!(
                h,
                "<p>{} <code>{}</code>, class {} ({}), predicted {}</p>",
                escape(r.method.as_str()),
                escape(&r.tokens.join(" ")),
                r.class,
                escape(&r.class_name),
                r.predicted
            );
            table(
                h,
                &["index", "token", "score"],
                r.token_records
                    .iter()
                    .map(|t| vec![int(t.index), text(&t.token), num(t.score)]),
            );
        }
        Artifact::Dominance(d) => {
            table(
                h,
                &["rank", "tag", "mean", "count"],
                d.ranking.iter().enumerate().map(|(i, s)| {
                    vec![int(i + 1), text(s.tag.as_str()), num(s.mean), int(s.count)]
                }),
            );
            if !d.absent.is_empty() {
                let names: Vec<&str> = d.absent.iter().map(|t| t.as_str()).collect();
                let _ = writeln!(h, "<p>Not observed: {}</p>", escape(&names.join(" ")));
            }
        }
        Artifact::Agreement(g) => {
            table(h, &["spearman rho", "tags compared"], [vec![num(g.spearman_rho), int(g.tags_compared)]]);
            table(
                h,
                &["k", "shared", "fraction"],
                g.top_k_overlap
                    .iter()
                    .map(|o| vec![int(o.k), int(o.shared), num(o.fraction)]),
            );
        }
        Artifact::Pair(p) => pair_table(h, p),
        Artifact::Intensity(i) => {
            pair_table(h, &i.pair);
            table(
                h,
                &["base L1", "intensified L1", "intensified"],
                [vec![num(i.base_l1), num(i.intensified_l1), text(&i.intensified.to_string())]],
            );
        }
        Artifact::Clauses(c) => table(
            h,
            &["clause 1", "clause 2", "aggregate 1", "aggregate 2", "dominant", "sentence predicted"],
            [vec![
                text(&c.clause_1.to_string()),
                text(&c.clause_2.to_string()),
                num(c.aggregate_1),
                num(c.aggregate_2),
                int(c.dominant_clause),
                int(c.sentence_predicted),
            ]],
        ),
        Artifact::Composition(c) => table(
            h,
            &["phrase", "aggregate", "predicted"],
            c.clauses
                .iter()
                .chain(std::iter::once(&c.combined))
                .map(|s| vec![text(&s.tokens.join(" ")), num(s.aggregate), int(s.predicted)]),
        ),
        Artifact::Triage(t) => table(
            h,
            &["id", "gold", "predicted", "sentence"],
            t.items.iter().map(|i| {
                let name = |c: usize| t.label_names.get(c).map_or("?", String::as_str);
                vec![
                    text(&i.id),
                    text(name(i.gold)),
                    text(name(i.predicted)),
                    text(&i.tokens.join(" ")),
                ]
            }),
        ),
        Artifact::Tally(d) => table(
            h,
            &["category", "count", "percent", "display"],
            d.categories
                .iter()
                .map(|(c, s)| vec![text(c.as_str()), int(s.count), num(s.percent), num(s.display)]),
        ),
    }
}

fn pair_table(h: &mut String, p: &PairComparison) {
    table(
        h,
        &["sentence", "predicted", "L1"],
        [&p.a, &p.b]
            .into_iter()
            .map(|v| vec![text(&v.tokens.join(" ")), int(v.predicted), num(v.l1)]),
    );
    table(
        h,
        &["reversal count", "magnitude ratio"],
        [vec![int(p.reversal_count), opt_num(p.magnitude_ratio)]],
    );
}

const STYLE: &str = "body{font-family:sans-serif;margin:2em;max-width:110em}\
table{border-collapse:collapse;margin:0.5em 0}\
td,th{border:1px solid #cccccc;padding:2px 6px}\
td.num{text-align:right;font-family:monospace}\
figure{overflow-x:auto;margin:0.5em 0}";

/// Writes `index.html`, `report.json` and `figures/*.svg` into `out_dir`.
/// Returns the paths written, in write order.
pub fn render_report(bundle: &ReportBundle, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let fig_dir = out_dir.join("figures");
    fs::create_dir_all(&fig_dir).map_err(|e| Error::io(&fig_dir, e))?;
    // stale figures from an earlier render would make reruns differ
    for entry in fs::read_dir(&fig_dir).map_err(|e| Error::io(&fig_dir, e))? {
        let p = entry.map_err(|e| Error::io(&fig_dir, e))?.path();
        if p.extension().is_some_and(|x| x == "svg") {
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }

    let mut written = Vec::new();
    let mut figures = Vec::new();
    let mut h = String::new();
    let _ = writeln!(
        h,
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n<title>{}</title>\n<style>{STYLE}</style>\n</head>\n<body>\n<h1>{}</h1>",
        escape(&bundle.title),
        escape(&bundle.title)
    );
    if bundle.artifacts.is_empty() {
        h.push_str("<p class=\"notice\">No results to show.</p>\n");
    }
    let specs: Vec<Vec<HeatmapSpec>> = bundle.artifacts.iter().map(figures_for).collect();
    for (i, (a, specs)) in bundle.artifacts.iter().zip(&specs).enumerate() {
        let _ = writeln!(h, "<section id=\"artifact-{i}\">\n<h2>{} {}</h2>", i + 1, escape(a.kind()));
        artifact_tables(&mut h, a);
        for (k, spec) in specs.iter().enumerate() {
            let svg = render_svg(spec)?;
            let name = format!("{:03}-{}-{}.svg", i + 1, a.kind(), k + 1);
            let path = fig_dir.join(&name);
            fs::write(&path, &svg).map_err(|e| Error::io(&path, e))?;
            written.push(path);
            let _ = writeln!(
                h,
                "<figure>\n{}<figcaption><a href=\"figures/{name}\">{}</a></figcaption>\n</figure>",
                svg,
                escape(&spec.title)
            );
            let scale = spec.scale();
            figures.push(FigureRecord {
                file: format!("figures/{name}"),
                artifact: i,
                legend_min: match spec.mode {
                    ColorMode::AbsoluteSequential => 0.0,
                    ColorMode::SignedDiverging => -scale,
                },
                legend_max: scale,
                spec,
            });
        }
        h.push_str("</section>\n");
    }
    h.push_str("</body>\n</html>\n");

    let index = out_dir.join("index.html");
    fs::write(&index, &h).map_err(|e| Error::io(&index, e))?;
    written.push(index);
    let json = out_dir.join("report.json");
    let mut body = serde_json::to_string_pretty(&ReportJson {
        title: &bundle.title,
        artifacts: &bundle.artifacts,
        figures,
    })?;
    body.push('\n');
    fs::write(&json, body).map_err(|e| Error::io(&json, e))?;
    written.push(json);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_bundle_has_notice() {
        let dir = tempfile::tempdir().unwrap();
        render_report(&ReportBundle::new("empty"), dir.path()).unwrap();
        let html = fs::read_to_string(dir.path().join("index.html")).unwrap();
        assert!(html.starts_with("<!DOCTYPE html>"));
        assert!(html.contains("No results"));
        assert!(html.trim_end().ends_with("</html>"));
    }

    #[test]
    fn number_format_matches_json() {
        for v in [0.0, 0.1, -2.5, 1e-7, 123456.789, 1.0 / 3.0] {
            assert_eq!(fmt_num(v), serde_json::to_value(v).unwrap().to_string());
        }
    }

    #[test]
    fn artifact_round_trip() {
        let a = Artifact::Evaluation(EvaluationSummary {
            split: "test".into(),
            examples: 4,
            accuracy: 0.75,
        });
        let back: Artifact = serde_json::from_str(&a.to_json().unwrap()).unwrap();
        assert_eq!(a, back);
        assert!(a.to_json().unwrap().contains("\"kind\": \"evaluation\""));
    }
}
