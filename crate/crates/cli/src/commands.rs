use std::collections::HashSet;
use std::fs;
use std::path::Path;

use convis::analysis::{
    compare_intensity, compare_pair, compose_check, decompose_clauses, dominance, method_agreement, tally_errors,
    triage_errors, Sentence,
};
use convis::attribution::{explain, AttributionRecord};
use convis::config::RunConfig;
use convis::data::{apply_sidecar, load_tag_sidecar, Corpus, TagLexicon, UNK_TOKEN};
use convis::model::{fingerprint, save_checkpoint, Checkpoint, Model};
use convis::pipeline::{checkpoint_config, checkpoint_vocab, train_from_config};
use convis::report::{figures_for, render_report, render_svg, Artifact, EvaluationSummary, ReportBundle, TriageBundle};
use convis::training::evaluate;
use convis::{Error, Result};

use crate::output::{create_dir, emit, write_file, RunManifest};
use crate::Command;

fn env_var(k: &str) -> Option<String> {
    std::env::var(k).ok().filter(|v| !v.is_empty())
}

fn read_config(path: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.apply_env(env_var);
    Ok(cfg)
}

/// A checkpoint together with what the analysis commands need from it.
struct Loaded {
    ckpt: Checkpoint,
    fingerprint: String,
    config: RunConfig,
}

impl Loaded {
    fn open(path: &Path, config: Option<&Path>) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        let ckpt = Checkpoint::from_bytes(&bytes)?;
        checkpoint_vocab(&ckpt)?;
        let config = match config {
            Some(p) => {
                let c = read_config(Some(p))?;
                if ckpt.meta.task.is_some_and(|t| t != c.task) {
                    return Err(Error::Data(format!(
                        "config task {} differs from the checkpoint's task",
                        c.task
                    )));
                }
                c
            }
            None => {
                let mut c = checkpoint_config(&ckpt)?;
                c.apply_env(env_var);
                c
            }
        };
        Ok(Self {
            fingerprint: fingerprint(&bytes),
            ckpt,
            config,
        })
    }

    fn model(&self) -> &Model {
        &self.ckpt.model
    }

    fn sentence(&self, text: &str) -> Result<Sentence> {
        let vocab = self.ckpt.meta.vocab.as_ref().expect("checked on open");
        Sentence::encode(text, vocab, self.config.data.lowercase)
    }

    fn corpus(&self) -> Result<Corpus> {
        let vocab = self.ckpt.meta.vocab.clone().expect("checked on open");
        self.config.load_corpus_with_vocab(vocab)
    }

    fn label_names(&self) -> Vec<String> {
        self.config.task.spec().label_names
    }

    fn manifest(&self, command: &str) -> RunManifest {
        let mut m = RunManifest::new(command);
        m.seed = Some(self.config.seed);
        m.model_fingerprint = Some(self.fingerprint.clone());
        m
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train {
            config,
            out,
            seed,
            jobs,
            print_config,
        } => {
            let mut cfg = read_config(config.as_deref())?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.train.seed = cfg.seed;
            if let Some(j) = jobs {
                cfg.train.jobs = j;
            }
            if print_config {
                print!("{}", cfg.to_toml());
                return Ok(());
            }
            let out = out.expect("clap requires --out without --print-config");
            let corpus = cfg.load_corpus()?;
            eprintln!(
                "task {}: {} train, {} validation, {} test examples, vocabulary {}",
                cfg.task,
                corpus.train.len(),
                corpus.val.len(),
                corpus.test.len(),
                corpus.vocab.len()
            );
            let (ckpt, report) = train_from_config(&cfg, &corpus, |e| {
                eprintln!(
                    "epoch {:>3}  loss {:.5}  validation accuracy {:.4}",
                    e.epoch, e.train_loss, e.val_accuracy
                )
            })?;
            eprintln!(
                "best epoch {} (validation {:.4}), test {}, {:.1}s",
                report.best_epoch,
                report.best_val_accuracy,
                report.test_accuracy.map_or("n/a".into(), |a| format!("{a:.4}")),
                report.wall_clock_seconds
            );
            create_dir(&out)?;
            let ckpt_path = out.join("model.ckpt");
            let bytes = save_checkpoint(&ckpt, &ckpt_path)?;
            let report_path = write_file(&out.join("train.json"), Artifact::Train(report).to_json()?)?;
            let mut m = RunManifest::new("train");
            m.config_path = config.map(|p| p.to_string_lossy().into_owned());
            m.seed = Some(cfg.seed);
            m.model_fingerprint = Some(fingerprint(&bytes));
            m.write(&out, &[ckpt_path, report_path])
        }

        Command::Eval {
            model,
            split,
            config,
            out,
        } => {
            let l = Loaded::open(&model.model, config.as_deref())?;
            let corpus = l.corpus()?;
            let examples = match split.as_str() {
                "train" => &corpus.train,
                "val" => &corpus.val,
                _ => &corpus.test,
            };
            let ev = evaluate(l.model(), examples)?;
            let a = Artifact::Evaluation(EvaluationSummary {
                split,
                examples: examples.len(),
                accuracy: ev.accuracy,
            });
            emit(&a, out.as_deref(), l.manifest("eval"))
        }

        Command::Attribute {
            model,
            text,
            method,
            class,
            reduction,
            raw,
            svg,
            out,
        } => {
            let l = Loaded::open(&model.model, None)?;
            let s = l.sentence(&text)?;
            let red = reduction.unwrap_or(method.default_reduction());
            let exp = explain(l.model(), &s.ids, method, class, red, !raw)?;
            let mut tokens = s.text_tokens.clone();
            tokens.resize(exp.scores.len(), UNK_TOKEN.to_string());
            let name = l.config.task.spec().label_name(exp.class).to_string();
            let a = Artifact::Attribution(AttributionRecord::new(tokens, exp, name, l.fingerprint.clone()));
            if let Some(path) = svg {
                let spec = figures_for(&a).into_iter().next().expect("attribution always has a figure");
                write_file(&path, render_svg(&spec)?)?;
            }
            emit(&a, out.as_deref(), l.manifest("attribute"))
        }

        Command::Dominance {
            model,
            task,
            method,
            reduction,
            tags,
            config,
            jobs,
            out,
        } => {
            let l = Loaded::open(&model.model, config.as_deref())?;
            if let Some(t) = task {
                if t != l.config.task {
                    return Err(Error::Data(format!(
                        "checkpoint was trained for {}, not {t}",
                        l.config.task
                    )));
                }
            }
            let mut corpus = l.corpus()?;
            if let Some(p) = tags {
                apply_sidecar(&mut corpus.test, load_tag_sidecar(&p)?)?;
            }
            let r = dominance(l.model(), &corpus.test, method, reduction, jobs)?;
            emit(&Artifact::Dominance(r), out.as_deref(), l.manifest("dominance"))
        }

        Command::Agree { a, b, out } => {
            let load = |p: &Path| -> Result<_> {
                let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                match serde_json::from_str::<Artifact>(&text)? {
                    Artifact::Dominance(d) => Ok(d),
                    other => Err(Error::Data(format!(
                        "{} holds a {} result, not a dominance report",
                        p.display(),
                        other.kind()
                    ))),
                }
            };
            let ag = method_agreement(&load(&a)?, &load(&b)?)?;
            emit(&Artifact::Agreement(ag), out.as_deref(), RunManifest::new("agree"))
        }

        Command::Compare {
            model,
            a,
            b,
            intensity,
            out,
        } => {
            let l = Loaded::open(&model.model, None)?;
            let (sa, sb) = (l.sentence(&a)?, l.sentence(&b)?);
            let art = if intensity {
                Artifact::Intensity(compare_intensity(l.model(), &sa, &sb)?)
            } else {
                Artifact::Pair(compare_pair(l.model(), &sa, &sb)?)
            };
            emit(&art, out.as_deref(), l.manifest("compare"))
        }

        Command::Decompose {
            model,
            sentence,
            clause1,
            clause2,
            aggregate,
            out,
        } => {
            let l = Loaded::open(&model.model, None)?;
            let s = l.sentence(&sentence)?;
            let d = decompose_clauses(l.model(), &s, clause1, clause2, aggregate)?;
            emit(&Artifact::Clauses(d), out.as_deref(), l.manifest("decompose"))
        }

        Command::Compose {
            model,
            clauses,
            combined,
            aggregate,
            out,
        } => {
            let l = Loaded::open(&model.model, None)?;
            let clauses = clauses.iter().map(|c| l.sentence(c)).collect::<Result<Vec<_>>>()?;
            let r = compose_check(l.model(), &clauses, &l.sentence(&combined)?, aggregate)?;
            emit(&Artifact::Composition(r), out.as_deref(), l.manifest("compose"))
        }

        Command::Triage {
            model,
            out,
            config,
            jobs,
        } => {
            let l = Loaded::open(&model.model, config.as_deref())?;
            let corpus = l.corpus()?;
            let items = triage_errors(l.model(), &corpus.test, jobs)?;
            eprintln!("{} of {} test examples misclassified", items.len(), corpus.test.len());
            let a = Artifact::Triage(TriageBundle {
                label_names: l.label_names(),
                items,
            });
            emit(&a, Some(&out), l.manifest("triage"))
        }

        Command::Tally {
            annotations,
            triage,
            out,
        } => {
            let text = fs::read_to_string(&annotations).map_err(|e| Error::io(&annotations, e))?;
            let known = match triage {
                Some(p) => {
                    let t = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    match serde_json::from_str::<Artifact>(&t)? {
                        Artifact::Triage(b) => Some(b.items.into_iter().map(|i| i.id).collect::<HashSet<_>>()),
                        other => {
                            return Err(Error::Data(format!(
                                "{} holds a {} result, not a triage bundle",
                                p.display(),
                                other.kind()
                            )))
                        }
                    }
                }
                None => None,
            };
            let d = tally_errors(&text, known.as_ref())?;
            let mut m = RunManifest::new("tally");
            m.config_path = Some(annotations.to_string_lossy().into_owned());
            emit(&Artifact::Tally(d), out.as_deref(), m)
        }

        Command::Report { bundle, out } => {
            let b = ReportBundle::load_dir(&bundle)?;
            let written = render_report(&b, &out)?;
            eprintln!("wrote {} files to {}", written.len(), out.display());
            RunManifest::new("report").write(&out, &written)
        }

        Command::Lexicon { tagged, out } => {
            let text = fs::read_to_string(&tagged).map_err(|e| Error::io(&tagged, e))?;
            let lex = TagLexicon::from_tagged_text(&text)?;
            let mut buf = Vec::new();
            lex.write_to(&mut buf).map_err(|e| Error::io(&out, e))?;
            write_file(&out, buf)?;
            eprintln!("{} word forms", lex.len());
            Ok(())
        }
    }
}
