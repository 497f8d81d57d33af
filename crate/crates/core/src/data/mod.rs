//! Corpora, labels, vocabulary and part-of-speech tags.

pub mod sst;
pub mod subj;
mod tags;
pub mod tokenize;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sst::parse_sst_trees;
pub use subj::load_subjectivity;
pub use tags::{align_sidecar, load_tag_sidecar, parse_tag_sidecar, tag_pos, TagLexicon, UniversalTag};
pub use tokenize::tokenize;
pub use vocab::{Vocabulary, UNK, UNK_TOKEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    SstCoarse,
    SstFine,
    Subjectivity,
}

impl Task {
    pub fn spec(self) -> TaskSpec {
        TaskSpec::new(self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::SstCoarse => "sst_coarse",
            Task::SstFine => "sst_fine",
            Task::Subjectivity => "subjectivity",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sst_coarse" | "coarse" => Ok(Task::SstCoarse),
            "sst_fine" | "fine" => Ok(Task::SstFine),
            "subjectivity" | "subj" => Ok(Task::Subjectivity),
            other => Err(Error::Input(format!("unknown task {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task: Task,
    pub num_classes: usize,
    pub label_names: Vec<String>,
}

impl TaskSpec {
    pub fn new(task: Task) -> Self {
        let names: &[&str] = match task {
            Task::SstCoarse => &["negative", "positive"],
            Task::SstFine => &["very negative", "negative", "neutral", "positive", "very positive"],
            Task::Subjectivity => &["subjective", "objective"],
        };
        Self {
            task,
            num_classes: names.len(),
            label_names: names.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn label_name(&self, class: usize) -> &str {
        self.label_names.get(class).map_or("?", String::as_str)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    SstPhrase,
    SstSentence,
    Subj,
}

/// A labeled token sequence before vocabulary lookup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawExample {
    pub text_tokens: Vec<String>,
    pub label: usize,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub tokens: Vec<usize>,
    pub text_tokens: Vec<String>,
    pub label: usize,
    pub pos_tags: Vec<UniversalTag>,
    pub source: Source,
}

impl Example {
    pub fn from_raw(raw: RawExample, vocab: &Vocabulary, lexicon: &TagLexicon) -> Self {
        let tokens = vocab.encode_all(&raw.text_tokens);
        let pos_tags = tag_pos(&raw.text_tokens, lexicon);
        Self {
            tokens,
            text_tokens: raw.text_tokens,
            label: raw.label,
            pos_tags,
            source: raw.source,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_tagged(&self) -> bool {
        self.pos_tags.len() == self.tokens.len()
    }
}

/// Train/validation/test splits sharing one vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub task: TaskSpec,
    pub vocab: Vocabulary,
    pub train: Vec<Example>,
    pub val: Vec<Example>,
    pub test: Vec<Example>,
}

impl Corpus {
    /// Builds the vocabulary from the training split (first-seen order) and
    /// encodes every split with it.
    pub fn from_raw(
        task: Task,
        train: Vec<RawExample>,
        val: Vec<RawExample>,
        test: Vec<RawExample>,
        lexicon: &TagLexicon,
        lowercase: bool,
    ) -> Result<Self> {
        let (train, val, test) = if lowercase {
            (lowercase_raw(train), lowercase_raw(val), lowercase_raw(test))
        } else {
            (train, val, test)
        };
        let vocab = Vocabulary::build(train.iter().flat_map(|e| e.text_tokens.iter().map(String::as_str)));
        Self::with_vocab(task, vocab, train, val, test, lexicon)
    }

    /// Encodes splits against an existing vocabulary (e.g. from a checkpoint).
    pub fn with_vocab(
        task: Task,
        vocab: Vocabulary,
        train: Vec<RawExample>,
        val: Vec<RawExample>,
        test: Vec<RawExample>,
        lexicon: &TagLexicon,
    ) -> Result<Self> {
        let spec = task.spec();
        let encode = |raw: Vec<RawExample>| -> Result<Vec<Example>> {
            raw.into_iter()
                .map(|r| {
                    if r.label >= spec.num_classes {
                        return Err(Error::Data(format!(
                            "label {} invalid for task {task}",
                            r.label
                        )));
                    }
                    Ok(Example::from_raw(r, &vocab, lexicon))
                })
                .collect()
        };
        let (train, val, test) = (encode(train)?, encode(val)?, encode(test)?);
        Ok(Self {
            task: spec,
            vocab,
            train,
            val,
            test,
        })
    }
}

/// Lowercases every token.
pub fn lowercase_raw(raw: Vec<RawExample>) -> Vec<RawExample> {
    raw.into_iter()
        .map(|mut r| {
            r.text_tokens.iter_mut().for_each(|t| *t = t.to_lowercase());
            r
        })
        .collect()
}

/// Replaces the tags of `examples` with sidecar tags, after checking alignment.
pub fn apply_sidecar(examples: &mut [Example], tags: Vec<Vec<UniversalTag>>) -> Result<()> {
    let seqs: Vec<Vec<&str>> = examples
        .iter()
        .map(|e| e.text_tokens.iter().map(String::as_str).collect())
        .collect();
    let tags = align_sidecar(&seqs, tags)?;
    for (e, t) in examples.iter_mut().zip(tags) {
        e.pos_tags = t;
    }
    Ok(())
}
