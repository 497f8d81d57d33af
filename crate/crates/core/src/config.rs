//! Run configuration shared by training and evaluation, stored as TOML.
//!
//! ```toml
//! task = "sst_coarse"        # sst_coarse | sst_fine | subjectivity
//! seed = 42
//!
//! [data]
//! sst_dir = "data/sst"       # holds train.txt, dev.txt, test.txt
//! subj_dir = "data/subj"     # holds the subjective and objective files
//! tag_lexicon = "lexicon.tsv"
//!
//! [model]
//! embed_dim = 128
//!
//! [train]
//! optimizer = "adam"
//! ```
//!
//! Every key is optional. `CONVIS_SST_DIR`, `CONVIS_SUBJ_DIR` and
//! `CONVIS_TAG_LEXICON` override the matching data paths.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{lowercase_raw, parse_sst_trees, subj, Corpus, RawExample, TagLexicon, Task, Vocabulary};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::numerics::{Nonlinearity, Rng};
use crate::training::TrainConfig;

/// RNG stream used to shuffle and split the subjectivity corpus.
pub const SPLIT_STREAM: u64 = 1;
/// RNG stream used for parameter initialization.
pub const INIT_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub sst_dir: Option<PathBuf>,
    pub sst_train: String,
    pub sst_dev: String,
    pub sst_test: String,
    pub subj_dir: Option<PathBuf>,
    pub subj_subjective: String,
    pub subj_objective: String,
    pub subj_split: [usize; 3],
    pub tag_lexicon: Option<PathBuf>,
    pub lowercase: bool,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            sst_dir: None,
            sst_train: "train.txt".into(),
            sst_dev: "dev.txt".into(),
            sst_test: "test.txt".into(),
            subj_dir: None,
            subj_subjective: "quote.tok.gt9.5000".into(),
            subj_objective: "plot.tok.gt9.5000".into(),
            subj_split: [8000, 500, 500],
            tag_lexicon: None,
            lowercase: false,
        }
    }
}

/// Model fields that are not derived from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub embed_dim: usize,
    pub kernel_sizes: Vec<usize>,
    pub stride: usize,
    pub filters_per_kernel: usize,
    pub nonlinearity: Nonlinearity,
}

impl Default for ModelSection {
    fn default() -> Self {
        let m = ModelConfig::new(1, 2);
        Self {
            embed_dim: m.embed_dim,
            kernel_sizes: m.kernel_sizes,
            stride: m.stride,
            filters_per_kernel: m.filters_per_kernel,
            nonlinearity: m.nonlinearity,
        }
    }
}

impl ModelSection {
    pub fn to_config(&self, vocab_size: usize, num_classes: usize) -> ModelConfig {
        ModelConfig {
            vocab_size,
            embed_dim: self.embed_dim,
            kernel_sizes: self.kernel_sizes.clone(),
            stride: self.stride,
            filters_per_kernel: self.filters_per_kernel,
            num_classes,
            nonlinearity: self.nonlinearity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    /// Seeds initialization, data splitting and shuffling. Overrides
    /// `train.seed`.
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::SstCoarse,
            seed: 42,
            data: DataConfig::default(),
            model: ModelSection::default(),
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut c: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.train.seed = c.seed;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.model.to_config(1, 2).validate()
    }

    /// Applies environment overrides through `var`, which maps a variable
    /// name to its value.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) {
        if let Some(v) = var("CONVIS_SST_DIR") {
            self.data.sst_dir = Some(v.into());
        }
        if let Some(v) = var("CONVIS_SUBJ_DIR") {
            self.data.subj_dir = Some(v.into());
        }
        if let Some(v) = var("CONVIS_TAG_LEXICON") {
            self.data.tag_lexicon = Some(v.into());
        }
    }

    pub fn lexicon(&self) -> Result<TagLexicon> {
        match &self.data.tag_lexicon {
            Some(p) => TagLexicon::load(p),
            None => Ok(TagLexicon::new()),
        }
    }

    /// Reads the configured task's train, validation and test splits.
    pub fn load_raw(&self) -> Result<(Vec<RawExample>, Vec<RawExample>, Vec<RawExample>)> {
        let d = &self.data;
        match self.task {
            Task::SstCoarse | Task::SstFine => {
                let dir = d
                    .sst_dir
                    .as_ref()
                    .ok_or_else(|| Error::Config("data.sst_dir is not set (or set CONVIS_SST_DIR)".into()))?;
                Ok((
                    parse_sst_trees(&dir.join(&d.sst_train), self.task, true)?,
                    parse_sst_trees(&dir.join(&d.sst_dev), self.task, false)?,
                    parse_sst_trees(&dir.join(&d.sst_test), self.task, false)?,
                ))
            }
            Task::Subjectivity => {
                let dir = d
                    .subj_dir
                    .as_ref()
                    .ok_or_else(|| Error::Config("data.subj_dir is not set (or set CONVIS_SUBJ_DIR)".into()))?;
                let [a, b, c] = d.subj_split;
                subj::load_subjectivity(
                    &dir.join(&d.subj_subjective),
                    &dir.join(&d.subj_objective),
                    &mut Rng::derive(self.seed, SPLIT_STREAM),
                    (a, b, c),
                )
            }
        }
    }

    /// Loads the splits and builds the vocabulary from the training split.
    pub fn load_corpus(&self) -> Result<Corpus> {
        let lexicon = self.lexicon()?;
        let (train, val, test) = self.load_raw()?;
        Corpus::from_raw(self.task, train, val, test, &lexicon, self.data.lowercase)
    }

    /// Loads the splits and encodes them with an existing vocabulary.
    pub fn load_corpus_with_vocab(&self, vocab: Vocabulary) -> Result<Corpus> {
        let lexicon = self.lexicon()?;
        let (mut train, mut val, mut test) = self.load_raw()?;
        if self.data.lowercase {
            train = lowercase_raw(train);
            val = lowercase_raw(val);
            test = lowercase_raw(test);
        }
        Corpus::with_vocab(self.task, vocab, train, val, test, &lexicon)
    }

    pub fn model_config(&self, corpus: &Corpus) -> ModelConfig {
        self.model.to_config(corpus.vocab.len(), corpus.task.num_classes)
    }
}
