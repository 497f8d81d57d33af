//! Glue between a run configuration, a corpus and a checkpoint.

use crate::config::{RunConfig, INIT_STREAM};
use crate::data::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{Checkpoint, CheckpointMeta, Model};
use crate::numerics::Rng;
use crate::training::{train_with_progress, EpochStats, TrainReport};

/// Initializes a model from `cfg`, trains it on `corpus` and packages the
/// best-validation parameters with the vocabulary and configuration.
pub fn train_from_config(
    cfg: &RunConfig,
    corpus: &Corpus,
    progress: impl FnMut(&EpochStats),
) -> Result<(Checkpoint, TrainReport)> {
    cfg.validate()?;
    let model = Model::init(cfg.model_config(corpus), &mut Rng::derive(cfg.seed, INIT_STREAM))?;
    let mut train_cfg = cfg.train.clone();
    train_cfg.seed = cfg.seed;
    let test = (!corpus.test.is_empty()).then_some(corpus.test.as_slice());
    let (model, report) = train_with_progress(model, &corpus.train, &corpus.val, test, &train_cfg, progress)?;
    let meta = CheckpointMeta {
        task: Some(cfg.task),
        vocab: Some(corpus.vocab.clone()),
        run_config: Some(serde_json::to_value(cfg)?),
    };
    Ok((Checkpoint::new(model, meta), report))
}

/// The configuration a checkpoint was trained with, or defaults for its
/// task when it carries none.
pub fn checkpoint_config(ckpt: &Checkpoint) -> Result<RunConfig> {
    let mut cfg = match &ckpt.meta.run_config {
        Some(v) => serde_json::from_value(v.clone())
            .map_err(|e| Error::CorruptCheckpoint(format!("embedded run config: {e}")))?,
        None => RunConfig::default(),
    };
    if let Some(t) = ckpt.meta.task {
        cfg.task = t;
    }
    Ok(cfg)
}

pub fn checkpoint_vocab(ckpt: &Checkpoint) -> Result<&Vocabulary> {
    let v = ckpt
        .meta
        .vocab
        .as_ref()
        .ok_or_else(|| Error::Data("checkpoint carries no vocabulary".into()))?;
    ckpt.expect_vocab_size(v.len())?;
    Ok(v)
}
