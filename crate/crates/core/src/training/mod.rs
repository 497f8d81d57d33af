//! Minibatch training with validation-based early stopping.

mod loss;
mod optim;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Example;
use crate::error::{Error, Result};
use crate::model::{Backward, Model, ModelParams};
use crate::numerics::{Matrix, Rng};

pub use loss::cross_entropy;
pub use optim::{Optimizer, OptimizerKind};

/// RNG stream used for per-epoch shuffling, distinct from data splitting.
pub const SHUFFLE_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub shuffle: bool,
    /// Worker threads for per-example gradients. Gradients are summed in
    /// example order, so results do not depend on this value.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            batch_size: 50,
            max_epochs: 30,
            patience: 5,
            seed: 42,
            shuffle: true,
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub test_accuracy: Option<f64>,
    pub stopped_early: bool,
    /// Not serialized, so that reports of identical runs compare equal byte
    /// for byte; the CLI records it in the run manifest instead.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// Dense gradient storage shaped like [`ModelParams`].
///
/// Embedding rows are written sparsely; only rows that received gradient
/// are cleared on reset.
#[derive(Debug, Clone)]
pub struct GradBuffer {
    tensors: Vec<Matrix>,
    touched: Vec<usize>,
    n_kernels: usize,
}

impl GradBuffer {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            tensors: params
                .tensors()
                .iter()
                .map(|t| Matrix::zeros(t.rows(), t.cols()))
                .collect(),
            touched: Vec::new(),
            n_kernels: params.convs.len(),
        }
    }

    pub fn tensors(&self) -> &[Matrix] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Matrix] {
        &mut self.tensors
    }

    pub fn reset(&mut self) {
        let (emb, rest) = self.tensors.split_first_mut().unwrap();
        for &r in &self.touched {
            emb.row_mut(r).fill(0.0);
        }
        self.touched.clear();
        rest.iter_mut().for_each(|t| t.fill(0.0));
    }

    pub fn accumulate(&mut self, back: &Backward, tokens: &[usize]) {
        let emb = &mut self.tensors[0];
        for (i, &tok) in tokens.iter().enumerate() {
            let g = back.inputs.row(i);
            if g.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (a, b) in emb.row_mut(tok).iter_mut().zip(g) {
                *a += b;
            }
            self.touched.push(tok);
        }
        for k in 0..self.n_kernels {
            add(&mut self.tensors[1 + 2 * k], &back.params.conv_weights[k]);
            add(&mut self.tensors[2 + 2 * k], &back.params.conv_bias[k]);
        }
        let n = self.tensors.len();
        add(&mut self.tensors[n - 2], &back.params.linear_weights);
        add(&mut self.tensors[n - 1], &back.params.linear_bias);
    }

    pub fn scale(&mut self, s: f64) {
        let (emb, rest) = self.tensors.split_first_mut().unwrap();
        self.touched.sort_unstable();
        self.touched.dedup();
        for &r in &self.touched {
            emb.row_mut(r).iter_mut().for_each(|v| *v *= s);
        }
        rest.iter_mut().for_each(|t| t.scale(s));
    }
}

fn add(dst: &mut Matrix, src: &Matrix) {
    for (a, b) in dst.as_mut_slice().iter_mut().zip(src.as_slice()) {
        *a += b;
    }
}

/// Loss and gradients for one example.
pub fn example_gradient(model: &Model, example: &Example) -> Result<(f64, Backward, Vec<usize>)> {
    let tokens = model.prepare(&example.tokens).into_owned();
    let trace = model.forward(&tokens)?;
    let (loss, grad) = cross_entropy(&trace.logits, example.label);
    let back = model.backward(&trace, &tokens, &grad)?;
    Ok((loss, back, tokens))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    pub predictions: Vec<usize>,
}

/// Accuracy and argmax predictions (lowest class index on ties).
pub fn evaluate(model: &Model, examples: &[Example]) -> Result<Evaluation> {
    if examples.is_empty() {
        return Err(Error::Input("cannot evaluate on an empty example set".into()));
    }
    let predictions = examples
        .par_iter()
        .map(|e| model.predict(&e.tokens))
        .collect::<Result<Vec<_>>>()?;
    let correct = predictions
        .iter()
        .zip(examples)
        .filter(|(p, e)| **p == e.label)
        .count();
    Ok(Evaluation {
        accuracy: correct as f64 / examples.len() as f64,
        predictions,
    })
}

/// Trains until validation accuracy stalls for `patience` epochs or
/// `max_epochs` is reached, and returns the best-validation model.
pub fn train(
    model: Model,
    train_set: &[Example],
    val_set: &[Example],
    test_set: Option<&[Example]>,
    config: &TrainConfig,
) -> Result<(Model, TrainReport)> {
    train_with_progress(model, train_set, val_set, test_set, config, |_| {})
}

/// [`train`] that reports each finished epoch to `progress`.
pub fn train_with_progress(
    mut model: Model,
    train_set: &[Example],
    val_set: &[Example],
    test_set: Option<&[Example]>,
    config: &TrainConfig,
    mut progress: impl FnMut(&EpochStats),
) -> Result<(Model, TrainReport)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Input("training and validation splits must be nonempty".into()));
    }
    let k = model.config.num_classes;
    if let Some(e) = train_set.iter().chain(val_set).find(|e| e.label >= k) {
        return Err(Error::Input(format!("label {} but the model has {k} classes", e.label)));
    }

    let started = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let mut rng = Rng::derive(config.seed, SHUFFLE_STREAM);
    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate, &model.params);
    let mut grads = GradBuffer::zeros_like(&model.params);
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    let mut epochs = Vec::new();
    let mut best: Option<(usize, f64, ModelParams)> = None;
    let mut stale = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        if config.shuffle {
            rng.shuffle(&mut order);
        }
        let mut total_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let results: Vec<Result<(f64, Backward, Vec<usize>)>> = if config.jobs > 1 {
                pool.install(|| batch.par_iter().map(|&i| example_gradient(&model, &train_set[i])).collect())
            } else {
                batch.iter().map(|&i| example_gradient(&model, &train_set[i])).collect()
            };
            grads.reset();
            let mut batch_loss = 0.0;
            for r in results {
                let (loss, back, tokens) = r?;
                batch_loss += loss;
                grads.accumulate(&back, &tokens);
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: b + 1,
                    loss: batch_loss,
                });
            }
            total_loss += batch_loss;
            grads.scale(1.0 / batch.len() as f64);
            pool.install(|| optimizer.step(&mut model.params, &grads));
        }

        let val_accuracy = pool.install(|| evaluate(&model, val_set))?.accuracy;
        let stats = EpochStats {
            epoch,
            train_loss: total_loss / train_set.len() as f64,
            val_accuracy,
        };
        progress(&stats);
        epochs.push(stats);
        if best.as_ref().map_or(true, |(_, acc, _)| val_accuracy > *acc) {
            best = Some((epoch, val_accuracy, model.params.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                stopped_early = epoch < config.max_epochs;
                break;
            }
        }
    }

    let (best_epoch, best_val_accuracy, params) = best.expect("at least one epoch ran");
    model.params = params;
    let test_accuracy = match test_set {
        Some(t) if !t.is_empty() => Some(pool.install(|| evaluate(&model, t))?.accuracy),
        _ => None,
    };
    Ok((
        model,
        TrainReport {
            epochs,
            best_epoch,
            best_val_accuracy,
            test_accuracy,
            stopped_early,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        },
    ))
}
