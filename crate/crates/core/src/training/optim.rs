use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GradBuffer;
use crate::model::ModelParams;
use crate::numerics::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPSILON: f64 = 1e-8;

// below this many values an update runs on the calling thread
const PAR_THRESHOLD: usize = 1 << 16;

#[derive(Debug, Clone)]
pub enum Optimizer {
    Sgd {
        lr: f64,
    },
    Adam {
        lr: f64,
        step: i32,
        first: Vec<Matrix>,
        second: Vec<Matrix>,
    },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, params: &ModelParams) -> Self {
        match kind {
            OptimizerKind::Sgd => Optimizer::Sgd { lr },
            OptimizerKind::Adam => {
                let zeros: Vec<Matrix> = params
                    .tensors()
                    .iter()
                    .map(|t| Matrix::zeros(t.rows(), t.cols()))
                    .collect();
                Optimizer::Adam {
                    lr,
                    step: 0,
                    first: zeros.clone(),
                    second: zeros,
                }
            }
        }
    }

    /// Applies one update. Every elementwise update is independent, so
    /// splitting large tensors across threads does not change the result.
    pub fn step(&mut self, params: &mut ModelParams, grads: &GradBuffer) {
        match self {
            Optimizer::Sgd { lr } => {
                let lr = *lr;
                for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
                    update(p.as_mut_slice(), g.as_slice(), |p, g| *p -= lr * g);
                }
            }
            Optimizer::Adam {
                lr,
                step,
                first,
                second,
            } => {
                *step += 1;
                let lr = *lr;
                let c1 = 1.0 - BETA1.powi(*step);
                let c2 = 1.0 - BETA2.powi(*step);
                for (((p, g), m), v) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(grads.tensors())
                    .zip(first.iter_mut())
                    .zip(second.iter_mut())
                {
                    adam_update(p.as_mut_slice(), g.as_slice(), m.as_mut_slice(), v.as_mut_slice(), lr, c1, c2);
                }
            }
        }
    }
}

fn update(p: &mut [f64], g: &[f64], f: impl Fn(&mut f64, f64) + Sync) {
    if p.len() >= PAR_THRESHOLD {
        p.par_iter_mut().zip(g.par_iter()).for_each(|(p, &g)| f(p, g));
    } else {
        p.iter_mut().zip(g).for_each(|(p, &g)| f(p, g));
    }
}

fn adam_update(p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64], lr: f64, c1: f64, c2: f64) {
    let one = |p: &mut f64, g: f64, m: &mut f64, v: &mut f64| {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let mhat = *m / c1;
        let vhat = *v / c2;
        *p -= lr * mhat / (vhat.sqrt() + EPSILON);
    };
    if p.len() >= PAR_THRESHOLD {
        p.par_iter_mut()
            .zip(g.par_iter())
            .zip(m.par_iter_mut())
            .zip(v.par_iter_mut())
            .for_each(|(((p, &g), m), v)| one(p, g, m, v));
    } else {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            one(p, g, m, v);
        }
    }
}
