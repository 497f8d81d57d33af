use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Nonlinearity;

/// Shape and activation of the text CNN.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub kernel_sizes: Vec<usize>,
    pub stride: usize,
    pub filters_per_kernel: usize,
    pub num_classes: usize,
    pub nonlinearity: Nonlinearity,
}

impl ModelConfig {
    pub fn new(vocab_size: usize, num_classes: usize) -> Self {
        Self {
            vocab_size,
            embed_dim: 128,
            kernel_sizes: vec![1],
            stride: 1,
            filters_per_kernel: 100,
            num_classes,
            nonlinearity: Nonlinearity::Tanh,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.vocab_size == 0 {
            return bad("vocab_size must be at least 1");
        }
        if self.embed_dim == 0 {
            return bad("embed_dim must be at least 1");
        }
        if self.kernel_sizes.is_empty() || self.kernel_sizes.contains(&0) {
            return bad("kernel sizes must be nonempty and each at least 1");
        }
        if self.stride == 0 {
            return bad("stride must be at least 1");
        }
        if self.filters_per_kernel == 0 {
            return bad("filters_per_kernel must be at least 1");
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2");
        }
        Ok(())
    }

    /// Total number of feature maps across kernel sizes.
    pub fn feature_maps(&self) -> usize {
        self.kernel_sizes.len() * self.filters_per_kernel
    }

    pub fn max_kernel(&self) -> usize {
        self.kernel_sizes.iter().copied().max().unwrap_or(1)
    }

    /// Number of windows a kernel of width `t` produces over `n` tokens.
    pub fn windows(&self, n: usize, t: usize) -> usize {
        if n < t {
            0
        } else {
            (n - t) / self.stride + 1
        }
    }
}
