//! Text CNN trained from scratch, with convolution-value, saliency and
//! linear-layer attributions, corpus analyses and heatmap reports.

pub mod error;
pub mod numerics;
pub mod data;
pub mod model;
pub mod training;
pub mod attribution;
pub mod analysis;
pub mod report;
pub mod config;
pub mod pipeline;
pub mod toy;

pub use error::{Error, Result};
