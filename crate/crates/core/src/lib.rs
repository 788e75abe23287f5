//! Dynamic-graph spatial-temporal attention for skeleton-based hand-gesture
//! recognition: a dense f64 tensor substrate with reverse-mode gradients, the
//! masked and per-edge attention formulations, the full classifier, training
//! and evaluation pipelines for the DHG-14/28 and SHREC'17 skeleton datasets,
//! and a benchmark comparing the two attention paths.

pub mod attention;
pub mod bench;
pub mod data;
pub mod embed;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod model;
pub mod report;
pub mod seeding;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
