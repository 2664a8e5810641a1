use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("sinkhorn did not converge after {iterations} iterations (max deviation {deviation:e})")]
    Convergence { iterations: usize, deviation: f64 },

    #[error("exact permanent supports M <= {max}, got M = {size}; use MCMC sampling instead")]
    UnsupportedSize { size: usize, max: usize },

    #[error("every permutation has zero weight under the kernel")]
    DegenerateKernel,

    #[error("collapsed weight vector is zero")]
    DegenerateCollapse,

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated at offset {offset}: expected {expected} bytes, found {actual}")]
    Truncated {
        path: PathBuf,
        offset: usize,
        expected: usize,
        actual: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("requested {requested} examples but only {available} are available")]
    Size { requested: usize, available: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
