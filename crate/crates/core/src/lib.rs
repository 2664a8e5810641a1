//! M-cover permutation routing for learning.
//!
//! A model is replicated `M` times, the inputs of each local computation are
//! read from cover copies chosen by quenched permutations drawn from a mixing
//! kernel, the base learning rule runs unchanged on the lifted objective, and
//! the covers are averaged into a single predictor for evaluation.

pub mod committee;
pub mod data;
pub mod error;
pub mod harness;
pub mod mlp;
pub mod par;
pub mod perceptron;
pub mod routing;
pub mod seed;

pub use error::{Error, Result};
