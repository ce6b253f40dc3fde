//! Offline selection of preference pairs by optimal experimental design.
//!
//! Given contexts with finite sets of embedded completions, [`pipeline::run_odpo`]
//! computes a near-optimal design over pairwise differences, labels
//! `⌈T·π̂_b⌉` duels per arm under a Bradley–Terry model, fits the projected
//! logistic MLE and predicts the best completion per context.
//! [`evaluation`] measures simple regret against the theoretical upper bounds
//! and the two lower-bound constructions.

pub mod cli;
pub mod design;
pub mod error;
pub mod estimator;
pub mod evaluation;
pub mod feedback;
pub mod instance;
pub mod pipeline;
pub mod rng;

pub use error::{OdpoError, Result};
