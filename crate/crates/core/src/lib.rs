//! Word embeddings trained with CBOW and negative sampling, optionally
//! enriched with the meanings of a word's prefix, root and suffix, plus the
//! intrinsic evaluations used to compare them.
//!
//! The numeric core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the element type used by the command-line tool.

// `!(x > 0)` is used on purpose so that NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod matrix;
pub mod model;
pub mod morphology;
pub mod scalar;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Real;

/// Training and storage precision.
pub type Float = f32;
pub type Embeddings = model::EmbeddingMatrix<Float>;
pub type Vectors = model::WordVectors<Float>;
pub type MorphemeMap = morphology::WordMorphemeMap<Float>;
pub type TrainResult = trainer::TrainOutput<Float>;

pub type Embeddings64 = model::EmbeddingMatrix<f64>;
pub type Vectors64 = model::WordVectors<f64>;
