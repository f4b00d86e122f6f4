//! Synthetic compositional-reasoning tasks and the tooling to reason about
//! what a pattern-matching learner can generalize to from them.
//!
//! The crate is organised around five pieces:
//!
//! - [`task`]: token sets, composition DAGs and explicit primitive lookup
//!   tables, plus evaluation of a composition on an input.
//! - [`dataset`]: in-domain enumeration, training-set sampling, ID/OOD test
//!   construction, and the `<t_i>` text / JSONL formats.
//! - [`coverage`]: functional k-equivalence, substitution graphs, k-coverage
//!   and k-cutoff stratification, with a brute-force definitional oracle.
//! - [`scaling`]: evidence-pair probabilities, k-evidence connectivity
//!   simulation, required-data estimation and power-law fitting.
//! - [`metrics`]: representation metrics computed on supplied numbers
//!   (intra/inter cosine gap, indirect effect, mean reciprocal rank).
//!
//! Numeric code in [`scaling`] and [`metrics`] is generic over a [`Real`]
//! scalar; the aliases below pin the common `f64` / `f32` instantiations.

pub mod coverage;
pub mod dataset;
pub mod metrics;
pub mod rng;
pub mod scalar;
pub mod scaling;
pub mod task;
pub mod unionfind;

pub use scalar::Real;
pub use task::{CompositionStructure, PrimitiveTable, TaskKind, TokenId};

/// Power-law fit in double precision.
pub type PowerLawFit64 = scaling::PowerLawFit<f64>;
/// Labeled vectors in single precision (the on-disk vector format).
pub type VectorSet32 = metrics::LabeledVectorSet<f32>;
/// Labeled vectors in double precision.
pub type VectorSet64 = metrics::LabeledVectorSet<f64>;
/// Score rows in single precision.
pub type ScoreRow32 = metrics::ScoreRow<f32>;
/// Score rows in double precision.
pub type ScoreRow64 = metrics::ScoreRow<f64>;
