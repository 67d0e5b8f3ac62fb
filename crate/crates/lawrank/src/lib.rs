//! Legal-document retrieval and training-data pipeline engine.
//!
//! The pipeline: ingest cases or articles into a paragraph-segmented
//! store, prune the candidate space by whole-case BM25, score paragraph
//! pairs lexically and semantically, fuse the two channels with a convex
//! weight, and aggregate to a case ranking. Around it sit the
//! training-data generators (capped negatives, sliding-window chunks,
//! silver supporting pairs, self-labeled refinement, cross-lingual
//! next/neighbor-sentence pairs), model ensembling, and retrieval metrics.
//!
//! Score arithmetic is generic over [`num::Real`] (`f32` or `f64`); the
//! pipeline entry points use the [`Score`] alias below.

pub mod chunking;
pub mod corpus;
pub mod ensemble;
pub mod error;
pub mod fusion;
pub mod lexical;
pub mod metrics;
pub mod num;
pub mod paralaw;
pub mod scorer;
pub mod trainpairs;

pub use error::{Error, Result};

/// Default scalar for all pipeline scores.
pub type Score = f64;

/// Concrete aliases for the generic score types.
pub type ScoreMatrixF64 = fusion::ScoreMatrix<f64>;
pub type ScoreMatrixF32 = fusion::ScoreMatrix<f32>;
pub type Bm25ParamsF64 = lexical::Bm25Params<f64>;
pub type Bm25ParamsF32 = lexical::Bm25Params<f32>;
pub type FusionConfigF64 = fusion::FusionConfig<f64>;
pub type FusionConfigF32 = fusion::FusionConfig<f32>;
pub type EnsembleWeightsF64 = ensemble::EnsembleWeights<f64>;
pub type ModelOutputsF64 = ensemble::ModelOutputs<f64>;
