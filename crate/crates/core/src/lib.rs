//! Annotation difficulty toolkit.
//!
//! - [`corpus`]: tokenized documents, annotation layers, JSONL I/O and a
//!   synthetic corpus generator with planted difficulty.
//! - [`scoring`]: rank correlations, per-sentence difficulty scores and
//!   inter-annotator agreement.
//! - [`tagger`]: a weighted linear-chain CRF over BIO tags and out-of-fold
//!   proxy predictions.
//! - [`difficulty_model`]: regressors that predict difficulty from text.
//! - [`pipeline`]: removal, re-weighting, expert routing, budget curves,
//!   token-level metrics and the sign test.

// Dense numeric loops index several parallel arrays at once.
#![allow(clippy::needless_range_loop)]

pub mod corpus;
pub mod difficulty_model;
pub mod error;
pub mod pipeline;
pub mod scoring;
pub mod tagger;

pub use error::{Error, Result};
