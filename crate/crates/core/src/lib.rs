//! Learned sparse retrieval for long documents.
//!
//! Documents arrive as sequences of independently encoded segments, each a
//! sparse positional weight matrix. The crate scores them with the classic
//! segment aggregations (rep-max, score-max, sum, mean) and with sequential
//! dependence models adapted to sparse weights (exact and soft matching),
//! serves them from a positional impact index, tunes the dependence weights
//! on training triplets and evaluates runs with MRR, NDCG and recall.

pub mod aggregate;
pub mod classic;
pub mod cli;
pub mod error;
pub mod eval;
pub mod index;
pub mod ingest;
pub mod repr;
pub mod sdm;
pub mod segmenter;
pub mod sparse;
pub mod stats;
pub mod sweep;
pub mod synthetic;
pub mod tune;

pub use error::{Error, Result};
pub use repr::{
    DocumentRep, Entry, MatchMode, QueryRep, QueryTerm, SdmParams, SegmentRep, SpanMode, SparseVector, TermId,
};
