//! Person-importance prediction from pairwise crowd judgments.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! pipeline: the annotated-corpus data model and score aggregation
//! ([`corpus`]), per-face feature extraction and pairwise difference
//! composition ([`features`]), a linear ν-SVR trained by pairwise coordinate
//! ascent on its dual ([`svr`]), Elo aggregation and Kendall's tau
//! ([`ranking`]), and the evaluation protocol ([`eval`]).
//!
//! File formats, image decoding and the command line live in the companion
//! `prominence` crate.

#![no_std]
#![warn(missing_debug_implementations, rust_2018_idioms)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod corpus;
pub mod eval;
pub mod features;
pub mod ranking;
pub mod svr;

pub use corpus::{
    aggregate_scores, categorize_pair, convert_judgment, AnnotatedPair, BoundingBox, Corpus,
    CorpusError, FaceRecord, FaceRef, ImageRecord, Magnitude, PairCategory, PairJudgment,
    PairScore, PoseEstimate, Winner,
};
pub use features::{compose_pair, FeatureVector, GrayImage, PairFeature};
pub use ranking::{elo_rank, kendall_tau, EloConfig, RankingTable};
pub use svr::{predict, train, RegressionModel, SolverConfig, TrainingSet};
