//! Evaluation protocol: metrics, baselines, pair-level cross-validation,
//! inter-human agreement, fixation saliency and description selection.

mod agreement;
mod baseline;
mod cv;
mod describe;
mod metrics;
mod saliency;

use alloc::string::String;

pub use agreement::{
    inter_human_agreement, leave_one_human_out_training, summarize_runs, Agreement, HeldOutRun,
};
pub use baseline::{baseline_scores, BaselineMethod};
pub use cv::{
    assemble_report, cross_validate, run_rotation, CvConfig, DatasetPair, EvalDataset, EvalReport,
    plan_folds, FoldPlan, MethodRow, RotationResult, MODEL_METHOD,
};
pub use describe::{argmax_face, select_description, selection_agreement};
pub use metrics::{
    category_accuracies, coin_flip_predictions, mean_std, mse, weighted_accuracy, CategoryAccuracy,
};
pub use saliency::{
    fixation_shares, saliency_map_share, saliency_share, saliency_vs_importance, FixationData,
    ImageComparison, SaliencyComparison, ShareResult,
};

use crate::corpus::CorpusError;
use crate::features::FeatureError;
use crate::ranking::RankingError;
use crate::svr::SvrError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("no pairs to evaluate")]
    EmptyInput,
    #[error("{predictions} predictions for {truths} pairs")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("need at least {need} annotated pairs, have {got}")]
    TooFewPairs { need: usize, got: usize },
    #[error("insufficient judgments: {0}")]
    InsufficientJudgments(String),
    #[error("pixels unavailable for image `{0}`")]
    MissingPixels(String),
    #[error("saliency input unavailable for image `{0}`")]
    MissingSaliency(String),
    #[error("no fixation data for any annotated image")]
    MissingFixations,
    #[error("no sentence for face `{face_id}` of image `{image_id}`")]
    MissingSentence { image_id: String, face_id: String },
    #[error("features missing for image `{0}`")]
    MissingFeatures(String),
    #[error("unknown image `{0}`")]
    UnknownImage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Svr(#[from] SvrError),
    #[error(transparent)]
    Ranking(#[from] RankingError),
}
