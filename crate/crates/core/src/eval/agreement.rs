use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::cv::{cross_validate, CvConfig, EvalDataset, EvalReport};
use super::metrics::{mean_std, weighted_accuracy};
use super::EvalError;
use crate::corpus::{aggregate_scores, convert_judgment, Corpus, PairScore};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Agreement {
    pub mean: f64,
    pub std: f64,
    /// Weighted accuracy of each held-out worker, sorted by worker id.
    pub per_worker: Vec<(String, f64)>,
}

/// Each worker in turn predicts the mean of the other workers: the sign of
/// their own converted score is scored against the others' mean by weighted
/// accuracy. Only pairs with at least two judgments, one of them by someone
/// else, take part.
pub fn inter_human_agreement(corpus: &Corpus) -> Result<Agreement, EvalError> {
    let workers = corpus.workers();
    if workers.len() < 2 {
        return Err(EvalError::InsufficientJudgments(String::from(
            "need at least two workers",
        )));
    }
    let mut per_worker = Vec::new();
    for worker in workers {
        let mut predictions = Vec::new();
        let mut truths: Vec<PairScore> = Vec::new();
        for pair in corpus.pairs() {
            let own: Vec<f64> = pair
                .judgments
                .iter()
                .filter(|j| j.worker_id == worker)
                .map(|j| convert_judgment(j).difference())
                .collect();
            if own.is_empty() || own.len() == pair.judgments.len() {
                continue;
            }
            let truth = aggregate_scores(pair, Some(worker))?;
            predictions.push(own.iter().sum::<f64>() / own.len() as f64);
            truths.push(truth);
        }
        if !truths.is_empty() {
            per_worker.push((worker.to_string(), weighted_accuracy(&predictions, &truths)?));
        }
    }
    if per_worker.is_empty() {
        return Err(EvalError::InsufficientJudgments(String::from(
            "no pair was judged by two different workers",
        )));
    }
    let values: Vec<f64> = per_worker.iter().map(|(_, v)| *v).collect();
    let (mean, std) = mean_std(&values);
    Ok(Agreement {
        mean,
        std,
        per_worker,
    })
}

/// Cross-validation against the ground truth that leaves one worker out.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HeldOutRun {
    pub worker: String,
    pub report: EvalReport,
}

/// One full cross-validation per worker, each with that worker's judgments
/// removed from the ground truth.
pub fn leave_one_human_out_training(
    data: &EvalDataset<'_>,
    cfg: &CvConfig,
) -> Result<Vec<HeldOutRun>, EvalError> {
    let workers = data.corpus().workers();
    if workers.len() < 2 {
        return Err(EvalError::InsufficientJudgments(String::from(
            "cannot hold out the only worker",
        )));
    }
    workers
        .into_iter()
        .map(|w| {
            let held = data.excluding_worker(w)?;
            Ok(HeldOutRun {
                worker: w.to_string(),
                report: cross_validate(&held, cfg)?,
            })
        })
        .collect()
}

/// Mean and sample std of one method's weighted accuracy across runs;
/// `None` if the method was unavailable in any run.
pub fn summarize_runs(runs: &[HeldOutRun], method: &str) -> Option<(f64, f64)> {
    let values = runs
        .iter()
        .map(|r| r.report.row(method).and_then(|row| row.weighted_accuracy))
        .collect::<Option<Vec<f64>>>()?;
    if values.is_empty() {
        return None;
    }
    Some(mean_std(&values))
}
