//! Pair-level k-fold cross-validation with a validation fold for picking C.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::baseline::{baseline_scores, BaselineMethod};
use super::metrics::{category_accuracies, mean_std, mse, weighted_accuracy, CategoryAccuracy};
use super::EvalError;
use crate::corpus::{aggregate_scores, categorize_pair, Corpus, CorpusError, PairScore};
use crate::features::{compose_pair, ImageFeatures, PairFeature};
use crate::svr::{default_c_grid, predict_pair, train, SolverConfig, TrainingSet};

/// Row label of the learned regressor in reports.
pub const MODEL_METHOD: &str = "svr";

/// One evaluable pair: positions of both faces plus truth and features.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetPair {
    pub pair_id: String,
    pub image_a: usize,
    pub face_a: usize,
    pub image_b: usize,
    pub face_b: usize,
    pub truth: PairScore,
    pub feature: PairFeature,
}

/// Pairs of a corpus joined with per-image features and optional saliency
/// shares, both aligned with `corpus.images()`.
#[derive(Debug, Clone)]
pub struct EvalDataset<'a> {
    corpus: &'a Corpus,
    features: &'a [ImageFeatures],
    saliency: &'a [Option<Vec<f64>>],
    pairs: Vec<DatasetPair>,
    skipped: usize,
}

impl<'a> EvalDataset<'a> {
    /// Uses every pair's mean score as truth. Pairs without judgments are
    /// skipped and counted.
    pub fn new(
        corpus: &'a Corpus,
        features: &'a [ImageFeatures],
        saliency: &'a [Option<Vec<f64>>],
    ) -> Result<Self, EvalError> {
        Self::build(corpus, features, saliency, None)
    }

    /// Truth is the mean over all workers except `worker`; pairs only that
    /// worker judged are skipped.
    pub fn excluding_worker(&self, worker: &str) -> Result<Self, EvalError> {
        Self::build(self.corpus, self.features, self.saliency, Some(worker))
    }

    fn build(
        corpus: &'a Corpus,
        features: &'a [ImageFeatures],
        saliency: &'a [Option<Vec<f64>>],
        exclude: Option<&str>,
    ) -> Result<Self, EvalError> {
        let images = corpus.images();
        if features.len() != images.len() {
            return Err(EvalError::MissingFeatures(
                images.get(features.len()).map_or_else(String::new, |i| i.image_id.clone()),
            ));
        }
        for (img, f) in images.iter().zip(features) {
            if f.vectors.len() != img.faces.len() {
                return Err(EvalError::MissingFeatures(img.image_id.clone()));
            }
        }
        let mut pairs = Vec::with_capacity(corpus.pairs().len());
        let mut skipped = 0;
        for pair in corpus.pairs() {
            let truth = match aggregate_scores(pair, exclude) {
                Ok(t) => t,
                Err(CorpusError::EmptyJudgmentSet { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let locate = |side: &crate::corpus::FaceRef| -> Result<(usize, usize), EvalError> {
                let i = corpus
                    .image_index(&side.image_id)
                    .ok_or_else(|| EvalError::UnknownImage(side.image_id.clone()))?;
                let f = images[i]
                    .face_index(&side.face_id)
                    .ok_or_else(|| EvalError::UnknownImage(side.to_string()))?;
                Ok((i, f))
            };
            let (image_a, face_a) = locate(&pair.side_a)?;
            let (image_b, face_b) = locate(&pair.side_b)?;
            let feature = compose_pair(
                &features[image_a].vectors[face_a],
                &features[image_b].vectors[face_b],
            )?;
            pairs.push(DatasetPair {
                pair_id: pair.pair_id.clone(),
                image_a,
                face_a,
                image_b,
                face_b,
                truth,
                feature,
            });
        }
        Ok(EvalDataset {
            corpus,
            features,
            saliency,
            pairs,
            skipped,
        })
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    pub fn pairs(&self) -> &[DatasetPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Pairs left out for lack of judgments.
    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn truths(&self) -> Vec<PairScore> {
        self.pairs.iter().map(|p| p.truth).collect()
    }

    /// Both orientations of the selected pairs, target `s_a − s_b`.
    pub fn training_set(&self, indices: &[usize]) -> Result<TrainingSet, EvalError> {
        let dim = self.pairs.first().map_or(0, |p| p.feature.len());
        let mut set = TrainingSet::new(dim);
        for &k in indices {
            let p = &self.pairs[k];
            set.push_both_orientations(&p.feature, p.truth.difference())?;
        }
        Ok(set)
    }

    /// `score(a) − score(b)` for every pair, or the first missing input.
    pub fn baseline_predictions(&self, method: BaselineMethod) -> Result<Vec<f64>, EvalError> {
        let images = self.corpus.images();
        let mut per_image: Vec<Option<Vec<f64>>> = alloc::vec![None; images.len()];
        let mut out = Vec::with_capacity(self.pairs.len());
        for p in &self.pairs {
            for i in [p.image_a, p.image_b] {
                if per_image[i].is_none() {
                    let shares = self.saliency.get(i).and_then(|s| s.as_deref());
                    per_image[i] = Some(baseline_scores(&images[i], &self.features[i], shares, method)?);
                }
            }
            let sa = per_image[p.image_a].as_ref().map_or(0.0, |s| s[p.face_a]);
            let sb = per_image[p.image_b].as_ref().map_or(0.0, |s| s[p.face_b]);
            out.push(sa - sb);
        }
        Ok(out)
    }
}

/// Seeded assignment of pairs to folds: the pairs are shuffled and dealt out
/// round-robin, so fold sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    folds: usize,
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn new(n: usize, folds: usize, seed: u64) -> Self {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignment = alloc::vec![0; n];
        for (pos, &k) in order.iter().enumerate() {
            assignment[k] = pos % folds;
        }
        FoldPlan { folds, assignment }
    }

    pub fn folds(&self) -> usize {
        self.folds
    }

    pub fn fold_of(&self, k: usize) -> usize {
        self.assignment[k]
    }

    fn members(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&k| self.assignment[k] == fold).collect()
    }

    /// Test fold of rotation `r`.
    pub fn test(&self, r: usize) -> Vec<usize> {
        self.members(r % self.folds)
    }

    /// Validation fold of rotation `r`: the fold after the test fold.
    pub fn validation(&self, r: usize) -> Vec<usize> {
        self.members((r + 1) % self.folds)
    }

    pub fn train(&self, r: usize) -> Vec<usize> {
        let (t, v) = (r % self.folds, (r + 1) % self.folds);
        (0..self.assignment.len())
            .filter(|&k| self.assignment[k] != t && self.assignment[k] != v)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub c_grid: Vec<f64>,
    /// Template for every fit; its `c` is replaced by the grid values.
    pub solver: SolverConfig,
    pub baselines: Vec<BaselineMethod>,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: 42,
            c_grid: default_c_grid(),
            solver: SolverConfig::default(),
            baselines: BaselineMethod::ALL.to_vec(),
        }
    }
}

/// Outcome of one rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationResult {
    pub rotation: usize,
    pub selected_c: f64,
    pub validation_accuracy: f64,
    pub test_indices: Vec<usize>,
    pub predictions: Vec<f64>,
    /// Fits of the C grid that stopped at the iteration cap.
    pub non_converged_fits: usize,
    /// Test pairs whose image also appears in a training pair.
    pub leakage: usize,
}

/// Trains on the training folds for every C, keeps the model with the best
/// validation weighted accuracy (first on ties) and predicts the test fold.
pub fn run_rotation(
    data: &EvalDataset<'_>,
    plan: &FoldPlan,
    r: usize,
    cfg: &CvConfig,
) -> Result<RotationResult, EvalError> {
    let (train_idx, val_idx, test_idx) = (plan.train(r), plan.validation(r), plan.test(r));
    let set = data.training_set(&train_idx)?;
    let val_truth: Vec<PairScore> = val_idx.iter().map(|&k| data.pairs[k].truth).collect();
    let mut best = None;
    let mut non_converged_fits = 0;
    for &c in &cfg.c_grid {
        let model = train(&set, &cfg.solver.clone().with_c(c))?;
        non_converged_fits += usize::from(!model.diagnostics.converged);
        let preds = val_idx
            .iter()
            .map(|&k| predict_pair(&model, &data.pairs[k].feature))
            .collect::<Result<Vec<_>, _>>()?;
        let acc = weighted_accuracy(&preds, &val_truth)?;
        if best.as_ref().map_or(true, |(b, _, _)| acc > *b) {
            best = Some((acc, c, model));
        }
    }
    let (validation_accuracy, selected_c, model) =
        best.ok_or(crate::svr::SvrError::InvalidConfig("empty C grid"))?;
    let predictions = test_idx
        .iter()
        .map(|&k| predict_pair(&model, &data.pairs[k].feature))
        .collect::<Result<Vec<_>, _>>()?;

    let seen: BTreeSet<usize> = train_idx
        .iter()
        .flat_map(|&k| [data.pairs[k].image_a, data.pairs[k].image_b])
        .collect();
    let leakage = test_idx
        .iter()
        .filter(|&&k| seen.contains(&data.pairs[k].image_a) || seen.contains(&data.pairs[k].image_b))
        .count();
    Ok(RotationResult {
        rotation: r,
        selected_c,
        validation_accuracy,
        test_indices: test_idx,
        predictions,
        non_converged_fits,
        leakage,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MethodRow {
    pub method: String,
    /// False when an input the method needs is missing; the numbers are then
    /// absent.
    pub available: bool,
    pub weighted_accuracy: Option<f64>,
    pub weighted_accuracy_std: Option<f64>,
    pub mse: Option<f64>,
    pub categories: Option<[CategoryAccuracy; 3]>,
    pub fold_accuracies: Vec<f64>,
}

impl MethodRow {
    fn unavailable(method: &str) -> Self {
        MethodRow {
            method: method.to_string(),
            available: false,
            weighted_accuracy: None,
            weighted_accuracy_std: None,
            mse: None,
            categories: None,
            fold_accuracies: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EvalReport {
    pub pairs: usize,
    pub skipped_pairs: usize,
    pub folds: usize,
    pub seed: u64,
    pub nu: f64,
    pub c_grid: Vec<f64>,
    pub selected_c: Vec<f64>,
    /// Training used both orientations of every pair.
    pub both_orientations: bool,
    /// Summed over rotations: test pairs sharing an image with training data.
    pub image_leakage: usize,
    /// Summed over rotations and C values.
    pub non_converged_fits: usize,
    /// Ground-truth category counts in [`crate::corpus::PairCategory::ALL`] order.
    pub category_counts: [usize; 3],
    pub rows: Vec<MethodRow>,
}

impl EvalReport {
    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }
}

fn row_from_predictions(
    method: &str,
    data: &EvalDataset<'_>,
    plan: &FoldPlan,
    predictions: &[f64],
    with_mse: bool,
) -> Result<MethodRow, EvalError> {
    let truths = data.truths();
    let mut fold_accuracies = Vec::with_capacity(plan.folds());
    for r in 0..plan.folds() {
        let idx = plan.test(r);
        let p: Vec<f64> = idx.iter().map(|&k| predictions[k]).collect();
        let t: Vec<PairScore> = idx.iter().map(|&k| truths[k]).collect();
        fold_accuracies.push(weighted_accuracy(&p, &t)?);
    }
    let (mean, std) = mean_std(&fold_accuracies);
    Ok(MethodRow {
        method: method.to_string(),
        available: true,
        weighted_accuracy: Some(mean),
        weighted_accuracy_std: Some(std),
        mse: if with_mse { Some(mse(predictions, &truths)?) } else { None },
        categories: Some(category_accuracies(predictions, &truths)?),
        fold_accuracies,
    })
}

/// Builds the report from all rotations (in any order) plus the baselines
/// evaluated on the same folds.
pub fn assemble_report(
    data: &EvalDataset<'_>,
    plan: &FoldPlan,
    cfg: &CvConfig,
    mut rotations: Vec<RotationResult>,
) -> Result<EvalReport, EvalError> {
    rotations.sort_by_key(|r| r.rotation);
    let mut predictions = alloc::vec![0.0; data.len()];
    for rot in &rotations {
        for (&k, &p) in rot.test_indices.iter().zip(&rot.predictions) {
            predictions[k] = p;
        }
    }
    let mut rows = alloc::vec![row_from_predictions(MODEL_METHOD, data, plan, &predictions, true)?];
    for &method in &cfg.baselines {
        rows.push(match data.baseline_predictions(method) {
            Ok(p) => row_from_predictions(method.name(), data, plan, &p, false)?,
            Err(EvalError::MissingPixels(_)) | Err(EvalError::MissingSaliency(_)) => {
                MethodRow::unavailable(method.name())
            }
            Err(e) => return Err(e),
        });
    }
    let mut category_counts = [0; 3];
    for p in data.pairs() {
        category_counts[categorize_pair(&p.truth).index()] += 1;
    }
    Ok(EvalReport {
        pairs: data.len(),
        skipped_pairs: data.skipped(),
        folds: plan.folds(),
        seed: cfg.seed,
        nu: cfg.solver.nu,
        c_grid: cfg.c_grid.clone(),
        selected_c: rotations.iter().map(|r| r.selected_c).collect(),
        both_orientations: true,
        image_leakage: rotations.iter().map(|r| r.leakage).sum(),
        non_converged_fits: rotations.iter().map(|r| r.non_converged_fits).sum(),
        category_counts,
        rows,
    })
}

/// Checks the preconditions and returns the fold plan for `data`.
pub fn plan_folds(data: &EvalDataset<'_>, cfg: &CvConfig) -> Result<FoldPlan, EvalError> {
    if cfg.folds < 3 {
        return Err(EvalError::TooFewPairs {
            need: 3,
            got: cfg.folds,
        });
    }
    if data.len() < cfg.folds {
        return Err(EvalError::TooFewPairs {
            need: cfg.folds,
            got: data.len(),
        });
    }
    Ok(FoldPlan::new(data.len(), cfg.folds, cfg.seed))
}

/// Runs every rotation sequentially and assembles the report.
pub fn cross_validate(data: &EvalDataset<'_>, cfg: &CvConfig) -> Result<EvalReport, EvalError> {
    let plan = plan_folds(data, cfg)?;
    let rotations = (0..plan.folds())
        .map(|r| run_rotation(data, &plan, r, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    assemble_report(data, &plan, cfg, rotations)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_pairs() {
        let plan = FoldPlan::new(53, 10, 3);
        let mut seen = alloc::vec![0; 53];
        for r in 0..10 {
            for k in plan.test(r) {
                seen[k] += 1;
            }
            let (t, v, tr) = (plan.test(r), plan.validation(r), plan.train(r));
            assert_eq!(t.len() + v.len() + tr.len(), 53);
            assert!(t.iter().all(|k| !v.contains(k) && !tr.contains(k)));
        }
        assert!(seen.iter().all(|&c| c == 1));
        let sizes: Vec<usize> = (0..10).map(|r| plan.test(r).len()).collect();
        assert!(sizes.iter().all(|&s| s == 5 || s == 6));
    }

    #[test]
    fn fold_plan_is_seeded() {
        assert_eq!(FoldPlan::new(40, 10, 1), FoldPlan::new(40, 10, 1));
        assert_ne!(FoldPlan::new(40, 10, 1), FoldPlan::new(40, 10, 2));
    }
}
