//! Glue between files on disk and the core algorithms.

use rayon::prelude::*;

use prominence_core::eval::{
    assemble_report, plan_folds, run_rotation, saliency_map_share, saliency_share, weighted_accuracy,
    CvConfig, EvalDataset, EvalReport, FixationData, FoldPlan,
};
use prominence_core::features::{extract_image, ExtractOptions, FeatureError, ImageFeatures};
use prominence_core::svr::{predict_pair, train};
use prominence_core::{PairScore, RegressionModel};

use crate::error::{AppError, Result};
use crate::manifest::LoadedCorpus;
use crate::pixels::load_gray;

#[derive(Debug, Clone, Copy, Default)]
pub struct ExtractSettings {
    pub use_pixels: bool,
    pub options: ExtractOptions,
}

#[derive(Debug, Clone)]
pub struct Extraction {
    /// Aligned with `corpus.images()`.
    pub features: Vec<ImageFeatures>,
    /// Images whose sharpness had to be zero-filled.
    pub missing_pixels: usize,
    pub warnings: Vec<String>,
}

/// Extracts every image in parallel; output order follows the manifest.
pub fn extract_all(loaded: &LoadedCorpus, settings: &ExtractSettings) -> Result<Extraction> {
    let per_image: Vec<Result<(ImageFeatures, Option<String>)>> = loaded
        .corpus
        .images()
        .par_iter()
        .map(|image| {
            let (pixels, warning) = if !settings.use_pixels {
                (None, None)
            } else if let Some(rel) = &image.image_path {
                let path = loaded.resolve(rel);
                match load_gray(&path) {
                    Ok(px) => (Some(px), None),
                    Err(e) => (None, Some(format!("image {}: {e}", image.image_id))),
                }
            } else {
                (None, Some(format!("image {}: no image_path", image.image_id)))
            };
            let f = extract_image(image, pixels.as_ref(), &settings.options).map_err(|e| {
                let msg = format!("image {}: {e}", image.image_id);
                match e {
                    FeatureError::NonFinite { .. } => AppError::Numeric(msg),
                    _ => AppError::Input(msg),
                }
            })?;
            Ok((f, warning))
        })
        .collect();
    let mut features = Vec::with_capacity(per_image.len());
    let mut warnings = Vec::new();
    for r in per_image {
        let (f, w) = r?;
        features.push(f);
        warnings.extend(w);
    }
    let missing_pixels = features.iter().filter(|f| f.sharpness_missing).count();
    Ok(Extraction {
        features,
        missing_pixels,
        warnings,
    })
}

/// Per-image saliency shares: from fixations when given, otherwise from the
/// manifest's saliency maps. Images without either get `None`.
pub fn saliency_inputs(
    loaded: &LoadedCorpus,
    fixations: Option<&FixationData>,
) -> (Vec<Option<Vec<f64>>>, Vec<String>) {
    let results: Vec<(Option<Vec<f64>>, Option<String>)> = loaded
        .corpus
        .images()
        .par_iter()
        .map(|image| {
            if let Some(fix) = fixations {
                return (fix.points(&image.image_id).map(|p| saliency_share(image, p).shares), None);
            }
            let Some(rel) = &image.saliency_path else {
                return (None, None);
            };
            let path = loaded.resolve(rel);
            match load_gray(&path).map_err(|e| e.to_string()).and_then(|map| {
                saliency_map_share(image, &map).map_err(|e| e.to_string())
            }) {
                Ok(s) => (Some(s.shares), None),
                Err(e) => (None, Some(format!("saliency map of image {}: {e}", image.image_id))),
            }
        })
        .collect();
    let mut shares = Vec::with_capacity(results.len());
    let mut warnings = Vec::new();
    for (s, w) in results {
        shares.push(s);
        warnings.extend(w);
    }
    (shares, warnings)
}

/// Cross-validation with rotations trained in parallel. The report does not
/// depend on the schedule.
pub fn cross_validate_parallel(data: &EvalDataset<'_>, cfg: &CvConfig) -> Result<EvalReport> {
    let plan = plan_folds(data, cfg)?;
    let rotations = (0..plan.folds())
        .into_par_iter()
        .map(|r| run_rotation(data, &plan, r, cfg))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(assemble_report(data, &plan, cfg, rotations)?)
}

/// Picks C on one seeded held-out fold, then refits on every pair.
pub fn train_full(data: &EvalDataset<'_>, cfg: &CvConfig) -> Result<(RegressionModel, f64)> {
    if data.is_empty() {
        return Err(AppError::Input("no annotated pairs to train on".into()));
    }
    let chosen = if cfg.c_grid.len() == 1 || data.len() < cfg.folds {
        cfg.c_grid[0]
    } else {
        let plan = FoldPlan::new(data.len(), cfg.folds, cfg.seed);
        let held = plan.test(0);
        let rest: Vec<usize> = (0..data.len()).filter(|k| plan.fold_of(*k) != 0).collect();
        let set = data.training_set(&rest)?;
        let truths: Vec<PairScore> = held.iter().map(|&k| data.pairs()[k].truth).collect();
        let scored = cfg
            .c_grid
            .par_iter()
            .map(|&c| -> Result<(f64, f64)> {
                let model = train(&set, &cfg.solver.clone().with_c(c))?;
                let preds = held
                    .iter()
                    .map(|&k| predict_pair(&model, &data.pairs()[k].feature))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                Ok((c, weighted_accuracy(&preds, &truths)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut best = scored[0];
        for &(c, acc) in &scored[1..] {
            if acc > best.1 {
                best = (c, acc);
            }
        }
        best.0
    };
    let all: Vec<usize> = (0..data.len()).collect();
    let model = train(&data.training_set(&all)?, &cfg.solver.clone().with_c(chosen))?;
    Ok((model, chosen))
}
