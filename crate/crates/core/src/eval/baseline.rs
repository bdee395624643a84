use alloc::string::ToString;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::ImageRecord;
use crate::features::{layout, ImageFeatures};

/// Single-cue importance predictors; higher scores mean more important.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum BaselineMethod {
    /// Negated size-weighted distance from the image center.
    Center,
    /// Box area over image area.
    Scale,
    /// Share of in-box gradient energy.
    Sharpness,
    /// Share of saliency mass inside the box.
    Saliency,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 4] = [
        BaselineMethod::Center,
        BaselineMethod::Scale,
        BaselineMethod::Sharpness,
        BaselineMethod::Saliency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Center => "center",
            BaselineMethod::Scale => "scale",
            BaselineMethod::Sharpness => "sharpness",
            BaselineMethod::Saliency => "saliency",
        }
    }
}

/// Per-face baseline scores for one image. `saliency` holds the image's
/// per-face saliency shares when available.
pub fn baseline_scores(
    image: &ImageRecord,
    features: &ImageFeatures,
    saliency: Option<&[f64]>,
    method: BaselineMethod,
) -> Result<Vec<f64>, EvalError> {
    let column = |k: usize| features.vectors.iter().map(|v| v[k]).collect::<Vec<f64>>();
    match method {
        BaselineMethod::Center => Ok(features
            .vectors
            .iter()
            .map(|v| -v[layout::WEIGHTED_DIST_CENTER])
            .collect()),
        BaselineMethod::Scale => Ok(column(layout::SCALE)),
        BaselineMethod::Sharpness => {
            if features.sharpness_missing {
                return Err(EvalError::MissingPixels(image.image_id.to_string()));
            }
            Ok(column(layout::SHARPNESS))
        }
        BaselineMethod::Saliency => match saliency {
            Some(s) if s.len() == image.faces.len() => Ok(s.to_vec()),
            _ => Err(EvalError::MissingSaliency(image.image_id.to_string())),
        },
    }
}
