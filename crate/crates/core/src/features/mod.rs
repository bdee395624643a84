//! Per-face feature vectors and their pairwise difference composition.
//!
//! Layout (version [`LAYOUT_VERSION`], [`FEATURE_DIM`] entries):
//!
//! | index  | feature |
//! |--------|---------|
//! | 0      | distance from image center |
//! | 1      | distance from center / largest box side |
//! | 2      | distance from centroid of face centers |
//! | 3      | distance from area-weighted centroid |
//! | 4      | box area / image area |
//! | 5      | share of in-box gradient energy |
//! | 6      | pose component id (0 when absent) |
//! | 7..20  | pose component indicator |
//! | 20     | box aspect ratio w/h |
//! | 21     | pose id minus mean pose id of the other faces |
//! | 22..35 | pose component scores |
//! | 35     | dominant component score |
//! | 36     | automatic detection success |
//!
//! Distances are measured after scaling the image to the unit square.

mod gray;

pub use gray::{EnergyMode, GrayImage};

use alloc::vec::Vec;
use core::ops::Index;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corpus::{FaceRecord, ImageRecord, POSE_COMPONENTS};

pub const LAYOUT_VERSION: u32 = 1;
pub const FEATURE_DIM: usize = 37;

pub mod layout {
    pub const DIST_CENTER: usize = 0;
    pub const WEIGHTED_DIST_CENTER: usize = 1;
    pub const DIST_CENTROID: usize = 2;
    pub const DIST_WEIGHTED_CENTROID: usize = 3;
    pub const SCALE: usize = 4;
    pub const SHARPNESS: usize = 5;
    pub const POSE_ID: usize = 6;
    pub const POSE_INDICATOR: usize = 7;
    pub const ASPECT_RATIO: usize = 20;
    pub const POSE_DIFF: usize = 21;
    pub const POSE_SCORES: usize = 22;
    pub const DOMINANT_SCORE: usize = 35;
    pub const DETECTED: usize = 36;
}

/// Column names in layout order.
pub const FEATURE_NAMES: [&str; FEATURE_DIM] = [
    "dist_center",
    "weighted_dist_center",
    "dist_centroid",
    "dist_weighted_centroid",
    "scale",
    "sharpness",
    "pose_component_id",
    "pose_ind_1",
    "pose_ind_2",
    "pose_ind_3",
    "pose_ind_4",
    "pose_ind_5",
    "pose_ind_6",
    "pose_ind_7",
    "pose_ind_8",
    "pose_ind_9",
    "pose_ind_10",
    "pose_ind_11",
    "pose_ind_12",
    "pose_ind_13",
    "aspect_ratio",
    "pose_diff_vs_others",
    "pose_score_1",
    "pose_score_2",
    "pose_score_3",
    "pose_score_4",
    "pose_score_5",
    "pose_score_6",
    "pose_score_7",
    "pose_score_8",
    "pose_score_9",
    "pose_score_10",
    "pose_score_11",
    "pose_score_12",
    "pose_score_13",
    "dominant_component_score",
    "detection_success",
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeatureError {
    #[error("pixel data unavailable")]
    MissingPixels,
    #[error("pixel raster is {got_w}x{got_h}, record says {want_w}x{want_h}")]
    PixelDimensions {
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },
    #[error("feature length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite feature value at index {index}")]
    NonFinite { index: usize },
    #[error("face index {0} out of range")]
    UnknownFace(usize),
}

/// Fixed-layout per-face vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, FeatureError> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite { index });
        }
        Ok(FeatureVector { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl Index<usize> for FeatureVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

/// `φ(p_i) − φ(p_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeature {
    values: Vec<f64>,
}

impl PairFeature {
    pub fn from_values(values: Vec<f64>) -> Self {
        PairFeature { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn negated(&self) -> PairFeature {
        PairFeature {
            values: self.values.iter().map(|v| -v).collect(),
        }
    }
}

pub fn compose_pair(a: &FeatureVector, b: &FeatureVector) -> Result<PairFeature, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(PairFeature {
        values: a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractOptions {
    pub energy: EnergyMode,
    /// When false, pose sidecar data is ignored as if absent.
    pub use_pose: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions {
            energy: EnergyMode::Squared,
            use_pose: true,
        }
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

fn scaled_center(face: &FaceRecord, image: &ImageRecord) -> (f64, f64) {
    let (cx, cy) = face.bbox.center();
    (cx / image.pixel_width as f64, cy / image.pixel_height as f64)
}

/// Center distance, size-weighted center distance, and distances to the
/// plain and area-weighted centroids of all face centers.
pub fn dist_features(face: &FaceRecord, image: &ImageRecord) -> [f64; 4] {
    let (iw, ih) = (image.pixel_width as f64, image.pixel_height as f64);
    let center = scaled_center(face, image);
    let to_center = dist(center, (0.5, 0.5));
    let largest = (face.bbox.w / iw).max(face.bbox.h / ih);

    let n = image.faces.len() as f64;
    let total_area: f64 = image.faces.iter().map(|f| f.bbox.area()).sum();
    let (mut cx, mut cy, mut wx, mut wy) = (0.0, 0.0, 0.0, 0.0);
    for other in &image.faces {
        let c = scaled_center(other, image);
        cx += c.0;
        cy += c.1;
        let weight = other.bbox.area() / total_area;
        wx += weight * c.0;
        wy += weight * c.1;
    }
    [
        to_center,
        to_center / largest,
        dist(center, (cx / n, cy / n)),
        dist(center, (wx, wy)),
    ]
}

pub fn scale_feature(face: &FaceRecord, image: &ImageRecord) -> f64 {
    face.bbox.area() / (image.pixel_width as f64 * image.pixel_height as f64)
}

/// Share of each face's in-box gradient energy among all boxes of the image.
/// Falls back to `1/n` for every face when no box carries any energy.
pub fn sharpness_features(
    pixels: Option<&GrayImage>,
    faces: &[FaceRecord],
    mode: EnergyMode,
) -> Result<Vec<f64>, FeatureError> {
    let pixels = pixels.ok_or(FeatureError::MissingPixels)?;
    let energy = pixels.gradient_energy(mode);
    let sums: Vec<f64> = faces
        .iter()
        .map(|f| {
            let (x0, x1, y0, y1) = f.bbox.pixel_span(energy.width(), energy.height());
            energy.region_sum(x0, x1, y0, y1)
        })
        .collect();
    Ok(normalize_shares(&sums))
}

/// Normalizes non-negative masses to shares; all-zero input yields uniform
/// shares.
pub(crate) fn normalize_shares(masses: &[f64]) -> Vec<f64> {
    let total: f64 = masses.iter().sum();
    if total > 0.0 {
        masses.iter().map(|m| m / total).collect()
    } else {
        let n = masses.len() as f64;
        masses.iter().map(|_| 1.0 / n).collect()
    }
}

/// `[component_id, indicator(13), aspect_ratio, pose_diff]`.
pub fn pose_features(face: &FaceRecord, image: &ImageRecord) -> [f64; 16] {
    let mut out = [0.0; 16];
    if let Some(pose) = &face.pose {
        out[0] = pose.component_id as f64;
        out[pose.component_id as usize] = 1.0;
    }
    out[14] = face.bbox.w / face.bbox.h;

    let others: Vec<&FaceRecord> = image
        .faces
        .iter()
        .filter(|f| f.face_id != face.face_id)
        .collect();
    if let Some(own) = &face.pose {
        if !others.is_empty() && others.iter().all(|f| f.pose.is_some()) {
            let sum: f64 = others
                .iter()
                .map(|f| f.pose.as_ref().map_or(0.0, |p| p.component_id as f64))
                .sum();
            out[15] = own.component_id as f64 - sum / others.len() as f64;
        }
    }
    out
}

/// `[component scores(13), dominant score, detection success]`.
pub fn occlusion_features(face: &FaceRecord) -> [f64; 15] {
    let mut out = [0.0; 15];
    if let Some(pose) = &face.pose {
        out[..POSE_COMPONENTS].copy_from_slice(&pose.component_scores);
        out[POSE_COMPONENTS] = pose
            .component_scores
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
    }
    out[14] = if face.detected_automatically { 1.0 } else { 0.0 };
    out
}

/// Feature vector of one face plus whether its sharpness slot had to be
/// zero-filled.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub vector: FeatureVector,
    pub sharpness_missing: bool,
}

/// All faces of an image, in face order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageFeatures {
    pub vectors: Vec<FeatureVector>,
    pub sharpness_missing: bool,
}

fn check_dims(image: &ImageRecord, pixels: &GrayImage) -> Result<(), FeatureError> {
    let (want_w, want_h) = (image.pixel_width as usize, image.pixel_height as usize);
    if pixels.width() != want_w || pixels.height() != want_h {
        return Err(FeatureError::PixelDimensions {
            want_w,
            want_h,
            got_w: pixels.width(),
            got_h: pixels.height(),
        });
    }
    Ok(())
}

fn assemble(
    face: &FaceRecord,
    image: &ImageRecord,
    sharpness: f64,
    opts: &ExtractOptions,
) -> Result<FeatureVector, FeatureError> {
    let mut values = Vec::with_capacity(FEATURE_DIM);
    values.extend_from_slice(&dist_features(face, image));
    values.push(scale_feature(face, image));
    values.push(sharpness);
    if opts.use_pose {
        values.extend_from_slice(&pose_features(face, image));
        values.extend_from_slice(&occlusion_features(face));
    } else {
        let stripped = FaceRecord {
            pose: None,
            ..face.clone()
        };
        values.extend_from_slice(&pose_features(&stripped, image));
        values.extend_from_slice(&occlusion_features(&stripped));
    }
    debug_assert_eq!(values.len(), FEATURE_DIM);
    FeatureVector::new(values)
}

/// Extracts every face of `image`. Without pixels the sharpness slot is 0 and
/// `sharpness_missing` is set.
pub fn extract_image(
    image: &ImageRecord,
    pixels: Option<&GrayImage>,
    opts: &ExtractOptions,
) -> Result<ImageFeatures, FeatureError> {
    if let Some(p) = pixels {
        check_dims(image, p)?;
    }
    let (shares, missing) = match sharpness_features(pixels, &image.faces, opts.energy) {
        Ok(s) => (s, false),
        Err(FeatureError::MissingPixels) => (alloc::vec![0.0; image.faces.len()], true),
        Err(e) => return Err(e),
    };
    let vectors = image
        .faces
        .iter()
        .zip(shares)
        .map(|(face, share)| assemble(face, image, share, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageFeatures {
        vectors,
        sharpness_missing: missing,
    })
}

/// Extracts the face at `face_index` of `image`.
pub fn extract(
    face_index: usize,
    image: &ImageRecord,
    pixels: Option<&GrayImage>,
    opts: &ExtractOptions,
) -> Result<Extracted, FeatureError> {
    if face_index >= image.faces.len() {
        return Err(FeatureError::UnknownFace(face_index));
    }
    let mut all = extract_image(image, pixels, opts)?;
    Ok(Extracted {
        vector: all.vectors.swap_remove(face_index),
        sharpness_missing: all.sharpness_missing,
    })
}
