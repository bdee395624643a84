//! Annotated corpus: images, faces, crowd judgments on face pairs, and the
//! conversion of those judgments into ground-truth importance scores.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Number of discrete pose components of the face model (-90° to +90° in
/// 15° steps).
pub const POSE_COMPONENTS: usize = 13;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorpusError {
    #[error("pair {pair_id}: no judgments left after excluding worker")]
    EmptyJudgmentSet { pair_id: String },
    #[error("pair {pair_id}: unknown face {image_id}/{face_id}")]
    DanglingReference {
        pair_id: String,
        image_id: String,
        face_id: String,
    },
    #[error("{record}: {reason}")]
    InvariantViolation { record: String, reason: String },
}

impl CorpusError {
    fn invariant(record: impl fmt::Display, reason: impl Into<String>) -> Self {
        CorpusError::InvariantViolation {
            record: record.to_string(),
            reason: reason.into(),
        }
    }
}

/// Axis-aligned face box in pixels, top-left origin.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        BoundingBox { x, y, w, h }
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Half-open containment: `[x, x + w) × [y, y + h)`.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        px >= self.x && px < self.x + self.w && py >= self.y && py < self.y + self.h
    }

    /// Pixel index ranges `(x0..x1, y0..y1)` covered by the box after
    /// clipping to a `width × height` raster. Empty ranges when the box lies
    /// outside.
    pub fn pixel_span(&self, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let clip = |v: f64, hi: usize| -> usize {
            if v <= 0.0 {
                0
            } else if v >= hi as f64 {
                hi
            } else {
                v as usize
            }
        };
        let x0 = clip(libm::floor(self.x), width);
        let x1 = clip(libm::ceil(self.x + self.w), width);
        let y0 = clip(libm::floor(self.y), height);
        let y1 = clip(libm::ceil(self.y + self.h), height);
        (x0, x1.max(x0), y0, y1.max(y0))
    }

    fn intersects_rect(&self, width: f64, height: f64) -> bool {
        self.x < width && self.y < height && self.x + self.w > 0.0 && self.y + self.h > 0.0
    }
}

/// Precomputed output of the 13-component face pose model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PoseEstimate {
    /// 1-based index of the best-scoring component.
    pub component_id: u8,
    pub component_scores: [f64; POSE_COMPONENTS],
}

impl PoseEstimate {
    /// Builds an estimate whose component id is the argmax of `scores`
    /// (lowest index on ties).
    pub fn from_scores(scores: [f64; POSE_COMPONENTS]) -> Self {
        PoseEstimate {
            component_id: argmax_component(&scores),
            component_scores: scores,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.component_scores.iter().any(|s| !s.is_finite()) {
            return Err("pose component scores must be finite".into());
        }
        let expected = argmax_component(&self.component_scores);
        if self.component_id != expected {
            return Err(alloc::format!(
                "pose component_id {} is not the argmax of its scores (expected {})",
                self.component_id,
                expected
            ));
        }
        Ok(())
    }
}

fn argmax_component(scores: &[f64; POSE_COMPONENTS]) -> u8 {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best as u8 + 1
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FaceRecord {
    pub face_id: String,
    #[cfg_attr(feature = "serde", serde(rename = "box"))]
    pub bbox: BoundingBox,
    #[cfg_attr(feature = "serde", serde(default))]
    pub detected_automatically: bool,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub pose: Option<PoseEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ImageRecord {
    pub image_id: String,
    pub pixel_width: u32,
    pub pixel_height: u32,
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub image_path: Option<String>,
    /// Optional grayscale saliency map aligned with the image.
    #[cfg_attr(
        feature = "serde",
        serde(default, skip_serializing_if = "Option::is_none")
    )]
    pub saliency_path: Option<String>,
    pub faces: Vec<FaceRecord>,
}

impl ImageRecord {
    pub fn face(&self, face_id: &str) -> Option<&FaceRecord> {
        self.faces.iter().find(|f| f.face_id == face_id)
    }

    pub fn face_index(&self, face_id: &str) -> Option<usize> {
        self.faces.iter().position(|f| f.face_id == face_id)
    }

    fn validate(&self) -> Result<(), CorpusError> {
        let rec = || alloc::format!("image {}", self.image_id);
        if self.image_id.is_empty() {
            return Err(CorpusError::invariant("image", "empty image_id"));
        }
        if self.pixel_width == 0 || self.pixel_height == 0 {
            return Err(CorpusError::invariant(rec(), "pixel dimensions must be positive"));
        }
        if self.faces.is_empty() {
            return Err(CorpusError::invariant(rec(), "image has no faces"));
        }
        let mut seen = BTreeSet::new();
        for face in &self.faces {
            let frec = || alloc::format!("face {}/{}", self.image_id, face.face_id);
            if !seen.insert(face.face_id.as_str()) {
                return Err(CorpusError::invariant(frec(), "duplicate face_id"));
            }
            let b = &face.bbox;
            if ![b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite()) {
                return Err(CorpusError::invariant(frec(), "non-finite box coordinate"));
            }
            if b.w <= 0.0 || b.h <= 0.0 {
                return Err(CorpusError::invariant(frec(), "box width and height must be positive"));
            }
            if !b.intersects_rect(self.pixel_width as f64, self.pixel_height as f64) {
                return Err(CorpusError::invariant(frec(), "box lies outside the image"));
            }
            if let Some(pose) = &face.pose {
                pose.validate().map_err(|r| CorpusError::invariant(frec(), r))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub enum Winner {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Magnitude {
    Significant,
    Slight,
    Same,
}

/// One worker's three-tier answer on a pair.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PairJudgment {
    pub worker_id: String,
    /// Kept for audit when `magnitude` is `Same`; never scored in that case.
    pub winner: Winner,
    pub magnitude: Magnitude,
}

impl PairJudgment {
    pub fn new(worker_id: impl Into<String>, winner: Winner, magnitude: Magnitude) -> Self {
        PairJudgment {
            worker_id: worker_id.into(),
            winner,
            magnitude,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct FaceRef {
    pub image_id: String,
    pub face_id: String,
}

impl FaceRef {
    pub fn new(image_id: impl Into<String>, face_id: impl Into<String>) -> Self {
        FaceRef {
            image_id: image_id.into(),
            face_id: face_id.into(),
        }
    }
}

impl fmt::Display for FaceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.image_id, self.face_id)
    }
}

/// Whether a pair compares two people in one photo or one person across two
/// photos.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PairLevel {
    Image,
    Corpus,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AnnotatedPair {
    pub pair_id: String,
    pub side_a: FaceRef,
    pub side_b: FaceRef,
    pub judgments: Vec<PairJudgment>,
}

impl AnnotatedPair {
    pub fn level(&self) -> PairLevel {
        if self.side_a.image_id == self.side_b.image_id {
            PairLevel::Image
        } else {
            PairLevel::Corpus
        }
    }
}

/// Aggregated `(s_a, s_b)` importance pair; always sums to one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PairScore {
    pub s_a: f64,
    pub s_b: f64,
}

impl PairScore {
    /// Complementary pair from A's share; `s_a + s_b == 1.0` holds exactly
    /// for every `s_a` in `[0, 1]`.
    pub fn from_a(s_a: f64) -> Self {
        PairScore { s_a, s_b: 1.0 - s_a }
    }

    pub fn difference(&self) -> f64 {
        self.s_a - self.s_b
    }

    pub fn max(&self) -> f64 {
        self.s_a.max(self.s_b)
    }

    pub fn swapped(&self) -> Self {
        PairScore {
            s_a: self.s_b,
            s_b: self.s_a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PairCategory {
    SignificantlyMore,
    SlightlyMore,
    AlmostSame,
}

impl PairCategory {
    pub const ALL: [PairCategory; 3] = [
        PairCategory::SignificantlyMore,
        PairCategory::SlightlyMore,
        PairCategory::AlmostSame,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            PairCategory::SignificantlyMore => "significantly-more",
            PairCategory::SlightlyMore => "slightly-more",
            PairCategory::AlmostSame => "almost-same",
        }
    }
}

impl fmt::Display for PairCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Score of A in quarter units for one judgment (0..=4).
fn judgment_quarters(j: &PairJudgment) -> u32 {
    match (j.magnitude, j.winner) {
        (Magnitude::Same, _) => 2,
        (Magnitude::Significant, Winner::A) => 4,
        (Magnitude::Slight, Winner::A) => 3,
        (Magnitude::Slight, Winner::B) => 1,
        (Magnitude::Significant, Winner::B) => 0,
    }
}

/// Three-tier answer to score pair: significant 1/0, slight 0.75/0.25, same
/// 0.5/0.5, mirrored when B wins.
pub fn convert_judgment(j: &PairJudgment) -> PairScore {
    PairScore::from_a(judgment_quarters(j) as f64 / 4.0)
}

/// Mean converted score over a pair's judgments, optionally leaving one
/// worker out.
pub fn aggregate_scores(
    pair: &AnnotatedPair,
    exclude_worker: Option<&str>,
) -> Result<PairScore, CorpusError> {
    let (mut quarters, mut n) = (0u64, 0u64);
    for j in &pair.judgments {
        if exclude_worker == Some(j.worker_id.as_str()) {
            continue;
        }
        quarters += judgment_quarters(j) as u64;
        n += 1;
    }
    if n == 0 {
        return Err(CorpusError::EmptyJudgmentSet {
            pair_id: pair.pair_id.clone(),
        });
    }
    // Integer numerator keeps the mean order-independent.
    Ok(PairScore::from_a(quarters as f64 / (4 * n) as f64))
}

pub fn categorize_pair(score: &PairScore) -> PairCategory {
    let gap = (score.s_a - score.s_b).abs();
    if gap > 0.75 {
        PairCategory::SignificantlyMore
    } else if gap > 0.25 {
        PairCategory::SlightlyMore
    } else {
        PairCategory::AlmostSame
    }
}

/// Pair counts per category, in [`PairCategory::ALL`] order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CategoryDistribution {
    pub counts: [usize; 3],
}

impl CategoryDistribution {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn fraction(&self, category: PairCategory) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.counts[category.index()] as f64 / total as f64
        }
    }
}

/// Validated, cross-referenced dataset. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    images: Vec<ImageRecord>,
    pairs: Vec<AnnotatedPair>,
    index: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(images: Vec<ImageRecord>, pairs: Vec<AnnotatedPair>) -> Result<Self, CorpusError> {
        let mut index = BTreeMap::new();
        for (i, image) in images.iter().enumerate() {
            image.validate()?;
            if index.insert(image.image_id.clone(), i).is_some() {
                return Err(CorpusError::invariant(
                    alloc::format!("image {}", image.image_id),
                    "duplicate image_id",
                ));
            }
        }
        let corpus = Corpus {
            images,
            pairs,
            index,
        };
        let mut pair_ids = BTreeSet::new();
        for pair in &corpus.pairs {
            let rec = || alloc::format!("pair {}", pair.pair_id);
            if !pair_ids.insert(pair.pair_id.as_str()) {
                return Err(CorpusError::invariant(rec(), "duplicate pair_id"));
            }
            for side in [&pair.side_a, &pair.side_b] {
                if corpus.face(side).is_none() {
                    return Err(CorpusError::DanglingReference {
                        pair_id: pair.pair_id.clone(),
                        image_id: side.image_id.clone(),
                        face_id: side.face_id.clone(),
                    });
                }
            }
            if pair.side_a == pair.side_b {
                return Err(CorpusError::invariant(rec(), "both sides reference the same face"));
            }
        }
        Ok(corpus)
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn pairs(&self) -> &[AnnotatedPair] {
        &self.pairs
    }

    pub fn into_parts(self) -> (Vec<ImageRecord>, Vec<AnnotatedPair>) {
        (self.images, self.pairs)
    }

    pub fn image(&self, image_id: &str) -> Option<&ImageRecord> {
        self.index.get(image_id).map(|&i| &self.images[i])
    }

    /// Position of the image in [`Corpus::images`].
    pub fn image_index(&self, image_id: &str) -> Option<usize> {
        self.index.get(image_id).copied()
    }

    pub fn face(&self, face: &FaceRef) -> Option<&FaceRecord> {
        self.image(&face.image_id)?.face(&face.face_id)
    }

    pub fn face_count(&self) -> usize {
        self.images.iter().map(|i| i.faces.len()).sum()
    }

    /// Distinct worker ids over all judgments, sorted.
    pub fn workers(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self
            .pairs
            .iter()
            .flat_map(|p| p.judgments.iter().map(|j| j.worker_id.as_str()))
            .collect();
        set.into_iter().collect()
    }

    /// Category of every pair's averaged score. Pairs without judgments are
    /// not counted.
    pub fn category_distribution(&self) -> CategoryDistribution {
        let mut dist = CategoryDistribution::default();
        for pair in &self.pairs {
            if let Ok(score) = aggregate_scores(pair, None) {
                dist.counts[categorize_pair(&score).index()] += 1;
            }
        }
        dist
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn j(worker: &str, winner: Winner, magnitude: Magnitude) -> PairJudgment {
        PairJudgment::new(worker, winner, magnitude)
    }

    fn face(id: &str, x: f64, y: f64, w: f64, h: f64) -> FaceRecord {
        FaceRecord {
            face_id: id.into(),
            bbox: BoundingBox::new(x, y, w, h),
            detected_automatically: true,
            pose: None,
        }
    }

    fn image(id: &str, faces: Vec<FaceRecord>) -> ImageRecord {
        ImageRecord {
            image_id: id.into(),
            pixel_width: 100,
            pixel_height: 100,
            image_path: None,
            saliency_path: None,
            faces,
        }
    }

    fn pair(judgments: Vec<PairJudgment>) -> AnnotatedPair {
        AnnotatedPair {
            pair_id: "p".into(),
            side_a: FaceRef::new("i", "a"),
            side_b: FaceRef::new("i", "b"),
            judgments,
        }
    }

    #[test]
    fn conversion_examples() {
        let s = convert_judgment(&j("w", Winner::A, Magnitude::Significant));
        assert_eq!((s.s_a, s.s_b), (1.0, 0.0));
        let s = convert_judgment(&j("w", Winner::B, Magnitude::Slight));
        assert_eq!((s.s_a, s.s_b), (0.25, 0.75));
        let s = convert_judgment(&j("w", Winner::A, Magnitude::Same));
        assert_eq!((s.s_a, s.s_b), (0.5, 0.5));
        // winner is ignored for "same"
        let s = convert_judgment(&j("w", Winner::B, Magnitude::Same));
        assert_eq!((s.s_a, s.s_b), (0.5, 0.5));
    }

    #[test]
    fn aggregate_examples() {
        let unanimous = pair((0..10).map(|k| j(&alloc::format!("w{k}"), Winner::A, Magnitude::Significant)).collect());
        assert_eq!(aggregate_scores(&unanimous, None).unwrap(), PairScore { s_a: 1.0, s_b: 0.0 });

        let mut js: Vec<_> = (0..5).map(|k| j(&alloc::format!("w{k}"), Winner::A, Magnitude::Significant)).collect();
        js.extend((5..10).map(|k| j(&alloc::format!("w{k}"), Winner::B, Magnitude::Same)));
        assert_eq!(aggregate_scores(&pair(js), None).unwrap(), PairScore { s_a: 0.75, s_b: 0.25 });

        let single = pair(vec![j("w0", Winner::A, Magnitude::Slight)]);
        assert!(matches!(
            aggregate_scores(&single, Some("w0")),
            Err(CorpusError::EmptyJudgmentSet { .. })
        ));
        assert_eq!(aggregate_scores(&single, Some("other")).unwrap().s_a, 0.75);
    }

    #[test]
    fn categories() {
        assert_eq!(categorize_pair(&PairScore::from_a(1.0)), PairCategory::SignificantlyMore);
        assert_eq!(categorize_pair(&PairScore::from_a(0.75)), PairCategory::SlightlyMore);
        assert_eq!(categorize_pair(&PairScore::from_a(0.5)), PairCategory::AlmostSame);
        // band edges: gap 0.75 is slight, gap 0.25 is same
        assert_eq!(categorize_pair(&PairScore::from_a(0.875)), PairCategory::SlightlyMore);
        assert_eq!(categorize_pair(&PairScore::from_a(0.625)), PairCategory::AlmostSame);
    }

    #[test]
    fn pose_argmax_ties_go_low() {
        let mut scores = [0.0; POSE_COMPONENTS];
        scores[3] = 2.0;
        scores[8] = 2.0;
        let p = PoseEstimate::from_scores(scores);
        assert_eq!(p.component_id, 4);
        assert!(p.validate().is_ok());
        let bad = PoseEstimate {
            component_id: 9,
            component_scores: scores,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn corpus_validation() {
        let good = Corpus::new(
            vec![
                image("i", vec![face("a", 0.0, 0.0, 10.0, 10.0), face("b", 50.0, 50.0, 10.0, 10.0)]),
                image("k", vec![face("a", 0.0, 0.0, 10.0, 10.0)]),
            ],
            vec![pair(vec![j("w", Winner::A, Magnitude::Slight)])],
        )
        .unwrap();
        assert_eq!(good.images().len(), 2);
        assert_eq!(good.face_count(), 3);
        assert_eq!(good.pairs()[0].level(), PairLevel::Image);

        let dangling = Corpus::new(
            vec![image("i", vec![face("a", 0.0, 0.0, 10.0, 10.0)])],
            vec![pair(vec![])],
        );
        assert!(matches!(dangling, Err(CorpusError::DanglingReference { ref face_id, .. }) if face_id == "b"));

        let zero_w = Corpus::new(vec![image("i", vec![face("a", 0.0, 0.0, 0.0, 10.0)])], vec![]);
        assert!(matches!(zero_w, Err(CorpusError::InvariantViolation { ref record, .. }) if record == "face i/a"));

        let outside = Corpus::new(vec![image("i", vec![face("a", 100.0, 0.0, 5.0, 5.0)])], vec![]);
        assert!(matches!(outside, Err(CorpusError::InvariantViolation { .. })));

        let no_faces = Corpus::new(vec![image("i", vec![])], vec![]);
        assert!(matches!(no_faces, Err(CorpusError::InvariantViolation { .. })));

        let dup = Corpus::new(
            vec![image("i", vec![face("a", 0.0, 0.0, 5.0, 5.0)]), image("i", vec![face("a", 0.0, 0.0, 5.0, 5.0)])],
            vec![],
        );
        assert!(matches!(dup, Err(CorpusError::InvariantViolation { .. })));
    }

    #[test]
    fn pixel_span_clips() {
        let b = BoundingBox::new(-3.0, 2.5, 10.0, 100.0);
        assert_eq!(b.pixel_span(5, 20), (0, 5, 2, 20));
        let outside = BoundingBox::new(10.0, 10.0, 3.0, 3.0);
        let (x0, x1, _, _) = outside.pixel_span(5, 5);
        assert_eq!(x0, x1);
    }

    #[test]
    fn distribution_counts() {
        let c = Corpus::new(
            vec![image("i", vec![face("a", 0.0, 0.0, 10.0, 10.0), face("b", 50.0, 50.0, 10.0, 10.0)])],
            vec![pair(vec![j("w", Winner::A, Magnitude::Significant)])],
        )
        .unwrap();
        let d = c.category_distribution();
        assert_eq!(d.counts, [1, 0, 0]);
        assert_eq!(d.fraction(PairCategory::SignificantlyMore), 1.0);
    }
}
