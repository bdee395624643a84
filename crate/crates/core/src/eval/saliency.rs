//! Fixation-share saliency and its agreement with annotated importance.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::metrics::mean_std;
use super::EvalError;
use crate::corpus::{aggregate_scores, categorize_pair, AnnotatedPair, Corpus, ImageRecord, PairLevel, PairScore};
use crate::features::{FeatureError, GrayImage};
use crate::ranking::{elo_rank, kendall_tau, outcome_groups, EloConfig, RankingTable};

/// Fixation points per image, in pixel coordinates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FixationData {
    points: BTreeMap<String, Vec<(f64, f64)>>,
    dropped: usize,
}

impl FixationData {
    pub fn new() -> Self {
        Self::default()
    }

    /// Collects `(image_id, x, y)` rows. Points outside the image are dropped
    /// and counted; unknown images are an error.
    pub fn from_rows<I>(corpus: &Corpus, rows: I) -> Result<Self, EvalError>
    where
        I: IntoIterator<Item = (String, f64, f64)>,
    {
        let mut data = FixationData::new();
        for (image_id, x, y) in rows {
            let image = corpus
                .image(&image_id)
                .ok_or_else(|| EvalError::UnknownImage(image_id.clone()))?;
            data.insert(image, x, y);
        }
        Ok(data)
    }

    /// Returns whether the point was kept.
    pub fn insert(&mut self, image: &ImageRecord, x: f64, y: f64) -> bool {
        let inside = x >= 0.0
            && y >= 0.0
            && x < image.pixel_width as f64
            && y < image.pixel_height as f64;
        if inside {
            self.points.entry(image.image_id.clone()).or_default().push((x, y));
        } else {
            self.dropped += 1;
        }
        inside
    }

    pub fn points(&self, image_id: &str) -> Option<&[(f64, f64)]> {
        self.points.get(image_id).map(Vec::as_slice)
    }

    /// Out-of-bounds points discarded so far.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn image_ids(&self) -> impl Iterator<Item = &str> {
        self.points.keys().map(String::as_str)
    }
}

/// Per-face saliency shares of an image, summing to one.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ShareResult {
    pub shares: Vec<f64>,
    /// No saliency mass fell in any box, so the shares are uniform.
    pub fallback: bool,
}

fn shares_from_masses(masses: Vec<f64>) -> ShareResult {
    let total: f64 = masses.iter().sum();
    if total > 0.0 {
        ShareResult {
            shares: masses.iter().map(|m| m / total).collect(),
            fallback: false,
        }
    } else {
        let n = masses.len() as f64;
        ShareResult {
            shares: masses.iter().map(|_| 1.0 / n).collect(),
            fallback: true,
        }
    }
}

/// Fixations inside each box over fixations inside all boxes. A point in
/// overlapping boxes counts once for each of them.
pub fn saliency_share(image: &ImageRecord, points: &[(f64, f64)]) -> ShareResult {
    let counts = image
        .faces
        .iter()
        .map(|f| points.iter().filter(|&&(x, y)| f.bbox.contains(x, y)).count() as f64)
        .collect();
    shares_from_masses(counts)
}

/// Saliency-map intensity inside each box over the total inside all boxes.
pub fn saliency_map_share(image: &ImageRecord, map: &GrayImage) -> Result<ShareResult, EvalError> {
    let (w, h) = (image.pixel_width as usize, image.pixel_height as usize);
    if map.width() != w || map.height() != h {
        return Err(FeatureError::PixelDimensions {
            want_w: w,
            want_h: h,
            got_w: map.width(),
            got_h: map.height(),
        }
        .into());
    }
    let masses = image
        .faces
        .iter()
        .map(|f| {
            let (x0, x1, y0, y1) = f.bbox.pixel_span(w, h);
            map.region_sum(x0, x1, y0, y1)
        })
        .collect();
    Ok(shares_from_masses(masses))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ImageComparison {
    pub image_id: String,
    pub tau: f64,
    /// Tied ratings on either side.
    pub ties: bool,
    pub fallback: bool,
    pub importance: RankingTable,
    pub saliency: RankingTable,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SaliencyComparison {
    pub mean_tau: f64,
    pub std_tau: f64,
    pub images: Vec<ImageComparison>,
    /// `confusion[s][i]`: pairs whose saliency gap falls in category `s` and
    /// importance gap in category `i`, both in
    /// [`crate::corpus::PairCategory::ALL`] order.
    pub confusion: [[usize; 3]; 3],
    /// Fraction of images whose most important face is also the most salient.
    pub top1_agreement: f64,
    pub images_without_fixations: usize,
}

/// `(s_a, s_b)` of two shares normalized to sum to one.
fn share_pair(a: f64, b: f64) -> PairScore {
    if a + b > 0.0 {
        PairScore::from_a(a / (a + b))
    } else {
        PairScore::from_a(0.5)
    }
}

/// Compares, per image, the Elo ranking of annotated importance with the
/// ranking by saliency share. `shares` maps image ids to per-face shares in
/// face order; annotated images absent from it are skipped and counted.
pub fn saliency_vs_importance(
    corpus: &Corpus,
    shares: &BTreeMap<String, ShareResult>,
    elo: &EloConfig,
) -> Result<SaliencyComparison, EvalError> {
    let image_pairs: Vec<AnnotatedPair> = corpus
        .pairs()
        .iter()
        .filter(|p| p.level() == PairLevel::Image && !p.judgments.is_empty())
        .cloned()
        .collect();
    let groups = outcome_groups(&image_pairs, false)?;
    let mut images = Vec::new();
    let mut missing = 0;
    let mut confusion = [[0usize; 3]; 3];
    for (image_id, group) in &groups {
        let Some(share) = shares.get(image_id) else {
            missing += 1;
            continue;
        };
        let image = corpus
            .image(image_id)
            .ok_or_else(|| EvalError::UnknownImage(image_id.clone()))?;
        let share_of = |face_id: &str| image.face_index(face_id).map_or(0.0, |i| share.shares[i]);

        let importance = elo_rank(&group.items, &group.outcomes, elo)?;
        let item_shares: Vec<f64> = group.items.iter().map(|f| share_of(f)).collect();
        let saliency = RankingTable::from_scores(&group.items, &item_shares);
        let tau = kendall_tau(&importance, &saliency)?;

        for pair in image_pairs.iter().filter(|p| &p.side_a.image_id == image_id) {
            let truth = aggregate_scores(pair, None)?;
            let sal = share_pair(share_of(&pair.side_a.face_id), share_of(&pair.side_b.face_id));
            confusion[categorize_pair(&sal).index()][categorize_pair(&truth).index()] += 1;
        }
        images.push(ImageComparison {
            image_id: image_id.to_string(),
            tau: tau.tau,
            ties: tau.ties,
            fallback: share.fallback,
            importance,
            saliency,
        });
    }
    if images.is_empty() {
        return Err(EvalError::MissingFixations);
    }
    let taus: Vec<f64> = images.iter().map(|c| c.tau).collect();
    let (mean_tau, std_tau) = mean_std(&taus);
    let top1 = images
        .iter()
        .filter(|c| c.importance.entries[0].item_id == c.saliency.entries[0].item_id)
        .count();
    Ok(SaliencyComparison {
        mean_tau,
        std_tau,
        top1_agreement: top1 as f64 / images.len() as f64,
        images,
        confusion,
        images_without_fixations: missing,
    })
}

/// Shares from fixation points for every image that has any.
pub fn fixation_shares(corpus: &Corpus, fixations: &FixationData) -> BTreeMap<String, ShareResult> {
    corpus
        .images()
        .iter()
        .filter_map(|img| {
            fixations
                .points(&img.image_id)
                .map(|pts| (img.image_id.clone(), saliency_share(img, pts)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BoundingBox, FaceRecord, FaceRef, Magnitude, PairJudgment, Winner};
    use alloc::vec;

    fn image() -> ImageRecord {
        let face = |id: &str, x: f64| FaceRecord {
            face_id: id.into(),
            bbox: BoundingBox::new(x, 0.0, 10.0, 10.0),
            detected_automatically: true,
            pose: None,
        };
        ImageRecord {
            image_id: "img".into(),
            pixel_width: 60,
            pixel_height: 20,
            image_path: None,
            saliency_path: None,
            faces: vec![face("a", 0.0), face("b", 20.0), face("c", 40.0)],
        }
    }

    fn points(counts: &[(f64, usize)]) -> Vec<(f64, f64)> {
        counts
            .iter()
            .flat_map(|&(x, n)| (0..n).map(move |_| (x, 5.0)))
            .collect()
    }

    #[test]
    fn share_ratios() {
        let img = image();
        let r = saliency_share(&img, &points(&[(5.0, 30), (25.0, 70), (15.0, 9)]));
        assert_eq!(r.shares, vec![0.3, 0.7, 0.0]);
        assert!(!r.fallback);
        let r = saliency_share(&img, &points(&[(15.0, 4)]));
        assert!(r.fallback);
        assert_eq!(r.shares, vec![1.0 / 3.0; 3]);
        let r = saliency_share(&img, &points(&[(45.0, 4)]));
        assert_eq!(r.shares, vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn map_share() {
        let img = image();
        let mut map = GrayImage::filled(60, 20, 0.0);
        map.set(5, 5, 3.0);
        map.set(45, 5, 1.0);
        let r = saliency_map_share(&img, &map).unwrap();
        assert_eq!(r.shares, vec![0.75, 0.0, 0.25]);
        assert!(saliency_map_share(&img, &GrayImage::filled(3, 3, 1.0)).is_err());
    }

    #[test]
    fn out_of_bounds_points_are_dropped() {
        let img = image();
        let mut f = FixationData::new();
        assert!(f.insert(&img, 1.0, 1.0));
        assert!(!f.insert(&img, 60.0, 1.0));
        assert!(!f.insert(&img, -0.5, 1.0));
        assert_eq!(f.dropped(), 2);
        assert_eq!(f.points("img").unwrap().len(), 1);
    }

    fn annotated() -> Corpus {
        let pair = |k: usize, a: &str, b: &str| AnnotatedPair {
            pair_id: alloc::format!("q{k}"),
            side_a: FaceRef::new("img", a),
            side_b: FaceRef::new("img", b),
            judgments: vec![PairJudgment::new("w", Winner::A, Magnitude::Significant)],
        };
        Corpus::new(
            vec![image()],
            vec![pair(0, "a", "b"), pair(1, "b", "c"), pair(2, "a", "c")],
        )
        .unwrap()
    }

    #[test]
    fn matching_saliency_gives_tau_one() {
        let corpus = annotated();
        let fix = FixationData::from_rows(
            &corpus,
            points(&[(5.0, 80), (25.0, 15), (45.0, 5)])
                .into_iter()
                .map(|(x, y)| ("img".to_string(), x, y)),
        )
        .unwrap();
        let cmp = saliency_vs_importance(&corpus, &fixation_shares(&corpus, &fix), &EloConfig::default()).unwrap();
        assert_eq!(cmp.mean_tau, 1.0);
        assert_eq!(cmp.top1_agreement, 1.0);
        let total: usize = cmp.confusion.iter().flatten().sum();
        assert_eq!(total, 3);
        // every importance pair is significant
        assert!(cmp.confusion.iter().all(|row| row[1] == 0 && row[2] == 0));
    }

    #[test]
    fn reversed_saliency_gives_tau_minus_one() {
        let corpus = annotated();
        let mut shares = BTreeMap::new();
        shares.insert(
            "img".to_string(),
            ShareResult {
                shares: vec![0.1, 0.3, 0.6],
                fallback: false,
            },
        );
        let cmp = saliency_vs_importance(&corpus, &shares, &EloConfig::default()).unwrap();
        assert_eq!(cmp.mean_tau, -1.0);
        assert_eq!(cmp.top1_agreement, 0.0);
    }

    #[test]
    fn no_fixations_is_an_error() {
        let corpus = annotated();
        assert_eq!(
            saliency_vs_importance(&corpus, &BTreeMap::new(), &EloConfig::default()),
            Err(EvalError::MissingFixations)
        );
    }
}
