//! Generated corpora whose importance is a known linear function of the
//! extracted features.
//!
//! Faces sit in distinct cells of a 4×2 grid with noise textures of varying
//! contrast, so scale, position, sharpness and pose all vary independently.
//! Each annotated pair's score is `s_a = (1 + w*·(φ_a − φ_b)) / 2`, spread
//! over the workers in quarter steps; the averaged judgment therefore
//! reproduces the linear target up to a 1/(4·workers) rounding.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use prominence_core::corpus::POSE_COMPONENTS;
use prominence_core::features::{extract_image, layout, ExtractOptions, ImageFeatures, FEATURE_DIM};
use prominence_core::{
    AnnotatedPair, BoundingBox, Corpus, FaceRecord, FaceRef, GrayImage, ImageRecord, Magnitude,
    PairJudgment, PoseEstimate, Winner,
};

use crate::error::Result;
use crate::formats::{fixations_tsv, sentences_tsv, Sentences};
use crate::io::write_atomic;
use crate::manifest::save_manifest;
use crate::pixels::save_gray_png;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub images: usize,
    pub min_faces: usize,
    pub max_faces: usize,
    pub workers: usize,
    pub width: u32,
    pub height: u32,
    /// Annotated pairs per image, drawn from all face pairs.
    pub max_pairs_per_image: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            images: 100,
            min_faces: 3,
            max_faces: 7,
            workers: 10,
            width: 160,
            height: 120,
            max_pairs_per_image: 10,
            seed: 42,
        }
    }
}

/// Relative weights of the generating function over z-scored features.
const TRUTH_TERMS: [(usize, f64); 4] = [
    (layout::SCALE, 3.0),
    (layout::SHARPNESS, 2.0),
    (layout::WEIGHTED_DIST_CENTER, -1.5),
    (layout::DOMINANT_SCORE, 1.0),
];

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub corpus: Corpus,
    pub pixels: Vec<GrayImage>,
    pub features: Vec<ImageFeatures>,
    /// Generating weights `w*` on raw features.
    pub weights: Vec<f64>,
    pub fixations: Vec<(String, f64, f64)>,
    pub sentences: Sentences,
}

fn worker_name(slot: usize) -> String {
    format!("w{:02}", slot + 1)
}

fn judgment_from_quarters(worker: String, q: u32) -> PairJudgment {
    let (winner, magnitude) = match q {
        0 => (Winner::B, Magnitude::Significant),
        1 => (Winner::B, Magnitude::Slight),
        2 => (Winner::A, Magnitude::Same),
        3 => (Winner::A, Magnitude::Slight),
        _ => (Winner::A, Magnitude::Significant),
    };
    PairJudgment::new(worker, winner, magnitude)
}

fn layout_faces(rng: &mut ChaCha8Rng, cfg: &SyntheticConfig, n: usize) -> Vec<FaceRecord> {
    let (cw, ch) = (cfg.width as f64 / 4.0, cfg.height as f64 / 2.0);
    let mut cells: Vec<usize> = (0..8).collect();
    cells.shuffle(rng);
    cells.truncate(n);
    cells.sort_unstable();
    cells
        .into_iter()
        .enumerate()
        .map(|(i, cell)| {
            let w = rng.gen_range(0.2..0.9) * cw;
            let h = (w * rng.gen_range(0.9..1.3)).min(0.95 * ch);
            let x = (cell % 4) as f64 * cw + rng.gen_range(0.0..(cw - w));
            let y = (cell / 4) as f64 * ch + rng.gen_range(0.0..(ch - h));
            let pose = rng.gen_bool(0.75).then(|| {
                let mut scores = [0.0; POSE_COMPONENTS];
                for s in &mut scores {
                    *s = rng.gen_range(-1.0..1.0);
                }
                PoseEstimate::from_scores(scores)
            });
            FaceRecord {
                face_id: format!("p{}", i + 1),
                bbox: BoundingBox::new(x.floor(), y.floor(), w.round(), h.round()),
                detected_automatically: pose.is_some(),
                pose,
            }
        })
        .collect()
}

fn render(rng: &mut ChaCha8Rng, cfg: &SyntheticConfig, faces: &[FaceRecord]) -> GrayImage {
    let (w, h) = (cfg.width as usize, cfg.height as usize);
    let mut bytes: Vec<u8> = (0..w * h).map(|_| 128 + rng.gen_range(0..3)).collect();
    for face in faces {
        let contrast = rng.gen_range(4.0..60.0);
        let (x0, x1, y0, y1) = face.bbox.pixel_span(w, h);
        for y in y0..y1 {
            for x in x0..x1 {
                let v = 128.0 + contrast * rng.gen_range(-1.0..1.0f64);
                bytes[y * w + x] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    GrayImage::from_luma8(w, h, &bytes).expect("raster matches dimensions")
}

/// Builds the world. Deterministic in `cfg`.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut images = Vec::with_capacity(cfg.images);
    let mut pixels = Vec::with_capacity(cfg.images);
    let mut features = Vec::with_capacity(cfg.images);
    let opts = ExtractOptions::default();
    for i in 0..cfg.images {
        let n = rng.gen_range(cfg.min_faces..=cfg.max_faces.min(8));
        let faces = layout_faces(&mut rng, cfg, n);
        let px = render(&mut rng, cfg, &faces);
        let image = ImageRecord {
            image_id: format!("img{:03}", i + 1),
            pixel_width: cfg.width,
            pixel_height: cfg.height,
            image_path: Some(format!("images/img{:03}.png", i + 1)),
            saliency_path: None,
            faces,
        };
        let f = extract_image(&image, Some(&px), &opts)
            .map_err(|e| crate::error::AppError::Input(e.to_string()))?;
        images.push(image);
        pixels.push(px);
        features.push(f);
    }

    // z-score scale of each generating feature over all faces
    let mut weights = vec![0.0; FEATURE_DIM];
    for &(k, coef) in &TRUTH_TERMS {
        let vals: Vec<f64> = features.iter().flat_map(|f| f.vectors.iter().map(move |v| v[k])).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64).sqrt();
        weights[k] = if sd > 0.0 { coef / sd } else { 0.0 };
    }
    let importance: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            f.vectors
                .iter()
                .map(|v| v.as_slice().iter().zip(&weights).map(|(x, w)| x * w).sum())
                .collect()
        })
        .collect();

    let mut chosen = Vec::new();
    for (i, image) in images.iter().enumerate() {
        let n = image.faces.len();
        let mut all: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        all.shuffle(&mut rng);
        all.truncate(cfg.max_pairs_per_image);
        all.sort_unstable();
        for (a, b) in all {
            let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            chosen.push((i, a, b));
        }
    }
    let spread = chosen
        .iter()
        .map(|&(i, a, b)| (importance[i][a] - importance[i][b]).abs())
        .fold(0.0, f64::max);
    let scale = if spread > 0.0 { 0.95 / spread } else { 1.0 };
    weights.iter_mut().for_each(|w| *w *= scale);

    let total_quarters = 4 * cfg.workers as u32;
    let mut pairs = Vec::with_capacity(chosen.len());
    for (k, &(i, a, b)) in chosen.iter().enumerate() {
        let diff = (importance[i][a] - importance[i][b]) * scale;
        let q = ((1.0 + diff) / 2.0 * total_quarters as f64).round() as u32;
        let (base, extra) = (q / cfg.workers as u32, (q % cfg.workers as u32) as usize);
        let judgments = (0..cfg.workers)
            .map(|slot| {
                let bonus = u32::from((slot + cfg.workers - k % cfg.workers) % cfg.workers < extra);
                judgment_from_quarters(worker_name(slot), base + bonus)
            })
            .collect();
        let image = &images[i];
        pairs.push(AnnotatedPair {
            pair_id: format!("{}-{}-{}", image.image_id, image.faces[a].face_id, image.faces[b].face_id),
            side_a: FaceRef::new(image.image_id.clone(), image.faces[a].face_id.clone()),
            side_b: FaceRef::new(image.image_id.clone(), image.faces[b].face_id.clone()),
            judgments,
        });
    }

    // Fixations follow importance loosely: counts grow with the face's rank
    // plus a random draw, and a few land on the background.
    let mut fixations = Vec::new();
    let mut sentences = Sentences::new();
    for (i, image) in images.iter().enumerate() {
        for (f, face) in image.faces.iter().enumerate() {
            let pull = importance[i][f] * scale + rng.gen_range(-0.35..0.35);
            let count = (12.0 + 20.0 * pull).round().max(1.0) as usize;
            let b = face.bbox;
            for _ in 0..count {
                fixations.push((
                    image.image_id.clone(),
                    (b.x + rng.gen_range(0.0..b.w)).floor(),
                    (b.y + rng.gen_range(0.0..b.h)).floor(),
                ));
            }
            let (cx, cy) = b.center();
            sentences
                .entry(image.image_id.clone())
                .or_insert_with(BTreeMap::new)
                .insert(
                    face.face_id.clone(),
                    format!("a person seen near ({cx:.0}, {cy:.0})"),
                );
        }
        for _ in 0..5 {
            fixations.push((
                image.image_id.clone(),
                rng.gen_range(0..cfg.width) as f64,
                rng.gen_range(0..cfg.height) as f64,
            ));
        }
    }

    Ok(SyntheticWorld {
        corpus: Corpus::new(images, pairs)?,
        pixels,
        features,
        weights,
        fixations,
        sentences,
    })
}

/// Writes `manifest.json`, `images/*.png`, `fixations.tsv` and
/// `sentences.tsv` under `dir`.
pub fn write_world(dir: &Path, world: &SyntheticWorld) -> Result<()> {
    for (image, px) in world.corpus.images().iter().zip(&world.pixels) {
        if let Some(rel) = &image.image_path {
            save_gray_png(&dir.join(rel), px)?;
        }
    }
    save_manifest(&dir.join("manifest.json"), &world.corpus)?;
    write_atomic(&dir.join("fixations.tsv"), fixations_tsv(&world.fixations).as_bytes())?;
    write_atomic(&dir.join("sentences.tsv"), sentences_tsv(&world.sentences).as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            images: 6,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate(&small()).unwrap();
        let b = generate(&small()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.fixations, b.fixations);
        let c = generate(&SyntheticConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn judgments_track_the_linear_target() {
        let w = generate(&small()).unwrap();
        let images = w.corpus.images();
        for pair in w.corpus.pairs() {
            assert_eq!(pair.judgments.len(), 10);
            let i = w.corpus.image_index(&pair.side_a.image_id).unwrap();
            let fa = &w.features[i].vectors[images[i].face_index(&pair.side_a.face_id).unwrap()];
            let fb = &w.features[i].vectors[images[i].face_index(&pair.side_b.face_id).unwrap()];
            let target: f64 = fa.as_slice().iter().zip(fb.as_slice()).zip(&w.weights).map(|((a, b), w)| (a - b) * w).sum();
            let got = prominence_core::aggregate_scores(pair, None).unwrap().difference();
            assert!(target.abs() <= 0.95 + 1e-9);
            assert!((got - target).abs() <= 1.0 / 40.0 + 1e-9, "{got} vs {target}");
        }
    }

    #[test]
    fn faces_do_not_overlap() {
        let w = generate(&small()).unwrap();
        for image in w.corpus.images() {
            assert!((3..=7).contains(&image.faces.len()));
            for (i, a) in image.faces.iter().enumerate() {
                for b in &image.faces[i + 1..] {
                    let (ab, bb) = (a.bbox, b.bbox);
                    let apart = ab.x + ab.w <= bb.x || bb.x + bb.w <= ab.x || ab.y + ab.h <= bb.y || bb.y + bb.h <= ab.y;
                    assert!(apart);
                }
            }
        }
    }
}
