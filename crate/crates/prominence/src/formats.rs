//! Tab-separated and JSON file formats.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use prominence_core::features::{FeatureVector, ImageFeatures, FEATURE_DIM, FEATURE_NAMES, LAYOUT_VERSION};
use prominence_core::ranking::RankingTable;
use prominence_core::{Corpus, RegressionModel};

use crate::error::{AppError, Result};
use crate::io::data_lines;

const LAYOUT_HEADER: &str = "# layout_version";

/// `# layout_version\t1`, a column header line, then one row per face:
/// image id, face id and the feature values.
pub fn features_tsv(corpus: &Corpus, features: &[ImageFeatures]) -> String {
    let mut out = format!("{LAYOUT_HEADER}\t{LAYOUT_VERSION}\nimage_id\tface_id");
    for name in FEATURE_NAMES {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (image, f) in corpus.images().iter().zip(features) {
        for (face, v) in image.faces.iter().zip(&f.vectors) {
            out.push_str(&image.image_id);
            out.push('\t');
            out.push_str(&face.face_id);
            for x in v.as_slice() {
                let _ = write!(out, "\t{x}");
            }
            out.push('\n');
        }
    }
    out
}

pub type FeatureRows = Vec<(String, String, FeatureVector)>;

pub fn parse_features_tsv(text: &str, path: &Path) -> Result<FeatureRows> {
    let mut lines = text.lines().enumerate();
    let version = lines
        .next()
        .and_then(|(_, l)| l.strip_prefix(LAYOUT_HEADER))
        .map(|v| v.trim())
        .ok_or_else(|| AppError::parse(path, "line 1: missing layout version header"))?;
    if version != LAYOUT_VERSION.to_string() {
        return Err(AppError::parse(
            path,
            format!("line 1: layout version {version}, expected {LAYOUT_VERSION}"),
        ));
    }
    lines.next();
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != FEATURE_DIM + 2 {
            return Err(AppError::parse(
                path,
                format!("line {}: {} columns, expected {}", i + 1, cols.len(), FEATURE_DIM + 2),
            ));
        }
        let values = cols[2..]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| AppError::parse(path, format!("line {}: {e}", i + 1)))?;
        let v = FeatureVector::new(values).map_err(|e| AppError::parse(path, format!("line {}: {e}", i + 1)))?;
        rows.push((cols[0].to_string(), cols[1].to_string(), v));
    }
    Ok(rows)
}

/// Serialized model: feature layout plus the regression model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub layout_version: u32,
    pub feature_names: Vec<String>,
    pub both_orientations: bool,
    pub model: RegressionModel,
}

impl ModelFile {
    pub fn new(model: &RegressionModel) -> Self {
        ModelFile {
            layout_version: LAYOUT_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            both_orientations: true,
            model: model.without_dual(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text).map_err(|e| AppError::parse(path, e.to_string()))?;
        if m.layout_version != LAYOUT_VERSION || m.model.weights.len() != FEATURE_DIM {
            return Err(AppError::parse(
                path,
                format!(
                    "model has layout {} with {} weights; this build uses layout {LAYOUT_VERSION} with {FEATURE_DIM}",
                    m.layout_version,
                    m.model.weights.len()
                ),
            ));
        }
        Ok(m)
    }
}

/// Rows of `image_id x y`.
pub fn parse_fixations(text: &str, path: &Path) -> Result<Vec<(String, f64, f64)>> {
    let mut out = Vec::new();
    for (n, line) in data_lines(text) {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(AppError::parse(path, format!("line {n}: expected image_id, x, y")));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AppError::parse(path, format!("line {n}: bad coordinate `{s}`")))
        };
        out.push((cols[0].to_string(), num(cols[1])?, num(cols[2])?));
    }
    Ok(out)
}

pub fn fixations_tsv(rows: &[(String, f64, f64)]) -> String {
    let mut out = String::from("# image_id\tx\ty\n");
    for (id, x, y) in rows {
        let _ = writeln!(out, "{id}\t{x}\t{y}");
    }
    out
}

/// Sentences keyed by image id, then face id.
pub type Sentences = BTreeMap<String, BTreeMap<String, String>>;

/// Rows of `image_id face_id sentence`; the sentence may contain spaces.
pub fn parse_sentences(text: &str, path: &Path) -> Result<Sentences> {
    let mut out = Sentences::new();
    for (n, line) in data_lines(text) {
        let mut cols = line.splitn(3, '\t');
        match (cols.next(), cols.next(), cols.next()) {
            (Some(i), Some(f), Some(s)) if !i.is_empty() && !f.is_empty() => {
                out.entry(i.to_string()).or_default().insert(f.to_string(), s.to_string());
            }
            _ => {
                return Err(AppError::parse(
                    path,
                    format!("line {n}: expected image_id, face_id, sentence"),
                ))
            }
        }
    }
    Ok(out)
}

pub fn sentences_tsv(s: &Sentences) -> String {
    let mut out = String::from("# image_id\tface_id\tsentence\n");
    for (image, faces) in s {
        for (face, sentence) in faces {
            let _ = writeln!(out, "{image}\t{face}\t{sentence}");
        }
    }
    out
}

/// `group item_id rating rank` rows, groups in key order.
pub fn ranking_tsv(tables: &BTreeMap<String, RankingTable>) -> String {
    let mut out = String::from("group\titem_id\trating\trank\n");
    for (group, table) in tables {
        for e in &table.entries {
            let _ = writeln!(out, "{group}\t{}\t{}\t{}", e.item_id, e.rating, e.rank);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use prominence_core::svr::{train, SolverConfig, TrainingSet};

    #[test]
    fn model_file_round_trips_exactly() {
        let mut set = TrainingSet::new(FEATURE_DIM);
        for i in 0..30 {
            let x: Vec<f64> = (0..FEATURE_DIM).map(|k| ((i * 7 + k * 3) % 11) as f64 / 7.0 - 0.6).collect();
            let y = x[0] * 0.3 - x[4] * 0.7 + x[5] / 3.0;
            set.push(&x, y).unwrap();
        }
        let model = train(&set, &SolverConfig::default()).unwrap();
        let file = ModelFile::new(&model);
        let back = ModelFile::from_json(&file.to_json(), Path::new("m.json")).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_json(), file.to_json());
    }

    #[test]
    fn fixations_parse() {
        let rows = parse_fixations("# header\ni1\t3.5\t4\n\ni2\t0\t1e1\n", Path::new("f")).unwrap();
        assert_eq!(rows, vec![("i1".into(), 3.5, 4.0), ("i2".into(), 0.0, 10.0)]);
        assert!(parse_fixations("i1\tx\t1\n", Path::new("f")).is_err());
        assert!(parse_fixations("i1\t1\n", Path::new("f")).is_err());
        assert_eq!(parse_fixations(&fixations_tsv(&rows), Path::new("f")).unwrap(), rows);
    }

    #[test]
    fn sentences_parse() {
        let s = parse_sentences("i1\tp1\ta man in a hat\ni1\tp2\ta child\n", Path::new("s")).unwrap();
        assert_eq!(s["i1"]["p1"], "a man in a hat");
        assert_eq!(parse_sentences(&sentences_tsv(&s), Path::new("s")).unwrap(), s);
        assert!(parse_sentences("i1\n", Path::new("s")).is_err());
    }
}
