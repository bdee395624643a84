//! Corpus manifest: one JSON document `{"images": [...], "pairs": [...]}`.
//! Image and saliency paths inside it are relative to the manifest's
//! directory unless absolute.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use prominence_core::{AnnotatedPair, Corpus, ImageRecord};

use crate::error::{AppError, Result};
use crate::io::write_atomic;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub images: Vec<ImageRecord>,
    #[serde(default)]
    pub pairs: Vec<AnnotatedPair>,
}

/// A validated corpus and the directory its relative paths hang off.
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub root: PathBuf,
}

impl LoadedCorpus {
    pub fn resolve(&self, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Corpus> {
    let m: Manifest = serde_json::from_str(text).map_err(|e| AppError::parse(path, e.to_string()))?;
    Ok(Corpus::new(m.images, m.pairs)?)
}

pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
    let corpus = parse_manifest(&text, path)?;
    let root = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedCorpus { corpus, root })
}

pub fn manifest_json(corpus: &Corpus) -> String {
    let m = Manifest {
        images: corpus.images().to_vec(),
        pairs: corpus.pairs().to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&m).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn save_manifest(path: &Path, corpus: &Corpus) -> Result<()> {
    write_atomic(path, manifest_json(corpus).as_bytes())
}
