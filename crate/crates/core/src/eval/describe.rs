use alloc::collections::BTreeMap;
use alloc::string::String;

use super::EvalError;
use crate::corpus::ImageRecord;

/// Index of the highest score; equal scores go to the lexicographically
/// smallest face id. `None` for an empty image.
pub fn argmax_face(image: &ImageRecord, scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, (face, &s)) in image.faces.iter().zip(scores).enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let better = s > scores[b] || (s == scores[b] && face.face_id < image.faces[b].face_id);
                Some(if better { i } else { b })
            }
        };
    }
    best
}

/// Sentence of the face predicted most important. `sentences` maps face id
/// to sentence and must cover every face; `scores` follow face order.
pub fn select_description<'s>(
    image: &ImageRecord,
    sentences: &'s BTreeMap<String, String>,
    scores: &[f64],
) -> Result<&'s str, EvalError> {
    if scores.len() != image.faces.len() {
        return Err(EvalError::LengthMismatch {
            predictions: scores.len(),
            truths: image.faces.len(),
        });
    }
    if let Some(face) = image.faces.iter().find(|f| !sentences.contains_key(&f.face_id)) {
        return Err(EvalError::MissingSentence {
            image_id: image.image_id.clone(),
            face_id: face.face_id.clone(),
        });
    }
    let i = argmax_face(image, scores).ok_or(EvalError::EmptyInput)?;
    Ok(sentences[&image.faces[i].face_id].as_str())
}

/// Fraction of positions where the two selections match.
pub fn selection_agreement(model: &[usize], oracle: &[usize]) -> Result<f64, EvalError> {
    if model.len() != oracle.len() {
        return Err(EvalError::LengthMismatch {
            predictions: model.len(),
            truths: oracle.len(),
        });
    }
    if model.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let same = model.iter().zip(oracle).filter(|(a, b)| a == b).count();
    Ok(same as f64 / model.len() as f64)
}
