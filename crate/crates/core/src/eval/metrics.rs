use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::{categorize_pair, PairCategory, PairScore};

fn check(predictions: &[f64], truths: &[PairScore]) -> Result<(), EvalError> {
    if predictions.len() != truths.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(())
}

/// Exact ties are directionless and always correct; a zero prediction on a
/// non-tied pair never is.
fn is_correct(prediction: f64, truth: &PairScore) -> bool {
    let gap = truth.difference();
    gap == 0.0 || (gap > 0.0 && prediction > 0.0) || (gap < 0.0 && prediction < 0.0)
}

/// `Σ max(s_a, s_b)·[sign agrees] / Σ max(s_a, s_b)`.
pub fn weighted_accuracy(predictions: &[f64], truths: &[PairScore]) -> Result<f64, EvalError> {
    check(predictions, truths)?;
    let (mut hit, mut total) = (0.0, 0.0);
    for (p, t) in predictions.iter().zip(truths) {
        let w = t.max();
        total += w;
        if is_correct(*p, t) {
            hit += w;
        }
    }
    Ok(hit / total)
}

/// Mean of `(prediction − (s_a − s_b))²`.
pub fn mse(predictions: &[f64], truths: &[PairScore]) -> Result<f64, EvalError> {
    check(predictions, truths)?;
    let sum: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t.difference()) * (p - t.difference()))
        .sum();
    Ok(sum / truths.len() as f64)
}

/// Accuracy restricted to pairs of one ground-truth category.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CategoryAccuracy {
    pub category: PairCategory,
    pub pairs: usize,
    /// `None` when the category has no pairs.
    pub weighted: Option<f64>,
    pub unweighted: Option<f64>,
}

pub fn category_accuracies(
    predictions: &[f64],
    truths: &[PairScore],
) -> Result<[CategoryAccuracy; 3], EvalError> {
    check(predictions, truths)?;
    let mut hits = [0usize; 3];
    let mut counts = [0usize; 3];
    let mut weight_hit = [0.0; 3];
    let mut weight_total = [0.0; 3];
    for (p, t) in predictions.iter().zip(truths) {
        let k = categorize_pair(t).index();
        counts[k] += 1;
        weight_total[k] += t.max();
        if is_correct(*p, t) {
            hits[k] += 1;
            weight_hit[k] += t.max();
        }
    }
    Ok(PairCategory::ALL.map(|category| {
        let k = category.index();
        let present = counts[k] > 0;
        CategoryAccuracy {
            category,
            pairs: counts[k],
            weighted: present.then(|| weight_hit[k] / weight_total[k]),
            unweighted: present.then(|| hits[k] as f64 / counts[k] as f64),
        }
    }))
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// `±1` predictions from a fair seeded coin.
pub fn coin_flip_predictions(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_accuracy_examples() {
        let t = [PairScore::from_a(0.9)];
        assert_eq!(weighted_accuracy(&[0.3], &t).unwrap(), 1.0);
        let two = [PairScore { s_a: 0.9, s_b: 0.1 }, PairScore { s_a: 0.6, s_b: 0.4 }];
        assert_eq!(weighted_accuracy(&[0.2, -0.1], &two).unwrap(), 0.9 / 1.5);
        let tie = [PairScore::from_a(0.5), PairScore::from_a(1.0)];
        // tie counts with weight 0.5, the other is wrong
        assert_eq!(weighted_accuracy(&[-7.0, -1.0], &tie).unwrap(), 0.5 / 1.5);
        assert_eq!(weighted_accuracy(&[0.0], &t).unwrap(), 0.0);
    }

    #[test]
    fn metric_errors() {
        assert_eq!(weighted_accuracy(&[], &[]), Err(EvalError::EmptyInput));
        assert_eq!(
            mse(&[1.0], &[]),
            Err(EvalError::LengthMismatch {
                predictions: 1,
                truths: 0
            })
        );
    }

    #[test]
    fn mse_examples() {
        let t = [PairScore::from_a(1.0), PairScore::from_a(0.0)];
        assert_eq!(mse(&[1.0, -1.0], &t).unwrap(), 0.0);
        assert_eq!(mse(&[0.0, 0.0], &t).unwrap(), 1.0);
    }

    #[test]
    fn categories_partition_pairs() {
        let truths = [
            PairScore::from_a(1.0),
            PairScore::from_a(0.75),
            PairScore::from_a(0.5),
            PairScore::from_a(0.25),
        ];
        let cats = category_accuracies(&[1.0, -1.0, 3.0, -1.0], &truths).unwrap();
        assert_eq!(cats.iter().map(|c| c.pairs).sum::<usize>(), 4);
        assert_eq!(cats[0].unweighted, Some(1.0));
        assert_eq!(cats[1].pairs, 2);
        assert_eq!(cats[1].unweighted, Some(0.5));
        assert_eq!(cats[2].weighted, Some(1.0));
        let only_same = category_accuracies(&[1.0], &[PairScore::from_a(0.5)]).unwrap();
        assert_eq!(only_same[0].weighted, None);
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
        assert_eq!(mean_std(&[4.0]), (4.0, 0.0));
    }

    #[test]
    fn coin_flips_are_balanced_and_seeded() {
        let a = coin_flip_predictions(2000, 7);
        assert_eq!(a, coin_flip_predictions(2000, 7));
        let heads = a.iter().filter(|&&v| v > 0.0).count();
        assert!((900..1100).contains(&heads));
        assert!(a.iter().all(|v| *v == 1.0 || *v == -1.0));
    }
}
