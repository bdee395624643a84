//! Elo aggregation of graded pairwise outcomes and Kendall rank correlation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::corpus::{aggregate_scores, convert_judgment, AnnotatedPair, CorpusError, PairLevel};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankingError {
    #[error("outcome refers to unknown item `{0}`")]
    UnknownItem(String),
    #[error("rankings cover different item sets")]
    ItemSetMismatch,
    #[error("invalid Elo configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EloConfig {
    pub initial_rating: f64,
    pub k_factor: f64,
    pub epochs: u32,
    pub seed: u64,
    /// Rating difference at which the expected score is 1/11.
    pub scale: f64,
}

impl Default for EloConfig {
    fn default() -> Self {
        EloConfig {
            initial_rating: 1000.0,
            k_factor: 32.0,
            epochs: 100,
            seed: 42,
            scale: 400.0,
        }
    }
}

impl EloConfig {
    fn validate(&self) -> Result<(), RankingError> {
        if !(self.k_factor.is_finite() && self.k_factor > 0.0) {
            return Err(RankingError::InvalidConfig("k_factor must be positive"));
        }
        if self.epochs == 0 {
            return Err(RankingError::InvalidConfig("epochs must be positive"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(RankingError::InvalidConfig("scale must be positive"));
        }
        if !self.initial_rating.is_finite() {
            return Err(RankingError::InvalidConfig("initial rating must be finite"));
        }
        Ok(())
    }
}

/// One graded comparison; `score_a` is A's actual score in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Outcome {
    pub a: String,
    pub b: String,
    pub score_a: f64,
}

impl Outcome {
    pub fn new(a: impl Into<String>, b: impl Into<String>, score_a: f64) -> Self {
        Outcome {
            a: a.into(),
            b: b.into(),
            score_a,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RankEntry {
    pub item_id: String,
    pub rating: f64,
    /// 1 is the top.
    pub rank: usize,
}

/// Items in rank order.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RankingTable {
    pub entries: Vec<RankEntry>,
    /// Some items share a rating; their order comes from the id tie-break.
    pub had_ties: bool,
}

impl RankingTable {
    /// Orders by descending score, then ascending item id.
    pub fn from_scores<S: AsRef<str>>(items: &[S], scores: &[f64]) -> Self {
        let mut pairs: Vec<(&str, f64)> = items.iter().map(|s| s.as_ref()).zip(scores.iter().copied()).collect();
        pairs.sort_by(|x, y| y.1.total_cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        let had_ties = pairs.windows(2).any(|w| w[0].1 == w[1].1);
        let entries = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (id, rating))| RankEntry {
                item_id: id.to_string(),
                rating,
                rank: i + 1,
            })
            .collect();
        RankingTable { entries, had_ties }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank_of(&self, item_id: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.item_id == item_id).map(|e| e.rank)
    }

    pub fn rating_of(&self, item_id: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.item_id == item_id).map(|e| e.rating)
    }

    pub fn order(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.item_id.as_str()).collect()
    }
}

fn expected_score(ra: f64, rb: f64, scale: f64) -> f64 {
    1.0 / (1.0 + libm::pow(10.0, (rb - ra) / scale))
}

/// Final-epoch Elo ratings. Each epoch visits every outcome once, in an
/// order reshuffled by a generator seeded once from `cfg.seed`.
pub fn elo_ratings(
    items: &[String],
    outcomes: &[Outcome],
    cfg: &EloConfig,
) -> Result<Vec<f64>, RankingError> {
    cfg.validate()?;
    let index: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut resolved = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let a = *index.get(o.a.as_str()).ok_or_else(|| RankingError::UnknownItem(o.a.clone()))?;
        let b = *index.get(o.b.as_str()).ok_or_else(|| RankingError::UnknownItem(o.b.clone()))?;
        resolved.push((a, b, o.score_a));
    }
    let mut ratings = alloc::vec![cfg.initial_rating; items.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.epochs {
        resolved.shuffle(&mut rng);
        for &(a, b, s) in &resolved {
            let delta = cfg.k_factor * (s - expected_score(ratings[a], ratings[b], cfg.scale));
            ratings[a] += delta;
            ratings[b] -= delta;
        }
    }
    Ok(ratings)
}

pub fn elo_rank(
    items: &[String],
    outcomes: &[Outcome],
    cfg: &EloConfig,
) -> Result<RankingTable, RankingError> {
    let ratings = elo_ratings(items, outcomes, cfg)?;
    Ok(RankingTable::from_scores(items, &ratings))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TauResult {
    pub tau: f64,
    /// Either side had tied values, so the tau-b denominator applied.
    pub ties: bool,
}

/// Kendall's tau-b of two aligned score lists. Without ties this is
/// `(concordant − discordant) / (n(n−1)/2)`; a side that is entirely tied
/// gives 0.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> TauResult {
    let n = x.len().min(y.len());
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let dx = x[i].partial_cmp(&x[j]).unwrap_or(Ordering::Equal);
            let dy = y[i].partial_cmp(&y[j]).unwrap_or(Ordering::Equal);
            match (dx, dy) {
                (Ordering::Equal, Ordering::Equal) => {}
                (Ordering::Equal, _) => tied_x += 1,
                (_, Ordering::Equal) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let both = n as i64 * (n as i64 - 1) / 2 - concordant - discordant - tied_x - tied_y;
    let ties = tied_x + tied_y + both > 0;
    let denom = libm::sqrt(
        ((concordant + discordant + tied_x) as f64) * ((concordant + discordant + tied_y) as f64),
    );
    let tau = if denom == 0.0 {
        0.0
    } else {
        (concordant - discordant) as f64 / denom
    };
    TauResult { tau, ties }
}

/// Tau between two rankings of the same items, compared through their
/// ratings so that equal ratings count as ties.
pub fn kendall_tau(r1: &RankingTable, r2: &RankingTable) -> Result<TauResult, RankingError> {
    if r1.len() != r2.len() {
        return Err(RankingError::ItemSetMismatch);
    }
    let other: BTreeMap<&str, f64> = r2.entries.iter().map(|e| (e.item_id.as_str(), e.rating)).collect();
    if other.len() != r2.len() {
        return Err(RankingError::ItemSetMismatch);
    }
    let mut x = Vec::with_capacity(r1.len());
    let mut y = Vec::with_capacity(r1.len());
    for e in &r1.entries {
        let v = other.get(e.item_id.as_str()).ok_or(RankingError::ItemSetMismatch)?;
        x.push(e.rating);
        y.push(*v);
    }
    Ok(kendall_tau_b(&x, &y))
}

/// Tau between two rank assignments given as positions (1 = top).
pub fn kendall_tau_ranks(r1: &[usize], r2: &[usize]) -> Result<f64, RankingError> {
    if r1.len() != r2.len() {
        return Err(RankingError::ItemSetMismatch);
    }
    let x: Vec<f64> = r1.iter().map(|&r| -(r as f64)).collect();
    let y: Vec<f64> = r2.iter().map(|&r| -(r as f64)).collect();
    Ok(kendall_tau_b(&x, &y).tau)
}

/// Comparison outcomes of one ranking group, keyed by item id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutcomeGroup {
    pub items: Vec<String>,
    pub outcomes: Vec<Outcome>,
}

/// Splits pairs into ranking groups. Image-level pairs are grouped by image
/// with face ids as items; corpus-level pairs form one group named
/// `corpus` with `image/face` items. With `per_judgment`, every judgment is
/// its own outcome; otherwise each pair contributes its aggregated score.
pub fn outcome_groups(
    pairs: &[AnnotatedPair],
    per_judgment: bool,
) -> Result<BTreeMap<String, OutcomeGroup>, CorpusError> {
    let mut groups: BTreeMap<String, OutcomeGroup> = BTreeMap::new();
    for pair in pairs {
        let (key, a, b) = match pair.level() {
            PairLevel::Image => (
                pair.side_a.image_id.clone(),
                pair.side_a.face_id.clone(),
                pair.side_b.face_id.clone(),
            ),
            PairLevel::Corpus => (
                String::from("corpus"),
                pair.side_a.to_string(),
                pair.side_b.to_string(),
            ),
        };
        let group = groups.entry(key).or_default();
        for id in [&a, &b] {
            if !group.items.contains(id) {
                group.items.push(id.clone());
            }
        }
        if per_judgment {
            if pair.judgments.is_empty() {
                return Err(CorpusError::EmptyJudgmentSet {
                    pair_id: pair.pair_id.clone(),
                });
            }
            for j in &pair.judgments {
                group.outcomes.push(Outcome::new(a.clone(), b.clone(), convert_judgment(j).s_a));
            }
        } else {
            let score = aggregate_scores(pair, None)?;
            group.outcomes.push(Outcome::new(a, b, score.s_a));
        }
    }
    for group in groups.values_mut() {
        group.items.sort();
    }
    Ok(groups)
}
