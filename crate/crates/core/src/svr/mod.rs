//! Linear ν-support-vector regression on pairwise feature differences.
//!
//! The model predicts `M(p_i, p_j) = w·φ(p_i, p_j) + b ≈ s_i − s_j`. Training
//! solves the ν-SVR dual
//!
//! ```text
//! max  yᵀ(α − α*) − ½‖Σ (α_k − α*_k) x_k‖²
//! s.t. Σ α = Σ α*,  Σ (α + α*) = C·ν·n,  0 ≤ α, α* ≤ C
//! ```
//!
//! whose primal is `½‖w‖² + C·(ν·n·ε + Σ ξ)`. Inputs are standardized per
//! dimension on the training rows by default and the transform is stored in
//! the model.

mod primal;
mod smo;

use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::features::{compose_pair, FeatureVector, PairFeature};
use primal::Residuals;
use smo::{dot, SmoParams};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SvrError {
    #[error("degenerate training input: {0}")]
    DegenerateInput(&'static str),
    #[error("feature length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite training value")]
    NonFinite,
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("dual state not retained by this model")]
    StateUnavailable,
}

/// Rows of pair features with regression targets `s_i − s_j`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    dim: usize,
    features: Vec<f64>,
    targets: Vec<f64>,
}

impl TrainingSet {
    pub fn new(dim: usize) -> Self {
        TrainingSet {
            dim,
            features: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn from_rows<'a, I>(dim: usize, rows: I) -> Result<Self, SvrError>
    where
        I: IntoIterator<Item = (&'a [f64], f64)>,
    {
        let mut set = TrainingSet::new(dim);
        for (x, y) in rows {
            set.push(x, y)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, features: &[f64], target: f64) -> Result<(), SvrError> {
        if features.len() != self.dim {
            return Err(SvrError::LengthMismatch {
                expected: self.dim,
                got: features.len(),
            });
        }
        if !target.is_finite() || features.iter().any(|v| !v.is_finite()) {
            return Err(SvrError::NonFinite);
        }
        self.features.extend_from_slice(features);
        self.targets.push(target);
        Ok(())
    }

    /// Adds `(f, t)` followed by `(−f, −t)`.
    pub fn push_both_orientations(&mut self, pair: &PairFeature, target: f64) -> Result<(), SvrError> {
        self.push(pair.as_slice(), target)?;
        self.push(pair.negated().as_slice(), -target)
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn target(&self, i: usize) -> f64 {
        self.targets[i]
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct SolverConfig {
    /// Box bound on every dual multiplier.
    pub c: f64,
    pub nu: f64,
    /// Stop once the largest pairwise KKT violation is at most this.
    pub tolerance: f64,
    pub max_iterations: u64,
    /// Recorded with the model; working-set ties are broken by index, so the
    /// solve itself is deterministic regardless.
    pub seed: u64,
    pub standardize: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            c: 1.0,
            nu: 0.5,
            tolerance: 1e-4,
            max_iterations: 100_000,
            seed: 42,
            standardize: true,
        }
    }
}

impl SolverConfig {
    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn validate(&self) -> Result<(), SvrError> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(SvrError::InvalidConfig("C must be positive"));
        }
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(SvrError::InvalidConfig("nu must lie in (0, 1]"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(SvrError::InvalidConfig("tolerance must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(SvrError::InvalidConfig("max_iterations must be positive"));
        }
        Ok(())
    }
}

/// The default selection grid for C: 2⁻⁶, 2⁻⁴, …, 2⁶.
pub fn default_c_grid() -> Vec<f64> {
    (-3..=3).map(|k| libm::pow(2.0, 2.0 * k as f64)).collect()
}

/// Per-dimension affine map `(x − mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    /// Population statistics of the rows; constant dimensions keep scale 1.
    pub fn fit(data: &TrainingSet) -> Self {
        let (n, d) = (data.len() as f64, data.dim());
        let mut mean = alloc::vec![0.0; d];
        for i in 0..data.len() {
            for (m, v) in mean.iter_mut().zip(data.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = alloc::vec![0.0; d];
        for i in 0..data.len() {
            for ((s, v), m) in var.iter_mut().zip(data.row(i)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = libm::sqrt(s / n);
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, scale }
    }

    pub fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.extend(
            x.iter()
                .zip(&self.mean)
                .zip(&self.scale)
                .map(|((v, m), s)| (v - m) / s),
        );
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Diagnostics {
    pub iterations: u64,
    /// False when the iteration cap stopped the solver first.
    pub converged: bool,
    pub kkt_violation: f64,
    pub duality_gap: f64,
    pub dual_objective: f64,
    pub epsilon: f64,
    pub training_rows: usize,
}

/// Dual multipliers, kept so the duality gap can be recomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
}

impl DualState {
    pub fn coefficients(&self) -> Vec<f64> {
        self.alpha.iter().zip(&self.alpha_star).map(|(a, s)| a - s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct RegressionModel {
    /// Weights in standardized feature space.
    pub weights: Vec<f64>,
    pub bias: f64,
    pub standardization: Option<Standardization>,
    pub c: f64,
    pub nu: f64,
    pub tolerance: f64,
    pub seed: u64,
    pub diagnostics: Diagnostics,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub dual: Option<DualState>,
}

impl RegressionModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Copy without the dual state (what a model file carries).
    pub fn without_dual(&self) -> Self {
        RegressionModel {
            dual: None,
            ..self.clone()
        }
    }

    /// `(weights, bias)` acting on raw, unstandardized features.
    pub fn raw_weights(&self) -> (Vec<f64>, f64) {
        match &self.standardization {
            None => (self.weights.clone(), self.bias),
            Some(s) => {
                let w: Vec<f64> = self.weights.iter().zip(&s.scale).map(|(w, sc)| w / sc).collect();
                let shift: f64 = w.iter().zip(&s.mean).map(|(w, m)| w * m).sum();
                (w, self.bias - shift)
            }
        }
    }
}

fn transformed(data: &TrainingSet, standardization: Option<&Standardization>) -> Vec<f64> {
    match standardization {
        None => data.features.clone(),
        Some(s) => {
            let mut out = Vec::with_capacity(data.features.len());
            for i in 0..data.len() {
                s.apply(data.row(i), &mut out);
            }
            out
        }
    }
}

fn check_trainable(data: &TrainingSet, cfg: &SolverConfig) -> Result<(), SvrError> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(SvrError::DegenerateInput("fewer than 2 rows"));
    }
    if data.dim() == 0 {
        return Err(SvrError::DegenerateInput("zero-length features"));
    }
    Ok(())
}

pub fn train(data: &TrainingSet, cfg: &SolverConfig) -> Result<RegressionModel, SvrError> {
    train_inner(data, cfg, None)
}

/// Like [`train`], also returning the dual objective after every iteration
/// (first entry is the starting point).
pub fn train_traced(
    data: &TrainingSet,
    cfg: &SolverConfig,
) -> Result<(RegressionModel, Vec<f64>), SvrError> {
    let mut trace = Vec::new();
    let model = train_inner(data, cfg, Some(&mut trace))?;
    Ok((model, trace))
}

fn train_inner(
    data: &TrainingSet,
    cfg: &SolverConfig,
    trace: Option<&mut Vec<f64>>,
) -> Result<RegressionModel, SvrError> {
    check_trainable(data, cfg)?;
    let standardization = cfg.standardize.then(|| Standardization::fit(data));
    let x = transformed(data, standardization.as_ref());
    let d = data.dim();
    let params = SmoParams {
        c: cfg.c,
        nu: cfg.nu,
        tolerance: cfg.tolerance,
        max_iterations: cfg.max_iterations,
    };
    let out = smo::solve(&x, data.targets(), d, &params, trace);

    let mut weights = alloc::vec![0.0; d];
    for (k, &ck) in out.coef.iter().enumerate() {
        if ck != 0.0 {
            for (w, v) in weights.iter_mut().zip(&x[k * d..(k + 1) * d]) {
                *w += ck * v;
            }
        }
    }
    let dual_objective = smo::dual_objective(data.targets(), &out.coef, &out.errors);
    let gap = gap_from_parts(&x, data.targets(), &weights, &out.coef, cfg.c, cfg.nu, &[(out.bias, out.epsilon)]);

    Ok(RegressionModel {
        weights,
        bias: out.bias,
        standardization,
        c: cfg.c,
        nu: cfg.nu,
        tolerance: cfg.tolerance,
        seed: cfg.seed,
        diagnostics: Diagnostics {
            iterations: out.iterations,
            converged: out.converged,
            kkt_violation: out.violation,
            duality_gap: gap,
            dual_objective,
            epsilon: out.epsilon,
            training_rows: data.len(),
        },
        dual: Some(DualState {
            alpha: out.alpha,
            alpha_star: out.alpha_star,
        }),
    })
}

/// Primal objective at `w` (with the best bias and tube) minus the dual
/// objective at `coef`.
fn gap_from_parts(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    coef: &[f64],
    c: f64,
    nu: f64,
    extra_tubes: &[(f64, f64)],
) -> f64 {
    let d = w.len();
    let residuals: Vec<f64> = y
        .iter()
        .enumerate()
        .map(|(k, yk)| yk - dot(w, &x[k * d..(k + 1) * d]))
        .collect();
    let res = Residuals::new(residuals);
    let w_sq = dot(w, w);
    let primal = 0.5 * w_sq + c * primal::best_tube_objective(&res, nu, extra_tubes);
    let dual = dot(y, coef) - 0.5 * w_sq;
    primal - dual
}

/// Primal minus dual objective of a trained model on its training data.
pub fn duality_gap(model: &RegressionModel, data: &TrainingSet) -> Result<f64, SvrError> {
    let dual = model.dual.as_ref().ok_or(SvrError::StateUnavailable)?;
    if dual.alpha.len() != data.len() {
        return Err(SvrError::LengthMismatch {
            expected: dual.alpha.len(),
            got: data.len(),
        });
    }
    if data.dim() != model.dim() {
        return Err(SvrError::LengthMismatch {
            expected: model.dim(),
            got: data.dim(),
        });
    }
    let x = transformed(data, model.standardization.as_ref());
    let coef = dual.coefficients();
    Ok(gap_from_parts(
        &x,
        data.targets(),
        &model.weights,
        &coef,
        model.c,
        model.nu,
        &[(model.bias, model.diagnostics.epsilon)],
    ))
}

/// Dual objective `yᵀc − ½‖w‖²` of a model with retained dual state.
pub fn dual_objective(model: &RegressionModel, data: &TrainingSet) -> Result<f64, SvrError> {
    let dual = model.dual.as_ref().ok_or(SvrError::StateUnavailable)?;
    if dual.alpha.len() != data.len() {
        return Err(SvrError::LengthMismatch {
            expected: dual.alpha.len(),
            got: data.len(),
        });
    }
    Ok(dot(data.targets(), &dual.coefficients()) - 0.5 * dot(&model.weights, &model.weights))
}

pub fn predict(model: &RegressionModel, features: &[f64]) -> Result<f64, SvrError> {
    if features.len() != model.dim() {
        return Err(SvrError::LengthMismatch {
            expected: model.dim(),
            got: features.len(),
        });
    }
    let value = match &model.standardization {
        None => dot(&model.weights, features),
        Some(s) => model
            .weights
            .iter()
            .zip(features)
            .zip(s.mean.iter().zip(&s.scale))
            .map(|((w, v), (m, sc))| w * ((v - m) / sc))
            .sum(),
    };
    Ok(value + model.bias)
}

pub fn predict_pair(model: &RegressionModel, pair: &PairFeature) -> Result<f64, SvrError> {
    predict(model, pair.as_slice())
}

/// Per-face score: mean prediction of the face against every other face of
/// the same image. A lone face scores 0.
pub fn score_individuals(
    model: &RegressionModel,
    faces: &[FeatureVector],
) -> Result<Vec<f64>, SvrError> {
    let n = faces.len();
    let mut scores = Vec::with_capacity(n);
    for (p, fp) in faces.iter().enumerate() {
        if n == 1 {
            scores.push(0.0);
            continue;
        }
        let mut total = 0.0;
        for (q, fq) in faces.iter().enumerate() {
            if p == q {
                continue;
            }
            let pair = compose_pair(fp, fq).map_err(|_| SvrError::LengthMismatch {
                expected: fp.len(),
                got: fq.len(),
            })?;
            total += predict_pair(model, &pair)?;
        }
        scores.push(total / (n - 1) as f64);
    }
    Ok(scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_set(n: usize, d: usize, w: &[f64], seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut set = TrainingSet::new(d);
        for _ in 0..n {
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y = dot(w, &x);
            set.push(&x, y).unwrap();
        }
        set
    }

    fn model_with(weights: Vec<f64>, bias: f64) -> RegressionModel {
        RegressionModel {
            weights,
            bias,
            standardization: None,
            c: 1.0,
            nu: 0.5,
            tolerance: 1e-4,
            seed: 0,
            diagnostics: Diagnostics {
                iterations: 0,
                converged: true,
                kkt_violation: 0.0,
                duality_gap: 0.0,
                dual_objective: 0.0,
                epsilon: 0.0,
                training_rows: 0,
            },
            dual: None,
        }
    }

    #[test]
    fn recovers_noiseless_linear_map() {
        let mut w = vec![0.0; 5];
        w[0] = 1.0;
        w[1] = -2.0;
        let data = linear_set(200, 5, &w, 3);
        let model = train(&data, &SolverConfig::default()).unwrap();
        assert!(model.diagnostics.converged);
        let mse: f64 = (0..data.len())
            .map(|i| {
                let p = predict(&model, data.row(i)).unwrap();
                (p - data.target(i)) * (p - data.target(i))
            })
            .sum::<f64>()
            / data.len() as f64;
        assert!(mse < 1e-3, "mse {mse}");
    }

    #[test]
    fn zero_targets_give_zero_model() {
        let data = linear_set(30, 3, &[0.0, 0.0, 0.0], 1);
        let model = train(&data, &SolverConfig::default()).unwrap();
        assert!(model.weights.iter().all(|w| w.abs() < 1e-9));
        assert!(model.bias.abs() < 1e-9);
        assert!(duality_gap(&model, &data).unwrap().abs() < 1e-9);
        assert_eq!(model.diagnostics.iterations, 0);
    }

    #[test]
    fn degenerate_inputs() {
        let one = linear_set(1, 2, &[1.0, 1.0], 0);
        assert_eq!(
            train(&one, &SolverConfig::default()),
            Err(SvrError::DegenerateInput("fewer than 2 rows"))
        );
        let mut empty_dim = TrainingSet::new(0);
        empty_dim.push(&[], 1.0).unwrap();
        empty_dim.push(&[], -1.0).unwrap();
        assert!(matches!(
            train(&empty_dim, &SolverConfig::default()),
            Err(SvrError::DegenerateInput(_))
        ));
        let two = linear_set(4, 2, &[1.0, 1.0], 0);
        let bad = SolverConfig {
            nu: 1.5,
            ..Default::default()
        };
        assert!(matches!(train(&two, &bad), Err(SvrError::InvalidConfig(_))));
    }

    #[test]
    fn iteration_cap_is_flagged() {
        let data = linear_set(40, 3, &[1.0, -1.0, 0.5], 9);
        let cfg = SolverConfig {
            max_iterations: 1,
            ..Default::default()
        };
        let model = train(&data, &cfg).unwrap();
        assert!(!model.diagnostics.converged);
        assert_eq!(model.diagnostics.iterations, 1);
        let gap = duality_gap(&model, &data).unwrap();
        assert!(gap > cfg.tolerance);
    }

    #[test]
    fn converged_gap_is_small_and_nonnegative() {
        let data = linear_set(60, 3, &[0.3, -1.0, 0.5], 11);
        let model = train(&data, &SolverConfig::default()).unwrap();
        let gap = duality_gap(&model, &data).unwrap();
        assert!(gap >= -1e-9);
        assert!(gap <= 1e-3, "gap {gap}");
        assert_eq!(gap, model.diagnostics.duality_gap);
        assert_eq!(
            duality_gap(&model.without_dual(), &data),
            Err(SvrError::StateUnavailable)
        );
    }

    #[test]
    fn dual_objective_never_decreases() {
        let data = linear_set(50, 4, &[1.0, 0.0, -0.5, 2.0], 5);
        let (_, trace) = train_traced(&data, &SolverConfig::default()).unwrap();
        assert!(trace.len() > 2);
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data = linear_set(80, 4, &[1.0, 0.2, -0.5, 0.0], 21);
        let a = train(&data, &SolverConfig::default()).unwrap();
        let b = train(&data, &SolverConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn predict_examples() {
        let zero = model_with(vec![0.0; 3], 0.0);
        assert_eq!(predict(&zero, &[5.0, -1.0, 2.0]).unwrap(), 0.0);
        let m = model_with(vec![2.0, 0.0, 0.0], 1.0);
        assert_eq!(predict(&m, &[3.0, 0.0, 0.0]).unwrap(), 7.0);
        assert_eq!(
            predict(&m, &[1.0]),
            Err(SvrError::LengthMismatch { expected: 3, got: 1 })
        );
        let a = FeatureVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let b = FeatureVector::new(vec![0.5, -1.0, 4.0]).unwrap();
        let m = model_with(vec![0.3, -0.7, 1.1], 0.25);
        let ab = predict_pair(&m, &compose_pair(&a, &b).unwrap()).unwrap();
        let ba = predict_pair(&m, &compose_pair(&b, &a).unwrap()).unwrap();
        assert!((ab - (-ba + 2.0 * 0.25)).abs() < 1e-12);
    }

    #[test]
    fn individual_scores() {
        let m = model_with(vec![1.0], 0.0);
        let lone = vec![FeatureVector::new(vec![3.0]).unwrap()];
        assert_eq!(score_individuals(&m, &lone).unwrap(), vec![0.0]);
        let two = vec![
            FeatureVector::new(vec![0.6]).unwrap(),
            FeatureVector::new(vec![0.0]).unwrap(),
        ];
        assert_eq!(score_individuals(&m, &two).unwrap(), vec![0.6, -0.6]);
    }

    #[test]
    fn raw_weights_reproduce_predictions() {
        let data = linear_set(50, 3, &[1.0, 2.0, -1.0], 8);
        let model = train(&data, &SolverConfig::default()).unwrap();
        let (w, b) = model.raw_weights();
        for i in 0..5 {
            let direct = predict(&model, data.row(i)).unwrap();
            let raw = dot(&w, data.row(i)) + b;
            assert!((direct - raw).abs() < 1e-9);
        }
    }

    #[test]
    fn c_grid() {
        let g = default_c_grid();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 1.0 / 64.0);
        assert_eq!(g[3], 1.0);
        assert_eq!(g[6], 64.0);
    }
}
