//! Pairwise coordinate ascent on the ν-SVR dual with a linear kernel.
//!
//! Variables are `α, α* ∈ [0, C]^n` with `Σα = Σα*` and
//! `Σ(α + α*) = C·ν·n`. The regression coefficients are `c = α − α*` and the
//! problem solved is
//!
//! ```text
//! min ½ cᵀKc − yᵀc
//! ```
//!
//! Both equality constraints force every step to move two multipliers of the
//! same family (two α's or two α*'s) by opposite amounts, so working sets are
//! drawn per family. The pair is the maximal KKT violator of the family with
//! the larger violation; ties go to the lowest index. The solve stops once
//! the violation and the duality gap are both within tolerance.

use alloc::vec;
use alloc::vec::Vec;

use super::primal::{best_tube_objective, Residuals};

/// Rows with more samples than this compute kernel rows on demand instead
/// of caching the full Gram matrix.
const GRAM_CACHE_LIMIT: usize = 2048;

const TAU: f64 = 1e-12;

enum Kernel<'a> {
    Cached { n: usize, gram: Vec<f64>, diag: Vec<f64> },
    OnDemand { x: &'a [f64], d: usize, diag: Vec<f64> },
}

impl<'a> Kernel<'a> {
    fn new(x: &'a [f64], n: usize, d: usize) -> Self {
        if n <= GRAM_CACHE_LIMIT {
            let mut gram = vec![0.0; n * n];
            for i in 0..n {
                let xi = &x[i * d..(i + 1) * d];
                for j in i..n {
                    let v = dot(xi, &x[j * d..(j + 1) * d]);
                    gram[i * n + j] = v;
                    gram[j * n + i] = v;
                }
            }
            let diag = (0..n).map(|i| gram[i * n + i]).collect();
            Kernel::Cached { n, gram, diag }
        } else {
            let diag = (0..n).map(|i| dot(&x[i * d..(i + 1) * d], &x[i * d..(i + 1) * d])).collect();
            Kernel::OnDemand { x, d, diag }
        }
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        match self {
            Kernel::Cached { n, gram, .. } => gram[i * n + j],
            Kernel::OnDemand { x, d, .. } => dot(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]),
        }
    }

    fn diagonal(&self, i: usize) -> f64 {
        match self {
            Kernel::Cached { diag, .. } | Kernel::OnDemand { diag, .. } => diag[i],
        }
    }

    /// `out[r] += scale · (K[r, i] − K[r, j])` for every row `r`.
    fn axpy_difference(&self, i: usize, j: usize, scale: f64, out: &mut [f64]) {
        match self {
            Kernel::Cached { n, gram, .. } => {
                let (ri, rj) = (&gram[i * n..(i + 1) * n], &gram[j * n..(j + 1) * n]);
                for ((o, ki), kj) in out.iter_mut().zip(ri).zip(rj) {
                    *o += scale * (ki - kj);
                }
            }
            Kernel::OnDemand { x, d, .. } => {
                let (xi, xj) = (&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
                for (o, xr) in out.iter_mut().zip(x.chunks_exact(*d)) {
                    *o += scale * (dot(xr, xi) - dot(xr, xj));
                }
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    /// α, moves with sign +1
    Upper,
    /// α*, moves with sign −1
    Lower,
}

#[derive(Debug, Clone)]
pub(crate) struct SmoOutput {
    pub alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    /// `α − α*`
    pub coef: Vec<f64>,
    /// `Kc − y`
    pub errors: Vec<f64>,
    pub iterations: u64,
    pub converged: bool,
    pub violation: f64,
    /// Bias and tube half-width read off the KKT conditions.
    pub bias: f64,
    pub epsilon: f64,
}

pub(crate) struct SmoParams {
    pub c: f64,
    pub nu: f64,
    pub tolerance: f64,
    pub max_iterations: u64,
}

/// Dual objective in maximisation form, `yᵀc − ½cᵀKc`, from `e = Kc − y`.
pub(crate) fn dual_objective(y: &[f64], coef: &[f64], errors: &[f64]) -> f64 {
    0.5 * (dot(y, coef) - dot(coef, errors))
}

/// Primal minus dual objective at `c`, using `‖w‖² = cᵀ(e + y)` and residuals
/// `y − Xw = −e`.
pub(crate) fn duality_gap(y: &[f64], coef: &[f64], errors: &[f64], c: f64, nu: f64) -> f64 {
    let w_sq = dot(coef, errors) + dot(coef, y);
    let res = Residuals::new(errors.iter().map(|e| -e).collect());
    w_sq + c * best_tube_objective(&res, nu, &[]) - dot(y, coef)
}

struct Choice {
    family: Family,
    up: usize,
    low: usize,
    violation: f64,
}

/// Most violating pair per family. The score is `−e` in both families;
/// `up` maximises it among rows whose `c` may grow (α below C, α* above 0),
/// `low` minimises it among rows whose `c` may shrink. One pass covers both
/// families.
fn select(alpha: &[f64], alpha_star: &[f64], errors: &[f64], c: f64) -> Option<Choice> {
    // [family] -> ((up, score), (low, score))
    let mut ext = [((usize::MAX, f64::NEG_INFINITY), (usize::MAX, f64::INFINITY)); 2];
    for (r, ((&e, &a), &a_star)) in errors.iter().zip(alpha).zip(alpha_star).enumerate() {
        let s = -e;
        let [upper, lower] = &mut ext;
        if a < c && s > upper.0 .1 {
            upper.0 = (r, s);
        }
        if a > 0.0 && s < upper.1 .1 {
            upper.1 = (r, s);
        }
        if a_star > 0.0 && s > lower.0 .1 {
            lower.0 = (r, s);
        }
        if a_star < c && s < lower.1 .1 {
            lower.1 = (r, s);
        }
    }
    let mut best: Option<Choice> = None;
    for (family, ((up, up_score), (low, low_score))) in [Family::Upper, Family::Lower].into_iter().zip(ext) {
        if up == usize::MAX || low == usize::MAX {
            continue;
        }
        let violation = up_score - low_score;
        if best.as_ref().map_or(true, |b| violation > b.violation) {
            best = Some(Choice {
                family,
                up,
                low,
                violation,
            });
        }
    }
    best
}

pub(crate) fn solve(
    x: &[f64],
    y: &[f64],
    d: usize,
    params: &SmoParams,
    mut trace: Option<&mut Vec<f64>>,
) -> SmoOutput {
    let n = y.len();
    let c = params.c;
    let kernel = Kernel::new(x, n, d);

    // Feasible start: fill both families front to back up to C·ν·n/2 each.
    let mut alpha = vec![0.0; n];
    let mut remaining = c * params.nu * n as f64 / 2.0;
    for a in alpha.iter_mut() {
        *a = remaining.min(c);
        remaining -= *a;
    }
    let mut alpha_star = alpha.clone();
    let mut coef = vec![0.0; n];
    let mut errors: Vec<f64> = y.iter().map(|v| -v).collect();

    if let Some(t) = trace.as_deref_mut() {
        t.push(dual_objective(y, &coef, &errors));
    }

    let mut iterations = 0u64;
    let mut converged = false;
    let mut violation;
    let mut next_gap_check = 0u64;
    let gap_interval = (n as u64 / 8).max(1);
    loop {
        let Some(choice) = select(&alpha, &alpha_star, &errors, c) else {
            violation = 0.0;
            converged = true;
            break;
        };
        violation = choice.violation;
        if violation <= 0.0 {
            converged = true;
            break;
        }
        // Small violation alone does not bound the gap; confirm it.
        if violation <= params.tolerance && iterations >= next_gap_check {
            if duality_gap(y, &coef, &errors, c, params.nu) <= params.tolerance {
                converged = true;
                break;
            }
            next_gap_check = iterations + gap_interval;
        }
        if iterations >= params.max_iterations {
            break;
        }
        let (i, j) = (choice.up, choice.low);
        let curvature = (kernel.diagonal(i) + kernel.diagonal(j) - 2.0 * kernel.entry(i, j)).max(TAU);
        let mut step = violation / curvature;
        // c_i grows by `step`, c_j shrinks by `step`.
        match choice.family {
            Family::Upper => {
                let room_i = c - alpha[i];
                let room_j = alpha[j];
                step = step.min(room_i).min(room_j);
                alpha[i] = if step >= room_i { c } else { alpha[i] + step };
                alpha[j] = if step >= room_j { 0.0 } else { alpha[j] - step };
            }
            Family::Lower => {
                let room_i = alpha_star[i];
                let room_j = c - alpha_star[j];
                step = step.min(room_i).min(room_j);
                alpha_star[i] = if step >= room_i { 0.0 } else { alpha_star[i] - step };
                alpha_star[j] = if step >= room_j { c } else { alpha_star[j] + step };
            }
        }
        coef[i] = alpha[i] - alpha_star[i];
        coef[j] = alpha[j] - alpha_star[j];
        kernel.axpy_difference(i, j, step, &mut errors);
        iterations += 1;
        if let Some(t) = trace.as_deref_mut() {
            t.push(dual_objective(y, &coef, &errors));
        }
    }

    let (bias, epsilon) = kkt_offsets(&alpha, &alpha_star, &errors, c);
    SmoOutput {
        alpha,
        alpha_star,
        coef,
        errors,
        iterations,
        converged,
        violation,
        bias,
        epsilon,
    }
}

/// Bias and ε from the multipliers of the two equality constraints, averaged
/// over free variables (midpoint of the feasible interval when none are
/// free).
fn kkt_offsets(alpha: &[f64], alpha_star: &[f64], errors: &[f64], c: f64) -> (f64, f64) {
    let family_offset = |values: &[f64], gradient_sign: f64| -> f64 {
        let (mut lb, mut ub) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut sum, mut free) = (0.0, 0usize);
        for (v, e) in values.iter().zip(errors) {
            let g = gradient_sign * e;
            if *v >= c {
                lb = lb.max(g);
            } else if *v <= 0.0 {
                ub = ub.min(g);
            } else {
                sum += g;
                free += 1;
            }
        }
        if free > 0 {
            sum / free as f64
        } else if lb.is_finite() && ub.is_finite() {
            (lb + ub) / 2.0
        } else if lb.is_finite() {
            lb
        } else {
            ub
        }
    };
    let r1 = family_offset(alpha, 1.0);
    let r2 = family_offset(alpha_star, -1.0);
    ((r2 - r1) / 2.0, -(r1 + r2) / 2.0)
}
