//! Primal side of the ν-SVR: for fixed weights, the objective in the bias `b`
//! and tube half-width `ε ≥ 0` is
//!
//! ```text
//! ν·n·ε + Σ max(0, |u_k − b| − ε),   u_k = y_k − w·x_k
//! ```
//!
//! which is convex and piecewise linear. Its subgradient vanishes when at
//! most `ν·n/2` residuals lie strictly below the tube and at most `ν·n/2`
//! strictly above it, which pins the tube edges to order statistics of `u`.

use alloc::vec::Vec;

/// Sorted residuals with prefix sums for O(log n) tube-loss queries.
pub(crate) struct Residuals {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
}

impl Residuals {
    pub fn new(mut u: Vec<f64>) -> Self {
        u.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(u.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &u {
            acc += v;
            prefix.push(acc);
        }
        Residuals { sorted: u, prefix }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    /// `Σ max(0, |u_k − b| − ε)`
    pub fn tube_loss(&self, b: f64, eps: f64) -> f64 {
        let n = self.sorted.len();
        let lo = b - eps;
        let hi = b + eps;
        let below = self.sorted.partition_point(|&v| v < lo);
        let above_start = self.sorted.partition_point(|&v| v <= hi);
        let below_sum = lo * below as f64 - self.prefix[below];
        let above_sum = (self.prefix[n] - self.prefix[above_start]) - hi * (n - above_start) as f64;
        below_sum.max(0.0) + above_sum.max(0.0)
    }

    pub fn objective(&self, nu: f64, b: f64, eps: f64) -> f64 {
        nu * self.len() as f64 * eps + self.tube_loss(b, eps)
    }

    /// Minimiser `(b, ε)` of [`Residuals::objective`].
    pub fn optimal_tube(&self, nu: f64) -> (f64, f64) {
        let n = self.sorted.len();
        let half = nu * n as f64 / 2.0;
        let whole = libm::floor(half);
        let (lo_idx, hi_idx) = if half == whole && whole >= 1.0 {
            let k = whole as usize;
            (k - 1, n - k)
        } else {
            let m = (whole as usize).min(n - 1);
            (m, n - 1 - m)
        };
        let (lo, hi) = (self.sorted[lo_idx], self.sorted[hi_idx.max(lo_idx)]);
        ((lo + hi) / 2.0, ((hi - lo) / 2.0).max(0.0))
    }
}

/// Best value of `ν·n·ε + loss` over the closed-form tube and any extra
/// candidate tubes supplied by the caller.
pub(crate) fn best_tube_objective(res: &Residuals, nu: f64, extra: &[(f64, f64)]) -> f64 {
    let (b, eps) = res.optimal_tube(nu);
    let mut best = res.objective(nu, b, eps);
    for &(b, eps) in extra {
        if b.is_finite() && eps.is_finite() && eps >= 0.0 {
            best = best.min(res.objective(nu, b, eps));
        }
    }
    best
}
