//! Brute-force reference for the linear ν-SVR dual on tiny problems.
//!
//! Works in `c = α − α*` alone: minimise `½cᵀKc − yᵀc` over `|c_i| ≤ C`,
//! `Σc = 0`, `Σ|c| ≤ C·ν·n`. Every coefficient is assigned one of five states
//! (at `−C`, free negative, zero, free positive, at `+C`) and the L1 row is
//! taken as active or not; each pattern's stationarity system is solved
//! directly and the best feasible point wins.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub c: f64,
    pub nu: f64,
}

/// Seeded problem with 3..=6 rows and 1..=3 columns.
pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=6);
    let d = rng.gen_range(1..=3);
    let x = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let y = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c = [0.1, 0.5, 1.0, 4.0][rng.gen_range(0..4)];
    let nu = [0.3, 0.5, 0.8, 1.0][rng.gen_range(0..4)];
    Instance { x, y, c, nu }
}

pub struct OracleSolution {
    /// `yᵀc − ½cᵀKc`, the maximisation form.
    pub objective: f64,
    pub coef: Vec<f64>,
}

const STATES: [i8; 5] = [-2, -1, 0, 1, 2];

/// Solves `a·z = b` in place; returns `None` when inconsistent. Rank
/// deficient columns are pinned to zero.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let m = b.len();
    let mut pivot_col = vec![usize::MAX; m];
    let mut row = 0;
    for col in 0..m {
        if row == m {
            break;
        }
        let p = (row..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-11 {
            continue;
        }
        a.swap(row, p);
        b.swap(row, p);
        for r in 0..m {
            if r != row {
                let f = a[r][col] / a[row][col];
                if f != 0.0 {
                    for k in col..m {
                        a[r][k] -= f * a[row][k];
                    }
                    b[r] -= f * b[row];
                }
            }
        }
        pivot_col[row] = col;
        row += 1;
    }
    for r in row..m {
        if b[r].abs() > 1e-9 {
            return None;
        }
    }
    let mut z = vec![0.0; m];
    for r in 0..row {
        z[pivot_col[r]] = b[r] / a[r][pivot_col[r]];
    }
    Some(z)
}

pub fn solve_dual(inst: &Instance) -> OracleSolution {
    let n = inst.y.len();
    let k: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| inst.x[i].iter().zip(&inst.x[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let budget = inst.c * inst.nu * n as f64;
    let objective = |c: &[f64]| -> f64 {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += c[i] * k[i][j] * c[j];
            }
        }
        inst.y.iter().zip(c).map(|(a, b)| a * b).sum::<f64>() - 0.5 * quad
    };

    let mut best = OracleSolution {
        objective: 0.0,
        coef: vec![0.0; n],
    };
    let mut states = vec![0usize; n];
    loop {
        let pattern: Vec<i8> = states.iter().map(|&s| STATES[s]).collect();
        for l1_active in [false, true] {
            if let Some(c) = pattern_point(&pattern, l1_active, &k, &inst.y, inst.c, budget) {
                let v = objective(&c);
                if v > best.objective {
                    best = OracleSolution { objective: v, coef: c };
                }
            }
        }
        // next pattern in odometer order
        let mut pos = 0;
        while pos < n {
            states[pos] += 1;
            if states[pos] < STATES.len() {
                break;
            }
            states[pos] = 0;
            pos += 1;
        }
        if pos == n {
            break;
        }
    }
    best
}

fn pattern_point(
    pattern: &[i8],
    l1_active: bool,
    k: &[Vec<f64>],
    y: &[f64],
    cap: f64,
    budget: f64,
) -> Option<Vec<f64>> {
    let n = pattern.len();
    let free: Vec<usize> = (0..n).filter(|&i| pattern[i].abs() == 1).collect();
    let mut c = vec![0.0; n];
    for i in 0..n {
        c[i] = match pattern[i] {
            -2 => -cap,
            2 => cap,
            _ => 0.0,
        };
    }
    let fixed_l1: f64 = c.iter().map(|v| v.abs()).sum();
    let fixed_sum: f64 = c.iter().sum();

    // unknowns: c_F, mu, [lambda]
    let f = free.len();
    let m = f + 1 + usize::from(l1_active);
    let mut a = vec![vec![0.0; m]; m];
    let mut b = vec![0.0; m];
    for (r, &i) in free.iter().enumerate() {
        for (q, &j) in free.iter().enumerate() {
            a[r][q] = k[i][j];
        }
        a[r][f] = 1.0;
        if l1_active {
            a[r][f + 1] = pattern[i] as f64;
        }
        b[r] = y[i] - (0..n).map(|j| k[i][j] * c[j]).sum::<f64>();
    }
    for q in 0..f {
        a[f][q] = 1.0;
    }
    b[f] = -fixed_sum;
    if l1_active {
        for (q, &i) in free.iter().enumerate() {
            a[f + 1][q] = pattern[i] as f64;
        }
        b[f + 1] = budget - fixed_l1;
    }
    let z = solve_linear(a, b)?;
    for (q, &i) in free.iter().enumerate() {
        c[i] = z[q];
    }

    let eps = 1e-9;
    for &i in &free {
        let v = c[i] * pattern[i] as f64;
        if v < -eps || v > cap + eps {
            return None;
        }
    }
    if c.iter().sum::<f64>().abs() > 1e-8 {
        return None;
    }
    if c.iter().map(|v| v.abs()).sum::<f64>() > budget + 1e-8 {
        return None;
    }
    Some(c)
}
