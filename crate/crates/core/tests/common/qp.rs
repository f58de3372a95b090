//! Exhaustive solver for tiny soft-margin dual problems.
//!
//! Every multiplier is either at 0, at C, or free. For each of the 3^M
//! assignments the free block is fixed by the stationarity conditions
//!
//! ```text
//! Σ_{j∈F} Q_ij α_j + y_i b = 1 − C Σ_{j∈U} Q_ij   (i ∈ F)
//! Σ_{j∈F} y_j α_j          = −C Σ_{j∈U} y_j
//! ```
//!
//! with `Q_ij = y_i y_j K_ij`. The best feasible candidate is the optimum.
//! Nothing here touches the library's solver or linear algebra.

#![allow(dead_code)]

pub struct QpSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

pub fn kernel_matrix(points: &[Vec<f64>], gamma: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| rbf(a, b, gamma)).collect())
        .collect()
}

pub fn objective(k: &[Vec<f64>], y: &[f64], alphas: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * k[i][j];
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let pivot = a[col].clone();
        for row in col + 1..n {
            let f = a[row][col] / pivot[col];
            for (dst, src) in a[row][col..n].iter_mut().zip(&pivot[col..n]) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Bias for a solution with no free multipliers: midpoint of the interval
/// allowed by the bound constraints.
fn bias_interval_midpoint(k: &[Vec<f64>], y: &[f64], alphas: &[f64]) -> f64 {
    let n = y.len();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let g: f64 = (0..n).map(|j| alphas[j] * y[j] * k[i][j]).sum();
        let edge = y[i] - g;
        let at_zero = alphas[i] == 0.0;
        // α=0 needs y(g+b) ≥ 1, α=C needs y(g+b) ≤ 1
        if (y[i] > 0.0) == at_zero {
            lo = lo.max(edge);
        } else {
            hi = hi.min(edge);
        }
    }
    0.5 * (lo + hi)
}

pub fn solve(k: &[Vec<f64>], y: &[f64], c: f64) -> QpSolution {
    let n = y.len();
    assert!(n <= 10, "exhaustive search is exponential");
    let mut best: Option<QpSolution> = None;
    let total = 3usize.pow(n as u32);
    for code in 0..total {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 1).collect();
        let upper: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alphas = vec![0.0; n];
        for &i in &upper {
            alphas[i] = c;
        }
        let bias;
        if free.is_empty() {
            let balance: f64 = upper.iter().map(|&i| y[i] * c).sum();
            if balance.abs() > 1e-12 {
                continue;
            }
            bias = bias_interval_midpoint(k, y, &alphas);
        } else {
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (s, &j) in free.iter().enumerate() {
                    a[r][s] = y[i] * y[j] * k[i][j];
                }
                a[r][m] = y[i];
                rhs[r] = 1.0 - c * upper.iter().map(|&j| y[i] * y[j] * k[i][j]).sum::<f64>();
                a[m][r] = y[i];
            }
            rhs[m] = -c * upper.iter().map(|&j| y[j]).sum::<f64>();
            let Some(sol) = gauss(a, rhs) else { continue };
            if free
                .iter()
                .enumerate()
                .any(|(r, _)| sol[r] <= 0.0 || sol[r] >= c)
            {
                continue;
            }
            for (r, &i) in free.iter().enumerate() {
                alphas[i] = sol[r];
            }
            bias = sol[m];
        }
        // the bound multipliers must satisfy their KKT side too
        let feasible = (0..n).all(|i| {
            let g: f64 = (0..n).map(|j| alphas[j] * y[j] * k[i][j]).sum();
            let margin = y[i] * (g + bias);
            match state[i] {
                0 => margin >= 1.0 - 1e-9,
                2 => margin <= 1.0 + 1e-9,
                _ => true,
            }
        });
        if !feasible {
            continue;
        }
        let obj = objective(k, y, &alphas);
        if best.as_ref().map_or(true, |b| obj > b.objective) {
            best = Some(QpSolution {
                alphas,
                bias,
                objective: obj,
            });
        }
    }
    best.expect("a bounded QP always has a KKT point")
}

pub fn decision(points: &[Vec<f64>], y: &[f64], sol: &QpSolution, gamma: f64, x: &[f64]) -> f64 {
    points
        .iter()
        .zip(y)
        .zip(&sol.alphas)
        .map(|((p, yi), a)| a * yi * rbf(p, x, gamma))
        .sum::<f64>()
        + sol.bias
}
