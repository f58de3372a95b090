//! Closed-form variable-hyperparameter Gaussian kernel and Gram matrices.
//!
//! For real inputs the squared single-mode DSV overlap is
//! `exp(−γ (x_q − x_p)²)` with `γ = cosh 2r + cos 2θ · sinh 2r`: `e^{2r}` at
//! `θ = 0`, `e^{−2r}` at `θ = π/2`, and exactly 1 for the coherent state
//! (`r = 0`). Products over coordinates give `exp(−γ ‖x_p − x_q‖²)`.

use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::fock::SqueezeParams;
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math;

/// Tolerance on the smallest Gram eigenvalue for the PSD check.
pub const PSD_TOL: f64 = 1e-8;

/// Where a kernel's `γ` came from.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "snake_case"))]
pub enum GammaSource {
    Direct,
    Squeezed { r: f64, theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelConfig {
    gamma: f64,
    source: GammaSource,
}

impl KernelConfig {
    pub fn direct(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            gamma,
            source: GammaSource::Direct,
        })
    }

    pub fn from_squeeze(eta: SqueezeParams) -> Self {
        Self {
            gamma: gamma_from_squeeze(eta),
            source: GammaSource::Squeezed {
                r: eta.r(),
                theta: eta.theta(),
            },
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn source(&self) -> GammaSource {
        self.source
    }

    /// Re-checks the invariants; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        check_gamma(self.gamma)?;
        if let GammaSource::Squeezed { r, theta } = self.source {
            let expected = gamma_from_squeeze(SqueezeParams::new(r, theta)?);
            if expected != self.gamma {
                bail!(
                    InvalidInput,
                    "gamma {} does not match squeeze-derived value {expected}",
                    self.gamma
                );
            }
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        kernel_vec(a, b, self.gamma)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        bail!(
            InvalidInput,
            "gamma must be positive and finite, got {gamma}"
        );
    }
    Ok(())
}

/// `cosh 2r + cos 2θ · sinh 2r`, the Gaussian width realized by squeezing
/// `(r, θ)`. Always positive.
pub fn gamma_from_squeeze(eta: SqueezeParams) -> f64 {
    if eta.r() == 0.0 {
        return 1.0;
    }
    let two_r = 2.0 * eta.r();
    math::cosh(two_r) + math::cos(2.0 * eta.theta()) * math::sinh(two_r)
}

/// `exp(−γ (x_q − x_p)²)`.
pub fn kernel_scalar(xp: f64, xq: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if !xp.is_finite() || !xq.is_finite() {
        bail!(
            InvalidInput,
            "kernel inputs must be finite (xp={xp}, xq={xq})"
        );
    }
    let d = xq - xp;
    Ok(math::exp(-gamma * d * d))
}

#[inline]
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `exp(−γ ‖x_p − x_q‖²)`. Symmetric bit-for-bit in its arguments.
pub fn kernel_vec(xp: &[f64], xq: &[f64], gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if xp.len() != xq.len() {
        bail!(
            InvalidDimension,
            "kernel arguments have {} and {} features",
            xp.len(),
            xq.len()
        );
    }
    if xp.is_empty() {
        bail!(
            InvalidDimension,
            "kernel arguments need at least one feature"
        );
    }
    Ok(math::exp(-gamma * squared_distance(xp, xq)))
}

/// FNV-1a over the shape and the IEEE bit patterns of a matrix.
pub fn data_fingerprint(data: &Matrix) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    let mut feed = |bytes: [u8; 8]| {
        for b in bytes {
            h ^= u64::from(b);
            h = h.wrapping_mul(PRIME);
        }
    };
    feed((data.rows() as u64).to_le_bytes());
    feed((data.cols() as u64).to_le_bytes());
    for v in data.as_slice() {
        feed(v.to_bits().to_le_bytes());
    }
    h
}

/// Symmetric matrix of pairwise kernel values over a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Matrix,
    gamma: f64,
    data_fingerprint: u64,
}

impl GramMatrix {
    pub fn dim(&self) -> usize {
        self.values.rows()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn data_fingerprint(&self) -> u64 {
        self.data_fingerprint
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = symmetric_eigen(&self.values)?;
        Ok(eig.values.first().copied().unwrap_or(0.0))
    }

    /// Symmetric, unit diagonal, entries in `(0, 1]`, smallest eigenvalue at
    /// least `−PSD_TOL`.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !self.is_symmetric() {
            bail!(InvalidInput, "Gram matrix is not symmetric");
        }
        for i in 0..n {
            if self.get(i, i) != 1.0 {
                bail!(
                    InvalidInput,
                    "Gram diagonal entry {i} is {}",
                    self.get(i, i)
                );
            }
        }
        if let Some(v) = self
            .values
            .as_slice()
            .iter()
            .find(|v| !(**v > 0.0 && **v <= 1.0))
        {
            bail!(InvalidInput, "Gram entry {v} outside (0, 1]");
        }
        let min = self.min_eigenvalue()?;
        if min < -PSD_TOL {
            bail!(
                InvalidInput,
                "Gram matrix has eigenvalue {min} < -{PSD_TOL}"
            );
        }
        Ok(())
    }
}

fn check_data(data: &Matrix, what: &str) -> Result<()> {
    if data.rows() == 0 {
        bail!(InvalidInput, "{what} has no rows");
    }
    if data.cols() == 0 {
        bail!(InvalidDimension, "{what} has no feature columns");
    }
    if !data.is_finite() {
        bail!(InvalidInput, "{what} contains non-finite values");
    }
    Ok(())
}

/// Upper-triangle entries `(i, j > i)` of row `i`.
fn gram_row_upper(data: &Matrix, i: usize, gamma: f64) -> Vec<f64> {
    let xi = data.row(i);
    ((i + 1)..data.rows())
        .map(|j| math::exp(-gamma * squared_distance(xi, data.row(j))))
        .collect()
}

/// Gram matrix of `data` (rows are samples). Each unordered pair is evaluated
/// once and mirrored; the diagonal is exactly 1. With the `parallel` feature
/// rows are evaluated concurrently; the result is identical either way.
pub fn gram(data: &Matrix, gamma: f64) -> Result<GramMatrix> {
    check_gamma(gamma)?;
    check_data(data, "data")?;
    let m = data.rows();

    #[cfg(feature = "parallel")]
    let uppers: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..m)
            .into_par_iter()
            .map(|i| gram_row_upper(data, i, gamma))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let uppers: Vec<Vec<f64>> = (0..m).map(|i| gram_row_upper(data, i, gamma)).collect();

    let mut values = Matrix::zeros(m, m);
    for (i, upper) in uppers.into_iter().enumerate() {
        values[(i, i)] = 1.0;
        for (offset, v) in upper.into_iter().enumerate() {
            let j = i + 1 + offset;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(GramMatrix {
        values,
        gamma,
        data_fingerprint: data_fingerprint(data),
    })
}

/// Kernel values between test rows and training rows: entry `(t, i)` is
/// `k(test_t, train_i)`.
pub fn gram_cross(train: &Matrix, test: &Matrix, gamma: f64) -> Result<Matrix> {
    check_gamma(gamma)?;
    check_data(train, "training data")?;
    if train.cols() != test.cols() {
        bail!(
            InvalidDimension,
            "training data has {} features, test data has {}",
            train.cols(),
            test.cols()
        );
    }
    if !test.is_finite() {
        bail!(InvalidInput, "test data contains non-finite values");
    }
    Ok(Matrix::from_fn(test.rows(), train.rows(), |t, i| {
        math::exp(-gamma * squared_distance(test.row(t), train.row(i)))
    }))
}
