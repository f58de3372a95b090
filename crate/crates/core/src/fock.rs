//! Truncated Fock-space simulation of a single bosonic mode.
//!
//! States live in `span{|0⟩, …, |N−1⟩}` and operators are built by
//! exponentiating their generators in that truncated basis. The module is the
//! brute-force side of the kernel: [`circuit_kernel`] prepares
//! `Ŝ†(η) D̂†(x_p) D̂(x_q) Ŝ(η)|0⟩` and returns its vacuum probability, which must
//! agree with the closed form in [`crate::kernel`].
//!
//! Squeezing phase convention:
//!
//! ```text
//! Ŝ(r, θ) = exp[ ½ r (e^{−2iθ} â² − e^{2iθ} â†²) ]
//! ```
//!
//! Under it `Ŝ† D̂(x) Ŝ = D̂(x cosh r + x* e^{2iθ} sinh r)`, the rule the kernel's
//! closed form is derived from. Because only `e^{2iθ}` appears, `θ` and `θ + π`
//! describe the same operator and a negative magnitude is the same as
//! `θ + π/2`; [`SqueezeParams`] normalizes to `r ≥ 0`, `θ ∈ [0, π)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{bail, Error, Result};
use crate::linalg::{expm, CMatrix};
use crate::math;

/// Default Fock cutoff.
pub const DEFAULT_CUTOFF: usize = 64;
/// Norm tolerance used wherever a state norm is asserted.
pub const NORM_EPS: f64 = 1e-9;
/// Series tolerance for operator exponentials.
pub const EXPM_TOL: f64 = 1e-12;
/// Largest squeezed-vacuum probability mass allowed beyond the cutoff.
pub const MAX_TAIL_MASS: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Squeezing magnitude `r` and phase `θ` of `η = r e^{iθ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SqueezeParams {
    r: f64,
    theta: f64,
}

impl SqueezeParams {
    /// Normalizes to `r ≥ 0` and `θ ∈ [0, π)`.
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !r.is_finite() || !theta.is_finite() {
            bail!(
                InvalidInput,
                "squeeze parameters must be finite (r={r}, theta={theta})"
            );
        }
        let (r, theta) = if r < 0.0 {
            (-r, theta + math::FRAC_PI_2)
        } else {
            (r, theta)
        };
        Ok(Self {
            r,
            theta: math::rem_euclid(theta, math::PI),
        })
    }

    /// `r = 0`: the coherent-state special case.
    pub fn coherent() -> Self {
        Self { r: 0.0, theta: 0.0 }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `e^{2iθ}`.
    pub fn phase(&self) -> Complex64 {
        Complex64::new(math::cos(2.0 * self.theta), math::sin(2.0 * self.theta))
    }

    /// The conjugated displacement argument `x cosh r + x* e^{2iθ} sinh r`.
    pub fn conjugated_displacement(&self, x: Complex64) -> Complex64 {
        x * math::cosh(self.r) + x.conj() * self.phase() * math::sinh(self.r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Annihilation,
    Creation,
    Displacement,
    Squeeze,
    Composite,
}

/// A truncated `N × N` single-mode operator.
#[derive(Debug, Clone, PartialEq)]
pub struct BosonicOperator {
    matrix: CMatrix,
    kind: OperatorKind,
}

impl BosonicOperator {
    pub fn new(matrix: CMatrix, kind: OperatorKind) -> Result<Self> {
        if !matrix.is_square() {
            bail!(
                InvalidDimension,
                "operator matrix must be square, got {}x{}",
                matrix.rows(),
                matrix.cols()
            );
        }
        Ok(Self { matrix, kind })
    }

    pub fn cutoff(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn adjoint(&self) -> Self {
        let kind = match self.kind {
            OperatorKind::Annihilation => OperatorKind::Creation,
            OperatorKind::Creation => OperatorKind::Annihilation,
            other => other,
        };
        Self {
            matrix: self.matrix.adjoint(),
            kind,
        }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        check_cutoffs(self.cutoff(), other.cutoff())?;
        Ok(Self {
            matrix: &self.matrix * &other.matrix,
            kind: OperatorKind::Composite,
        })
    }

    pub fn apply(&self, state: &TruncatedState) -> Result<TruncatedState> {
        check_cutoffs(self.cutoff(), state.cutoff())?;
        Ok(TruncatedState {
            amplitudes: self.matrix.mul_vec(&state.amplitudes),
        })
    }

    /// `‖(U†U − I)[0..k, 0..k]‖_max`. Truncation spoils unitarity near the
    /// cutoff edge, so callers check a leading block.
    pub fn unitarity_error(&self, k: usize) -> f64 {
        let utu = &self.matrix.adjoint() * &self.matrix;
        utu.block_max_diff(&CMatrix::identity(self.cutoff()), k)
    }
}

fn check_cutoffs(a: usize, b: usize) -> Result<()> {
    if a != b {
        bail!(InvalidDimension, "cutoff mismatch: {a} vs {b}");
    }
    Ok(())
}

/// Complex amplitudes over `|0⟩ … |N−1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    amplitudes: Vec<Complex64>,
}

impl TruncatedState {
    pub fn vacuum(cutoff: usize) -> Result<Self> {
        check_cutoff(cutoff)?;
        let mut amplitudes = vec![ZERO; cutoff];
        amplitudes[0] = ONE;
        Ok(Self { amplitudes })
    }

    /// Rejects empty vectors and vectors with squared norm above `1 + NORM_EPS`.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            bail!(InvalidDimension, "a state needs at least one amplitude");
        }
        let state = Self { amplitudes };
        let norm = state.norm_sqr();
        if !(norm <= 1.0 + NORM_EPS) {
            bail!(InvalidInput, "squared norm {norm} exceeds 1 + {NORM_EPS}");
        }
        Ok(state)
    }

    pub fn cutoff(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, n: usize) -> Complex64 {
        self.amplitudes[n]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability of detecting no photons, `|⟨0|ψ⟩|²`.
    pub fn vacuum_probability(&self) -> f64 {
        self.amplitudes[0].norm_sqr()
    }
}

fn check_cutoff(cutoff: usize) -> Result<()> {
    if cutoff < 2 {
        bail!(InvalidDimension, "cutoff must be at least 2, got {cutoff}");
    }
    Ok(())
}

/// `(â, â†)` truncated to `cutoff` levels: `â[n−1, n] = √n`.
pub fn ladder_ops(cutoff: usize) -> Result<(BosonicOperator, BosonicOperator)> {
    check_cutoff(cutoff)?;
    let a = CMatrix::from_fn(cutoff, cutoff, |i, j| {
        if j == i + 1 {
            Complex64::new(math::sqrt(j as f64), 0.0)
        } else {
            ZERO
        }
    });
    let annihilation = BosonicOperator::new(a, OperatorKind::Annihilation)?;
    let creation = annihilation.adjoint();
    Ok((annihilation, creation))
}

/// `D̂(x) = exp(x â† − x* â)`. Requires `|x|² ≤ cutoff / 4`.
pub fn displacement(x: Complex64, cutoff: usize) -> Result<BosonicOperator> {
    check_cutoff(cutoff)?;
    if !x.re.is_finite() || !x.im.is_finite() {
        bail!(InvalidInput, "displacement must be finite, got {x}");
    }
    let limit = cutoff as f64 / 4.0;
    if x.norm_sqr() > limit {
        bail!(
            CutoffExceeded,
            "|x|^2 = {} exceeds cutoff/4 = {limit}; raise the cutoff",
            x.norm_sqr()
        );
    }
    let (a, ad) = ladder_ops(cutoff)?;
    let generator = ad.matrix.scale(x).sub(&a.matrix.scale(x.conj()));
    BosonicOperator::new(expm(&generator, EXPM_TOL)?, OperatorKind::Displacement)
}

/// Probability mass of the squeezed vacuum `Ŝ(r)|0⟩` on photon numbers
/// `≥ cutoff`.
///
/// Only even photon numbers are populated, with
/// `P(2m) = (2m)! / (4^m m!²) · tanh^{2m} r / cosh r`.
pub fn squeezed_vacuum_tail(r: f64, cutoff: usize) -> f64 {
    let t = math::tanh(r);
    let t2 = t * t;
    let mut p = 1.0 / math::cosh(r);
    let mut head = 0.0;
    let mut m = 0usize;
    while 2 * m < cutoff {
        head += p;
        p *= (2 * m + 1) as f64 / (2 * m + 2) as f64 * t2;
        m += 1;
    }
    (1.0 - head).max(0.0)
}

/// `Ŝ(η)` in the phase convention documented at module level. Rejects
/// squeezing whose vacuum tail beyond the cutoff exceeds [`MAX_TAIL_MASS`].
pub fn squeeze(eta: SqueezeParams, cutoff: usize) -> Result<BosonicOperator> {
    check_cutoff(cutoff)?;
    let tail = squeezed_vacuum_tail(eta.r, cutoff);
    if tail > MAX_TAIL_MASS {
        bail!(
            CutoffExceeded,
            "squeezing r = {} leaves {tail:.3e} of the vacuum above cutoff {cutoff}",
            eta.r
        );
    }
    let (a, ad) = ladder_ops(cutoff)?;
    let a2 = &a.matrix * &a.matrix;
    let ad2 = &ad.matrix * &ad.matrix;
    let zeta = eta.phase() * eta.r;
    let generator = a2.scale(zeta.conj() * 0.5).sub(&ad2.scale(zeta * 0.5));
    BosonicOperator::new(expm(&generator, EXPM_TOL)?, OperatorKind::Squeeze)
}

/// The displaced squeezed vacuum `|x; η⟩ = D̂(x) Ŝ(η) |0⟩`.
pub fn dsv_state(x: Complex64, eta: SqueezeParams, cutoff: usize) -> Result<TruncatedState> {
    let s = squeeze(eta, cutoff)?;
    let d = displacement(x, cutoff)?;
    let squeezed = s.apply(&TruncatedState::vacuum(cutoff)?)?;
    d.apply(&squeezed)
}

/// `⟨a|b⟩`, conjugate-linear in the first argument.
pub fn overlap(a: &TruncatedState, b: &TruncatedState) -> Result<Complex64> {
    check_cutoffs(a.cutoff(), b.cutoff())?;
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// The state `Ŝ†(η) D̂†(x_p) D̂(x_q) Ŝ(η)|0⟩` produced by the kernel circuit.
pub fn circuit_state(
    xp: f64,
    xq: f64,
    eta: SqueezeParams,
    cutoff: usize,
) -> Result<TruncatedState> {
    if !xp.is_finite() || !xq.is_finite() {
        bail!(
            InvalidInput,
            "circuit inputs must be finite (xp={xp}, xq={xq})"
        );
    }
    let s = squeeze(eta, cutoff)?;
    let dp = displacement(Complex64::new(xp, 0.0), cutoff)?;
    let dq = displacement(Complex64::new(xq, 0.0), cutoff)?;
    let mut psi = TruncatedState::vacuum(cutoff)?;
    for op in [&s, &dq, &dp.adjoint(), &s.adjoint()] {
        psi = op.apply(&psi)?;
    }
    Ok(psi)
}

/// Vacuum-detection probability of the kernel circuit, `|⟨x_p; η|x_q; η⟩|²`.
pub fn circuit_kernel(xp: f64, xq: f64, eta: SqueezeParams, cutoff: usize) -> Result<f64> {
    let p = circuit_state(xp, xq, eta, cutoff)?.vacuum_probability();
    if !(0.0..=1.0 + NORM_EPS).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "vacuum probability {p} outside [0, 1]; truncation is too aggressive"
        )));
    }
    Ok(p.min(1.0))
}
