//! Kernelized soft-margin support vector machine.
//!
//! Training maximizes the dual
//!
//! ```text
//! L(α) = Σ α_m − ½ Σ_pq α_p α_q y_p y_q κ(x_p, x_q),   0 ≤ α_m ≤ C,  Σ α_m y_m = 0
//! ```
//!
//! with sequential minimal optimization: pairs of multipliers are updated
//! analytically, the first of each pair visited in a seeded random order and
//! the second chosen to maximize `|E_1 − E_2|`. The decision function is
//! `f(x) = Σ α_m y_m κ(x_m, x) + b`; a large `C` (say `1e6`) approximates the
//! hard-margin machine.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::LabeledDataset;
use crate::error::{bail, Result};
use crate::kernel::{data_fingerprint, gram, gram_cross, GramMatrix, KernelConfig};
use crate::linalg::Matrix;
use crate::math;
use crate::rng::{streams, SplitMix64};

pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_PASSES: usize = 200;
/// Multipliers at or below this are treated as zero when extracting support
/// vectors; within it of `C` they count as bound.
pub const ALPHA_EPS: f64 = 1e-8;
/// The error cache is recomputed from scratch this often (in sweeps).
pub const CACHE_REFRESH_SWEEPS: usize = 50;
/// Upper bound on consecutive non-bound sweeps between full passes.
pub const MAX_INNER_SWEEPS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmConfig {
    /// Box constraint.
    pub c: f64,
    /// KKT violation tolerance.
    pub tol: f64,
    /// Maximum number of full passes over the training set.
    pub max_passes: usize,
    pub kernel: KernelConfig,
}

impl SvmConfig {
    pub fn new(kernel: KernelConfig) -> Self {
        Self {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
            kernel,
        }
    }

    pub fn with_c(mut self, c: f64) -> Self {
        self.c = c;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_passes(mut self, max_passes: usize) -> Self {
        self.max_passes = max_passes;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) || !self.c.is_finite() {
            bail!(
                InvalidInput,
                "C must be positive and finite, got {}",
                self.c
            );
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            bail!(InvalidInput, "tol must be positive, got {}", self.tol);
        }
        if self.max_passes == 0 {
            bail!(InvalidInput, "max_passes must be at least 1");
        }
        self.kernel.validate()
    }
}

/// Raw result of the dual optimization, indexed like the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    /// Dual objective after every sweep, in order.
    pub objective_trace: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
    /// Largest KKT violation (in units of `y f(x)`) under the final bias.
    pub max_kkt_violation: f64,
}

/// A trained binary machine. Label `+1` corresponds to `classes[0]` and `−1`
/// to `classes[1]`; [`train_binary`] uses `classes = [1, 0]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SvmModel {
    pub support_indices: Vec<usize>,
    pub alphas: Vec<f64>,
    pub support_labels: Vec<f64>,
    pub support_vectors: Matrix,
    pub bias: f64,
    pub classes: [usize; 2],
    pub kernel: KernelConfig,
    pub c: f64,
    pub converged: bool,
    pub objective: f64,
}

impl SvmModel {
    pub fn n_support(&self) -> usize {
        self.support_indices.len()
    }

    pub fn n_features(&self) -> usize {
        self.support_vectors.cols()
    }

    /// `α_m y_m` for every support vector.
    pub fn dual_coefficients(&self) -> Vec<f64> {
        self.alphas
            .iter()
            .zip(&self.support_labels)
            .map(|(a, y)| a * y)
            .collect()
    }

    /// `Σ α_m y_m`.
    pub fn dual_balance(&self) -> f64 {
        self.dual_coefficients().iter().sum()
    }

    /// Checks the stored-model invariants: `0 < α ≤ C`, labels `±1`, matching
    /// lengths, `|Σ α y| ≤ 1e-6`.
    pub fn validate(&self) -> Result<()> {
        let n = self.support_indices.len();
        if self.alphas.len() != n
            || self.support_labels.len() != n
            || self.support_vectors.rows() != n
        {
            bail!(
                InvalidDimension,
                "support vector fields have inconsistent lengths"
            );
        }
        for &a in &self.alphas {
            if !(a > 0.0 && a <= self.c * (1.0 + 1e-12)) {
                bail!(
                    InvalidInput,
                    "dual coefficient {a} outside (0, C = {}]",
                    self.c
                );
            }
        }
        if self.support_labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
            bail!(InvalidInput, "support labels must be +1 or -1");
        }
        let balance = self.dual_balance();
        if math::abs(balance) > 1e-6 {
            bail!(InvalidInput, "sum of alpha*y is {balance}, expected 0");
        }
        self.kernel.validate()
    }
}

fn check_labels(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|y| *y != 1.0 && *y != -1.0) {
        bail!(InvalidInput, "binary labels must be +1 or -1");
    }
    let pos = labels.iter().filter(|y| **y > 0.0).count();
    if pos == 0 || pos == labels.len() {
        bail!(
            DegenerateLabels,
            "binary training needs both classes, got {pos} of {} positive",
            labels.len()
        );
    }
    Ok(())
}

/// Dual objective `L(α)` for the given Gram matrix.
pub fn dual_objective(gram: &GramMatrix, labels: &[f64], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        let row = gram.row(i);
        let mut s = 0.0;
        for j in 0..n {
            if alphas[j] != 0.0 {
                s += alphas[j] * labels[j] * row[j];
            }
        }
        quad += alphas[i] * labels[i] * s;
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

struct Smo<'a> {
    k: &'a GramMatrix,
    y: &'a [f64],
    c: f64,
    /// KKT tolerance used during optimization; half the requested one so that
    /// re-deriving the bias afterwards stays within the requested tolerance.
    tol: f64,
    alpha: Vec<f64>,
    /// `F_i = Σ_j α_j y_j K_ij − y_i`; the error is `E_i = F_i + b`.
    f: Vec<f64>,
    b: f64,
    rng: SplitMix64,
}

const STEP_EPS: f64 = 1e-12;

impl<'a> Smo<'a> {
    fn new(k: &'a GramMatrix, y: &'a [f64], config: &SvmConfig, seed: u64) -> Self {
        let n = y.len();
        Self {
            k,
            y,
            c: config.c,
            tol: 0.5 * config.tol,
            alpha: vec![0.0; n],
            f: y.iter().map(|v| -v).collect(),
            b: 0.0,
            rng: SplitMix64::with_stream(seed, streams::SOLVER),
        }
    }

    fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    fn error(&self, i: usize) -> f64 {
        self.f[i] + self.b
    }

    fn is_free(&self, i: usize) -> bool {
        self.alpha[i] > 0.0 && self.alpha[i] < self.c
    }

    fn refresh_cache(&mut self) {
        let n = self.n();
        for i in 0..n {
            let row = self.k.row(i);
            let s: f64 = (0..n)
                .filter(|&j| self.alpha[j] != 0.0)
                .map(|j| self.alpha[j] * self.y[j] * row[j])
                .sum();
            self.f[i] = s - self.y[i];
        }
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.error(i1), self.error(i2));
        let s = y1 * y2;
        let c = self.c;
        let (lo, hi) = if y1 != y2 {
            ((a2 - a1).max(0.0), (c + a2 - a1).min(c))
        } else {
            ((a1 + a2 - c).max(0.0), (a1 + a2).min(c))
        };
        if hi - lo <= STEP_EPS {
            return false;
        }
        let k11 = self.k.get(i1, i1);
        let k22 = self.k.get(i2, i2);
        let k12 = self.k.get(i1, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2_new = if eta > 1e-15 {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // Flat direction: the objective is linear along the segment, move
            // to whichever end is better.
            let f1 = y1 * self.f[i1] - a1 * k11 - s * a2 * k12;
            let f2 = y2 * self.f[i2] - s * a1 * k12 - a2 * k22;
            let obj_at = |a2n: f64| {
                let a1n = a1 + s * (a2 - a2n);
                // change of −L relative to the current point, up to a constant
                a1n * f1
                    + a2n * f2
                    + 0.5 * a1n * a1n * k11
                    + 0.5 * a2n * a2n * k22
                    + s * a1n * a2n * k12
            };
            let (l_obj, h_obj) = (obj_at(lo), obj_at(hi));
            if l_obj < h_obj - STEP_EPS {
                lo
            } else if l_obj > h_obj + STEP_EPS {
                hi
            } else {
                a2
            }
        };
        if a2_new < ALPHA_EPS * 1e-2 {
            a2_new = 0.0;
        } else if a2_new > c - ALPHA_EPS * 1e-2 {
            a2_new = c;
        }
        if math::abs(a2_new - a2) < STEP_EPS * (a2_new + a2 + STEP_EPS) {
            return false;
        }
        let mut a1_new = a1 + s * (a2 - a2_new);
        if a1_new < 0.0 {
            a1_new = 0.0;
        } else if a1_new > c {
            a1_new = c;
        }

        let d1 = y1 * (a1_new - a1);
        let d2 = y2 * (a2_new - a2);
        let (row1, row2) = (self.k.row(i1), self.k.row(i2));
        for ((fi, k1i), k2i) in self.f.iter_mut().zip(row1).zip(row2) {
            *fi += d1 * k1i + d2 * k2i;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;

        // Bias: make the error vanish at a free multiplier when there is one.
        let b1 = -self.f[i1];
        let b2 = -self.f[i2];
        let free1 = a1_new > 0.0 && a1_new < c;
        let free2 = a2_new > 0.0 && a2_new < c;
        self.b = match (free1, free2) {
            (true, _) => b1,
            (false, true) => b2,
            (false, false) => 0.5 * (b1 + b2),
        };
        true
    }

    fn violates_kkt(&self, i: usize) -> bool {
        let r = self.y[i] * self.error(i);
        (r < -self.tol && self.alpha[i] < self.c) || (r > self.tol && self.alpha[i] > 0.0)
    }

    fn examine(&mut self, i2: usize) -> bool {
        if !self.violates_kkt(i2) {
            return false;
        }
        let n = self.n();
        let e2 = self.error(i2);

        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if i != i2 && self.is_free(i) {
                let gap = math::abs(self.error(i) - e2);
                if best.map_or(true, |(_, g)| gap > g) {
                    best = Some((i, gap));
                }
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }

        let start = self.rng.below(n as u64) as usize;
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.is_free(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        let start = self.rng.below(n as u64) as usize;
        for off in 0..n {
            let i1 = (start + off) % n;
            if self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn solve(mut self, max_passes: usize) -> DualSolution {
        let n = self.n();
        let mut order: Vec<usize> = (0..n).collect();
        let mut trace = Vec::new();
        let mut examine_all = true;
        let mut full_passes = 0usize;
        let mut inner_sweeps = 0usize;
        let mut sweeps = 0usize;
        let mut finished = false;

        loop {
            if examine_all {
                if full_passes >= max_passes {
                    break;
                }
                full_passes += 1;
                inner_sweeps = 0;
                order.clear();
                order.extend(0..n);
            } else {
                inner_sweeps += 1;
                order.clear();
                order.extend((0..n).filter(|&i| self.is_free(i)));
            }
            self.rng.shuffle(&mut order);

            let mut changed = 0usize;
            for &i in &order {
                if self.examine(i) {
                    changed += 1;
                }
            }
            sweeps += 1;
            if sweeps % CACHE_REFRESH_SWEEPS == 0 {
                self.refresh_cache();
            }
            trace.push(dual_objective(self.k, self.y, &self.alpha));

            if examine_all {
                if changed == 0 {
                    finished = true;
                    break;
                }
                examine_all = false;
            } else if changed == 0 || inner_sweeps >= MAX_INNER_SWEEPS {
                examine_all = true;
            }
        }

        self.refresh_cache();
        for a in &mut self.alpha {
            if *a <= ALPHA_EPS {
                *a = 0.0;
            }
        }
        let bias = self.final_bias();
        let violation = self.max_violation(bias);
        let objective = dual_objective(self.k, self.y, &self.alpha);
        DualSolution {
            objective,
            objective_trace: trace,
            sweeps,
            converged: finished && violation <= 2.0 * self.tol,
            max_kkt_violation: violation,
            bias,
            alphas: self.alpha,
        }
    }

    /// Mean of `y_m − Σ α_j y_j K_jm` over free multipliers; without free
    /// multipliers, the midpoint of the interval of biases that keep every
    /// bound multiplier KKT-feasible.
    fn final_bias(&self) -> f64 {
        let n = self.n();
        let c = self.c;
        let free: Vec<usize> = (0..n)
            .filter(|&i| self.alpha[i] > ALPHA_EPS && self.alpha[i] < c - ALPHA_EPS)
            .collect();
        if !free.is_empty() {
            return free.iter().map(|&i| -self.f[i]).sum::<f64>() / free.len() as f64;
        }
        // α = 0 needs y f ≥ 1, α = C needs y f ≤ 1; each pins b against −F_i.
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..n {
            let at_zero = self.alpha[i] <= ALPHA_EPS;
            let positive = self.y[i] > 0.0;
            if at_zero == positive {
                lower = lower.max(-self.f[i]);
            } else {
                upper = upper.min(-self.f[i]);
            }
        }
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => 0.5 * (lower + upper),
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => 0.0,
        }
    }

    fn max_violation(&self, bias: f64) -> f64 {
        let c = self.c;
        (0..self.n())
            .map(|i| {
                let margin = self.y[i] * (self.f[i] + bias) + 1.0; // y f(x)
                let a = self.alpha[i];
                if a <= ALPHA_EPS {
                    (1.0 - margin).max(0.0)
                } else if a >= c - ALPHA_EPS {
                    (margin - 1.0).max(0.0)
                } else {
                    math::abs(margin - 1.0)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the dual problem on a precomputed Gram matrix.
pub fn solve_dual(
    gram: &GramMatrix,
    labels: &[f64],
    config: &SvmConfig,
    seed: u64,
) -> Result<DualSolution> {
    config.validate()?;
    if gram.dim() != labels.len() {
        bail!(
            InvalidDimension,
            "Gram matrix is {0}x{0} but there are {1} labels",
            gram.dim(),
            labels.len()
        );
    }
    check_labels(labels)?;
    Ok(Smo::new(gram, labels, config, seed).solve(config.max_passes))
}

/// Trains a binary machine. `gram` must have been computed from `data`
/// (checked by fingerprint) with the configured kernel width. A run that hits
/// `max_passes` still returns a model, with `converged = false`.
pub fn train_binary(
    data: &Matrix,
    gram: &GramMatrix,
    labels: &[f64],
    config: &SvmConfig,
    seed: u64,
) -> Result<SvmModel> {
    if data.rows() != gram.dim() || data_fingerprint(data) != gram.data_fingerprint() {
        bail!(
            InvalidInput,
            "Gram matrix was not computed from the given data"
        );
    }
    if gram.gamma() != config.kernel.gamma() {
        bail!(
            InvalidInput,
            "Gram matrix gamma {} differs from the configured kernel gamma {}",
            gram.gamma(),
            config.kernel.gamma()
        );
    }
    let solution = solve_dual(gram, labels, config, seed)?;
    Ok(model_from_solution(&solution, data, labels, config, [1, 0]))
}

/// Convenience wrapper computing the Gram matrix first.
pub fn fit_binary(
    data: &Matrix,
    labels: &[f64],
    config: &SvmConfig,
    seed: u64,
) -> Result<SvmModel> {
    let g = gram(data, config.kernel.gamma())?;
    train_binary(data, &g, labels, config, seed)
}

fn model_from_solution(
    solution: &DualSolution,
    data: &Matrix,
    labels: &[f64],
    config: &SvmConfig,
    classes: [usize; 2],
) -> SvmModel {
    let support_indices: Vec<usize> = (0..labels.len())
        .filter(|&i| solution.alphas[i] > ALPHA_EPS)
        .collect();
    SvmModel {
        alphas: support_indices
            .iter()
            .map(|&i| solution.alphas[i])
            .collect(),
        support_labels: support_indices.iter().map(|&i| labels[i]).collect(),
        support_vectors: data.select_rows(&support_indices),
        support_indices,
        bias: solution.bias,
        classes,
        kernel: config.kernel,
        c: config.c,
        converged: solution.converged,
        objective: solution.objective,
    }
}

fn check_dim(model: &SvmModel, x: &[f64]) -> Result<()> {
    if x.len() != model.n_features() {
        bail!(
            InvalidDimension,
            "model expects {} features, got {}",
            model.n_features(),
            x.len()
        );
    }
    Ok(())
}

/// `Σ α_m y_m κ(x_m, x) + b`.
pub fn decision_value(model: &SvmModel, x: &[f64]) -> Result<f64> {
    check_dim(model, x)?;
    if x.iter().any(|v| !v.is_finite()) {
        bail!(InvalidInput, "query point has non-finite coordinates");
    }
    let gamma = model.kernel.gamma();
    let mut s = model.bias;
    for ((sv, a), y) in model
        .support_vectors
        .iter_rows()
        .zip(&model.alphas)
        .zip(&model.support_labels)
    {
        let d2: f64 = sv.iter().zip(x).map(|(p, q)| (p - q) * (p - q)).sum();
        s += a * y * math::exp(-gamma * d2);
    }
    Ok(s)
}

/// Decision values for every row of `points`, through one cross-kernel matrix.
pub fn decision_values(model: &SvmModel, points: &Matrix) -> Result<Vec<f64>> {
    if points.rows() == 0 {
        return Ok(Vec::new());
    }
    if model.n_support() == 0 {
        if points.cols() != model.n_features() {
            bail!(
                InvalidDimension,
                "model expects {} features, got {}",
                model.n_features(),
                points.cols()
            );
        }
        return Ok(vec![model.bias; points.rows()]);
    }
    let cross = gram_cross(&model.support_vectors, points, model.kernel.gamma())?;
    let coef = model.dual_coefficients();
    Ok(cross
        .iter_rows()
        .map(|row| row.iter().zip(&coef).map(|(k, c)| k * c).sum::<f64>() + model.bias)
        .collect())
}

/// Sign of a decision value; exactly zero maps to `+1`.
pub fn sign(value: f64) -> i8 {
    if value >= 0.0 {
        1
    } else {
        -1
    }
}

pub fn predict_binary(model: &SvmModel, x: &[f64]) -> Result<i8> {
    decision_value(model, x).map(sign)
}

/// Anything that maps a feature vector to a class index.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<usize>;
}

impl Classifier for SvmModel {
    fn n_features(&self) -> usize {
        SvmModel::n_features(self)
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(match predict_binary(self, x)? {
            1 => self.classes[0],
            _ => self.classes[1],
        })
    }
}

/// One-vs-one ensemble.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MulticlassModel {
    /// Sorted class indices.
    pub classes: Vec<usize>,
    /// One machine per unordered class pair `(a, b)` with `a < b`; `+1` ↔ `a`.
    pub machines: Vec<((usize, usize), SvmModel)>,
}

impl MulticlassModel {
    pub fn converged(&self) -> bool {
        self.machines.iter().all(|(_, m)| m.converged)
    }

    /// Support-vector count summed over machines.
    pub fn n_support(&self) -> usize {
        self.machines.iter().map(|(_, m)| m.n_support()).sum()
    }
}

impl Classifier for MulticlassModel {
    fn n_features(&self) -> usize {
        self.machines.first().map_or(0, |(_, m)| m.n_features())
    }

    fn predict(&self, x: &[f64]) -> Result<usize> {
        predict_multiclass(self, x)
    }
}

/// Trains `L(L−1)/2` pairwise machines. Machine `k` (in lexicographic pair
/// order) uses seed `seed + k`, so with two classes the single machine is the
/// one [`train_binary`] produces.
pub fn train_multiclass(
    data: &LabeledDataset,
    config: &SvmConfig,
    seed: u64,
) -> Result<MulticlassModel> {
    config.validate()?;
    let n_classes = data.n_classes();
    if n_classes < 2 {
        bail!(
            DegenerateLabels,
            "multiclass training needs at least 2 classes, got {n_classes}"
        );
    }
    let counts = data.class_counts();
    if let Some(empty) = counts.iter().position(|c| *c == 0) {
        bail!(DegenerateLabels, "class {empty} has no samples");
    }

    let mut machines = Vec::with_capacity(n_classes * (n_classes - 1) / 2);
    let mut k = 0u64;
    for a in 0..n_classes {
        for b in (a + 1)..n_classes {
            let idx: Vec<usize> = (0..data.len())
                .filter(|&i| data.labels()[i] == a || data.labels()[i] == b)
                .collect();
            let sub = data.features().select_rows(&idx);
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if data.labels()[i] == a { 1.0 } else { -1.0 })
                .collect();
            let g = gram(&sub, config.kernel.gamma())?;
            let solution = solve_dual(&g, &y, config, seed.wrapping_add(k))
                .map_err(|e| e.context(format!("machine {a} vs {b}")))?;
            let mut model = model_from_solution(&solution, &sub, &y, config, [a, b]);
            // support indices refer to the full training set
            for s in &mut model.support_indices {
                *s = idx[*s];
            }
            machines.push(((a, b), model));
            k += 1;
        }
    }
    Ok(MulticlassModel {
        classes: (0..n_classes).collect(),
        machines,
    })
}

/// Majority vote over pairwise machines. Ties go to the class with the larger
/// summed `|decision value|` over the votes it won, then to the lower index.
pub fn predict_multiclass(model: &MulticlassModel, x: &[f64]) -> Result<usize> {
    let n = model.classes.iter().max().map_or(0, |m| m + 1);
    let mut votes = vec![0usize; n];
    let mut margin = vec![0.0f64; n];
    for ((a, b), machine) in &model.machines {
        let v = decision_value(machine, x)?;
        let winner = if sign(v) > 0 { *a } else { *b };
        votes[winner] += 1;
        margin[winner] += math::abs(v);
    }
    let mut best = model.classes[0];
    for &c in &model.classes[1..] {
        let better =
            votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best]);
        if better {
            best = c;
        }
    }
    Ok(best)
}

/// Fraction of rows whose prediction matches the label.
pub fn accuracy<M: Classifier + ?Sized>(model: &M, data: &LabeledDataset) -> Result<f64> {
    if data.is_empty() {
        bail!(InvalidInput, "cannot score an empty dataset");
    }
    let mut correct = 0usize;
    for (x, &y) in data.features().iter_rows().zip(data.labels()) {
        if model.predict(x)? == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{LabeledDataset, Provenance};
    use crate::error::Error;
    use alloc::string::ToString;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn config(gamma: f64, c: f64) -> SvmConfig {
        SvmConfig::new(KernelConfig::direct(gamma).unwrap()).with_c(c)
    }

    fn two_points() -> (Matrix, Vec<f64>) {
        (
            Matrix::from_rows(&[[1.0], [-1.0]]).unwrap(),
            vec![1.0, -1.0],
        )
    }

    fn xor() -> (Matrix, Vec<f64>) {
        (
            Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]]).unwrap(),
            vec![1.0, 1.0, -1.0, -1.0],
        )
    }

    #[test]
    fn symmetric_two_point_solution() {
        let (x, y) = two_points();
        let model = fit_binary(&x, &y, &config(1.0, 10.0), 0).unwrap();
        assert_eq!(model.n_support(), 2);
        assert_abs_diff_eq!(model.alphas[0], model.alphas[1], epsilon = 1e-12);
        let expected = 1.0 / (1.0 - (-4.0f64).exp());
        assert_abs_diff_eq!(model.alphas[0], expected, epsilon = 1e-9);
        assert_abs_diff_eq!(model.bias, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(decision_value(&model, &[0.0]).unwrap(), 0.0, epsilon = 1e-9);
        assert!(model.converged);
        model.validate().unwrap();
    }

    #[test]
    fn xor_is_separated() {
        let (x, y) = xor();
        let model = fit_binary(&x, &y, &config(1.0, 1000.0).with_tol(1e-10), 3).unwrap();
        for (row, label) in x.iter_rows().zip(&y) {
            assert_eq!(f64::from(predict_binary(&model, row).unwrap()), *label);
        }
        // symmetric problem: all four multipliers equal, bias zero
        for a in &model.alphas {
            assert_abs_diff_eq!(*a, model.alphas[0], epsilon = 1e-6);
        }
    }

    #[test]
    fn free_support_vector_sits_on_margin() {
        let (x, y) = xor();
        let cfg = config(1.0, 1000.0);
        let model = fit_binary(&x, &y, &cfg, 3).unwrap();
        for (k, &i) in model.support_indices.iter().enumerate() {
            if model.alphas[k] < cfg.c - ALPHA_EPS {
                let v = decision_value(&model, x.row(i)).unwrap();
                assert_abs_diff_eq!(v, y[i], epsilon = cfg.tol);
            }
        }
    }

    #[test]
    fn sign_tie_rule() {
        assert_eq!(sign(2.3), 1);
        assert_eq!(sign(-0.1), -1);
        assert_eq!(sign(0.0), 1);
        assert_eq!(sign(-0.0), 1);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]).unwrap();
        let err = fit_binary(&x, &[1.0, 1.0], &config(1.0, 1.0), 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateLabels(_)));
    }

    #[test]
    fn gram_must_match_data() {
        let (x, y) = two_points();
        let other = Matrix::from_rows(&[[2.0], [-1.0]]).unwrap();
        let g = gram(&other, 1.0).unwrap();
        assert!(train_binary(&x, &g, &y, &config(1.0, 1.0), 0).is_err());
        let g = gram(&x, 2.0).unwrap();
        assert!(train_binary(&x, &g, &y, &config(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn bad_config_rejected() {
        let (x, y) = two_points();
        for cfg in [
            config(1.0, 0.0),
            config(1.0, 1.0).with_tol(0.0),
            config(1.0, 1.0).with_max_passes(0),
        ] {
            assert!(matches!(
                fit_binary(&x, &y, &cfg, 0),
                Err(Error::InvalidInput(_))
            ));
        }
    }

    #[test]
    fn decision_dimension_checked() {
        let (x, y) = two_points();
        let model = fit_binary(&x, &y, &config(1.0, 1.0), 0).unwrap();
        assert!(matches!(
            decision_value(&model, &[0.0, 1.0]),
            Err(Error::InvalidDimension(_))
        ));
    }

    #[test]
    fn non_convergence_is_flagged() {
        // one full pass is not enough for an overlapping cloud
        let mut rng = SplitMix64::new(5);
        let x = Matrix::from_fn(40, 2, |_, _| rng.normal());
        let y: Vec<f64> = (0..40)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let cfg = config(2.0, 10.0).with_max_passes(1);
        let model = fit_binary(&x, &y, &cfg, 0).unwrap();
        assert!(!model.converged);
        let full = fit_binary(&x, &y, &config(2.0, 10.0), 0).unwrap();
        assert!(full.converged);
    }

    fn blobs() -> LabeledDataset {
        let mut rng = SplitMix64::new(9);
        let centers = [(-3.0, 0.0), (3.0, 0.0), (0.0, 4.0)];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, (cx, cy)) in centers.iter().enumerate() {
            for _ in 0..15 {
                rows.push([cx + 0.3 * rng.normal(), cy + 0.3 * rng.normal()]);
                labels.push(c);
            }
        }
        LabeledDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            labels,
            vec!["a".to_string(), "b".to_string()],
            vec!["0".to_string(), "1".to_string(), "2".to_string()],
            Provenance::Inline,
        )
        .unwrap()
    }

    #[test]
    fn multiclass_blobs() {
        let data = blobs();
        let model = train_multiclass(&data, &config(0.5, 1.0), 1).unwrap();
        assert_eq!(model.machines.len(), 3);
        assert_eq!(accuracy(&model, &data).unwrap(), 1.0);
        for (_, m) in &model.machines {
            m.validate().unwrap();
        }
    }

    #[test]
    fn two_class_multiclass_matches_binary() {
        let (x, y) = xor();
        let labels: Vec<usize> = y.iter().map(|v| if *v > 0.0 { 0 } else { 1 }).collect();
        let data = LabeledDataset::new(
            x.clone(),
            labels,
            vec!["a".to_string(), "b".to_string()],
            vec!["p".to_string(), "n".to_string()],
            Provenance::Inline,
        )
        .unwrap();
        let cfg = config(1.0, 5.0);
        let multi = train_multiclass(&data, &cfg, 4).unwrap();
        assert_eq!(multi.machines.len(), 1);
        let binary = fit_binary(&x, &y, &cfg, 4).unwrap();
        let machine = &multi.machines[0].1;
        assert_eq!(machine.alphas, binary.alphas);
        assert_eq!(machine.bias, binary.bias);
        for row in x.iter_rows() {
            let expected = if predict_binary(&binary, row).unwrap() > 0 {
                0
            } else {
                1
            };
            assert_eq!(predict_multiclass(&multi, row).unwrap(), expected);
        }
    }

    fn constant_machine(pair: (usize, usize), bias: f64) -> ((usize, usize), SvmModel) {
        (
            pair,
            SvmModel {
                support_indices: vec![],
                alphas: vec![],
                support_labels: vec![],
                support_vectors: Matrix::zeros(0, 1),
                bias,
                classes: [pair.0, pair.1],
                kernel: KernelConfig::direct(1.0).unwrap(),
                c: 1.0,
                converged: true,
                objective: 0.0,
            },
        )
    }

    #[test]
    fn multiclass_tie_breaks_on_margin() {
        // 0 beats 1 (+0.2), 1 beats 2 (+0.9), 2 beats 0 (−0.5): one vote each.
        let model = MulticlassModel {
            classes: vec![0, 1, 2],
            machines: vec![
                constant_machine((0, 1), 0.2),
                constant_machine((0, 2), -0.5),
                constant_machine((1, 2), 0.9),
            ],
        };
        assert_eq!(predict_multiclass(&model, &[0.0]).unwrap(), 1);

        // all margins equal: lowest index
        let model = MulticlassModel {
            classes: vec![0, 1, 2],
            machines: vec![
                constant_machine((0, 1), 0.5),
                constant_machine((0, 2), -0.5),
                constant_machine((1, 2), 0.5),
            ],
        };
        assert_eq!(predict_multiclass(&model, &[0.0]).unwrap(), 0);

        // unanimous
        let model = MulticlassModel {
            classes: vec![0, 1, 2],
            machines: vec![
                constant_machine((0, 1), -0.5),
                constant_machine((0, 2), 0.5),
                constant_machine((1, 2), 0.5),
            ],
        };
        assert_eq!(predict_multiclass(&model, &[0.0]).unwrap(), 1);
    }

    #[test]
    fn accuracy_counts() {
        let model = MulticlassModel {
            classes: vec![0, 1],
            machines: vec![constant_machine((0, 1), 1.0)],
        };
        let make = |labels: Vec<usize>| {
            let n = labels.len();
            LabeledDataset::new(
                Matrix::zeros(n, 1),
                labels,
                vec!["x".to_string()],
                vec!["a".to_string(), "b".to_string()],
                Provenance::Inline,
            )
            .unwrap()
        };
        assert_eq!(accuracy(&model, &make(vec![0, 0, 0])).unwrap(), 1.0);
        assert_eq!(accuracy(&model, &make(vec![1, 1])).unwrap(), 0.0);
        let mut labels = vec![0; 89];
        labels.push(1);
        assert_abs_diff_eq!(accuracy(&model, &make(labels)).unwrap(), 89.0 / 90.0);
        assert!(accuracy(&model, &make(vec![])).is_err());
    }

    #[test]
    fn batch_and_pointwise_decisions_agree() {
        let (x, y) = xor();
        let model = fit_binary(&x, &y, &config(0.7, 3.0), 2).unwrap();
        let probe = Matrix::from_fn(25, 2, |i, j| {
            if j == 0 {
                (i % 5) as f64 * 0.3
            } else {
                (i / 5) as f64 * 0.3
            }
        });
        let batch = decision_values(&model, &probe).unwrap();
        for (row, v) in probe.iter_rows().zip(&batch) {
            assert_abs_diff_eq!(decision_value(&model, row).unwrap(), *v, epsilon = 1e-12);
        }
    }
}
