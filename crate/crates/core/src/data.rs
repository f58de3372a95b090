//! Labeled datasets, synthetic generators, stratified splits, PCA and
//! standardization.
//!
//! Every generator is a pure function of its parameters and seed; noise and
//! sampling draw from separate [`SplitMix64`] streams.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{bail, Result};
use crate::linalg::{symmetric_eigen, Matrix};
use crate::math;
use crate::rng::{streams, SplitMix64};

pub const DEFAULT_MOONS_NOISE: f64 = 0.15;
pub const DEFAULT_CIRCLES_RATIO: f64 = 0.5;
pub const DEFAULT_CIRCLES_NOISE: f64 = 0.08;
pub const DEFAULT_SPIRALS_TURNS: f64 = 2.0;
pub const DEFAULT_SPIRALS_NOISE: f64 = 0.05;
/// Radial distance between neighbouring spiral arms.
pub const SPIRALS_ARM_GAP: f64 = 10.0;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Provenance {
    /// Built in code (tests, fixtures).
    Inline,
    Generator {
        name: String,
        params: Vec<(String, f64)>,
        seed: u64,
    },
    File {
        path: String,
        hash: String,
    },
    Derived {
        parent: Box<Provenance>,
        step: String,
    },
}

impl Provenance {
    pub fn derive(&self, step: impl Into<String>) -> Self {
        Provenance::Derived {
            parent: Box::new(self.clone()),
            step: step.into(),
        }
    }
}

/// Feature matrix with integer class labels `0..L`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabeledDataset {
    features: Matrix,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    /// Original name of each class index.
    class_names: Vec<String>,
    provenance: Provenance,
}

impl LabeledDataset {
    /// Labels must index into `class_names`; feature names must match the
    /// column count.
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        provenance: Provenance,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            bail!(
                InvalidDimension,
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            );
        }
        if feature_names.len() != features.cols() {
            bail!(
                InvalidDimension,
                "{} feature names for {} columns",
                feature_names.len(),
                features.cols()
            );
        }
        if let Some(bad) = labels.iter().find(|l| **l >= class_names.len()) {
            bail!(
                InvalidInput,
                "label {bad} has no class name ({} classes)",
                class_names.len()
            );
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            class_names,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, same classes and names.
    pub fn subset(&self, indices: &[usize], step: &str) -> Self {
        Self {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            provenance: self.provenance.derive(step),
        }
    }

    fn with_features(&self, features: Matrix, feature_names: Vec<String>, step: String) -> Self {
        Self {
            features,
            labels: self.labels.clone(),
            feature_names,
            class_names: self.class_names.clone(),
            provenance: self.provenance.derive(step),
        }
    }

    /// `+1` for class `positive`, `−1` otherwise.
    pub fn signed_labels(&self, positive: usize) -> Vec<f64> {
        self.labels
            .iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect()
    }
}

fn check_even(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        bail!(
            InvalidInput,
            "sample count must be even and at least 4, got {n}"
        );
    }
    Ok(())
}

fn check_noise(noise: f64) -> Result<()> {
    if !(noise >= 0.0) || !noise.is_finite() {
        bail!(
            InvalidInput,
            "noise sigma must be finite and non-negative, got {noise}"
        );
    }
    Ok(())
}

fn two_class_dataset(
    rows: Vec<[f64; 2]>,
    name: &str,
    params: Vec<(String, f64)>,
    seed: u64,
) -> LabeledDataset {
    let half = rows.len() / 2;
    let labels = (0..rows.len()).map(|i| usize::from(i >= half)).collect();
    LabeledDataset {
        features: Matrix::from_rows(&rows).expect("rows have two columns"),
        labels,
        feature_names: vec!["x1".to_string(), "x2".to_string()],
        class_names: vec!["0".to_string(), "1".to_string()],
        provenance: Provenance::Generator {
            name: name.to_string(),
            params,
            seed,
        },
    }
}

fn add_noise(rows: &mut [[f64; 2]], sigma: f64, rng: &mut SplitMix64) {
    for row in rows {
        row[0] += sigma * rng.normal();
        row[1] += sigma * rng.normal();
    }
}

/// Two interleaving half circles. Class 0 is the upper unit semicircle, class
/// 1 the lower one shifted to `(1, 0.5)`; angles are evenly spaced on `[0, π]`
/// and each coordinate gets `N(0, σ²)` noise.
pub fn make_moons(n: usize, noise_sigma: f64, seed: u64) -> Result<LabeledDataset> {
    check_even(n)?;
    check_noise(noise_sigma)?;
    let half = n / 2;
    let step = math::PI / (half - 1) as f64;
    let mut rows = Vec::with_capacity(n);
    for i in 0..half {
        let t = step * i as f64;
        rows.push([math::cos(t), math::sin(t)]);
    }
    for i in 0..half {
        let t = step * i as f64;
        rows.push([1.0 - math::cos(t), 0.5 - math::sin(t)]);
    }
    if noise_sigma > 0.0 {
        add_noise(
            &mut rows,
            noise_sigma,
            &mut SplitMix64::with_stream(seed, streams::GENERATOR_NOISE),
        );
    }
    Ok(two_class_dataset(
        rows,
        "moons",
        vec![("n".into(), n as f64), ("noise".into(), noise_sigma)],
        seed,
    ))
}

/// Two concentric circles: class 0 at radius 1, class 1 at `radius_ratio`.
/// Angles are evenly spaced on `[0, 2π)`; noise is radial, `N(0, σ²)`.
pub fn make_circles(
    n: usize,
    radius_ratio: f64,
    noise_sigma: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    check_even(n)?;
    check_noise(noise_sigma)?;
    if !(radius_ratio > 0.0 && radius_ratio < 1.0) {
        bail!(
            InvalidInput,
            "radius ratio must lie in (0, 1), got {radius_ratio}"
        );
    }
    let half = n / 2;
    let mut rng = SplitMix64::with_stream(seed, streams::GENERATOR_NOISE);
    let mut rows = Vec::with_capacity(n);
    for radius in [1.0, radius_ratio] {
        for i in 0..half {
            let t = 2.0 * math::PI * i as f64 / half as f64;
            let r = if noise_sigma > 0.0 {
                radius + noise_sigma * rng.normal()
            } else {
                radius
            };
            rows.push([r * math::cos(t), r * math::sin(t)]);
        }
    }
    Ok(two_class_dataset(
        rows,
        "circles",
        vec![
            ("n".into(), n as f64),
            ("radius_ratio".into(), radius_ratio),
            ("noise".into(), noise_sigma),
        ],
        seed,
    ))
}

/// Two Archimedean spiral arms offset by π. Each pair of points shares a
/// parameter `t` drawn uniformly from `(0, 1]`; the angle is `t · 2π · turns`
/// and the radius `t · t_max` with `t_max = 2 · turns · SPIRALS_ARM_GAP`, so
/// the arms sit [`SPIRALS_ARM_GAP`] apart. Class 1 is at angle `+π`. Each
/// coordinate then gets `N(0, σ²)` noise.
pub fn make_spirals(n: usize, turns: f64, noise_sigma: f64, seed: u64) -> Result<LabeledDataset> {
    check_even(n)?;
    check_noise(noise_sigma)?;
    if !(turns > 0.0) || !turns.is_finite() {
        bail!(InvalidInput, "turns must be positive, got {turns}");
    }
    let half = n / 2;
    let max_angle = 2.0 * math::PI * turns;
    let t_max = 2.0 * turns * SPIRALS_ARM_GAP;
    let mut sampler = SplitMix64::with_stream(seed, streams::GENERATOR_SAMPLING);
    let ts: Vec<f64> = (0..half).map(|_| 1.0 - sampler.next_f64()).collect();
    let mut rows = Vec::with_capacity(n);
    for offset in [0.0, math::PI] {
        for &t in &ts {
            let (r, a) = (t * t_max, t * max_angle + offset);
            rows.push([r * math::cos(a), r * math::sin(a)]);
        }
    }
    if noise_sigma > 0.0 {
        add_noise(
            &mut rows,
            noise_sigma,
            &mut SplitMix64::with_stream(seed, streams::GENERATOR_NOISE),
        );
    }
    Ok(two_class_dataset(
        rows,
        "spirals",
        vec![
            ("n".into(), n as f64),
            ("turns".into(), turns),
            ("noise".into(), noise_sigma),
        ],
        seed,
    ))
}

/// Column slice by name. Names must exist and be distinct.
pub fn select_features(data: &LabeledDataset, names: &[&str]) -> Result<LabeledDataset> {
    if names.is_empty() {
        bail!(InvalidInput, "select at least one feature");
    }
    let mut seen = BTreeSet::new();
    let mut columns = Vec::with_capacity(names.len());
    for name in names {
        if !seen.insert(*name) {
            bail!(InvalidInput, "feature '{name}' selected twice");
        }
        match data.feature_names.iter().position(|f| f == name) {
            Some(j) => columns.push(j),
            None => bail!(
                InvalidInput,
                "unknown feature '{name}' (available: {})",
                data.feature_names.join(", ")
            ),
        }
    }
    Ok(data.with_features(
        data.features.select_cols(&columns),
        names.iter().map(|s| s.to_string()).collect(),
        format!("select[{}]", names.join(",")),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            train_fraction: DEFAULT_TRAIN_FRACTION,
            seed,
            stratified: true,
        }
    }
}

/// Train/test partition. The test set gets `⌈(1 − f)·M⌉` rows. When
/// stratified, each class contributes `⌊f · count⌋` training rows, and the
/// remaining training slots go one per class in a seeded order. Rows inside
/// each part keep their original relative order.
pub fn split(data: &LabeledDataset, spec: &SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let f = spec.train_fraction;
    if !(f > 0.0 && f < 1.0) {
        bail!(InvalidInput, "train fraction must lie in (0, 1), got {f}");
    }
    let m = data.len();
    if m < 2 {
        bail!(InvalidInput, "need at least 2 rows to split, got {m}");
    }
    let n_test = (math::floor((1.0 - f) * m as f64 - 1e-9) as usize + 1).clamp(1, m - 1);
    let n_train = m - n_test;
    let mut rng = SplitMix64::with_stream(spec.seed, streams::SPLIT);

    let mut train_idx = Vec::with_capacity(n_train);
    if spec.stratified {
        let counts = data.class_counts();
        if let Some((c, n)) = counts.iter().enumerate().find(|(_, n)| **n < 2) {
            bail!(
                DegenerateLabels,
                "class '{}' has {n} sample(s); stratified splitting needs at least 2",
                data.class_names[c]
            );
        }
        let mut quota: Vec<usize> = counts
            .iter()
            .map(|&c| (math::floor(f * c as f64 + 1e-9) as usize).clamp(1, c - 1))
            .collect();
        let mut order: Vec<usize> = (0..counts.len()).collect();
        rng.shuffle(&mut order);
        let mut assigned: usize = quota.iter().sum();
        for &c in order.iter().cycle().take(4 * counts.len()) {
            if assigned >= n_train {
                break;
            }
            if quota[c] + 1 < counts[c] {
                quota[c] += 1;
                assigned += 1;
            }
        }
        for (class, &q) in quota.iter().enumerate() {
            let mut members: Vec<usize> = (0..m).filter(|&i| data.labels[i] == class).collect();
            rng.shuffle(&mut members);
            train_idx.extend_from_slice(&members[..q]);
        }
    } else {
        let mut all: Vec<usize> = (0..m).collect();
        rng.shuffle(&mut all);
        train_idx.extend_from_slice(&all[..n_train]);
    }
    train_idx.sort_unstable();
    let mut in_train = vec![false; m];
    for &i in &train_idx {
        in_train[i] = true;
    }
    let test_idx: Vec<usize> = (0..m).filter(|&i| !in_train[i]).collect();
    let tag = format!(
        "split[f={f},seed={},stratified={}]",
        spec.seed, spec.stratified
    );
    Ok((
        data.subset(&train_idx, &format!("{tag}:train")),
        data.subset(&test_idx, &format!("{tag}:test")),
    ))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k × N`; row `i` is the `i`-th principal direction.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
}

/// Principal components from the eigendecomposition of the sample covariance
/// (denominator `M − 1`). Each component's largest-magnitude coordinate is
/// made positive.
pub fn pca_fit(data: &LabeledDataset, k: usize) -> Result<PcaModel> {
    let x = data.features();
    let (m, n) = (x.rows(), x.cols());
    if m < 2 {
        bail!(InvalidInput, "PCA needs at least 2 rows, got {m}");
    }
    if k == 0 || k > n {
        bail!(InvalidInput, "component count {k} outside 1..={n}");
    }
    let mean: Vec<f64> = (0..n)
        .map(|j| x.column(j).iter().sum::<f64>() / m as f64)
        .collect();
    let mut cov = Matrix::zeros(n, n);
    for row in x.iter_rows() {
        for a in 0..n {
            let da = row[a] - mean[a];
            for b in 0..=a {
                cov[(a, b)] += da * (row[b] - mean[b]);
            }
        }
    }
    for a in 0..n {
        for b in 0..=a {
            let v = cov[(a, b)] / (m - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let eig = symmetric_eigen(&cov)?;
    let mut components = Matrix::zeros(k, n);
    let mut explained_variance = Vec::with_capacity(k);
    for c in 0..k {
        let col = n - 1 - c;
        explained_variance.push(eig.values[col].max(0.0));
        let dir = eig.vectors.column(col);
        let pivot = dir.iter().enumerate().fold(0, |best, (j, v)| {
            if math::abs(*v) > math::abs(dir[best]) {
                j
            } else {
                best
            }
        });
        let flip = if dir[pivot] < 0.0 { -1.0 } else { 1.0 };
        for (j, v) in dir.iter().enumerate() {
            components[(c, j)] = flip * v;
        }
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn project(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.mean.len() {
            bail!(
                InvalidDimension,
                "PCA fitted on {} features, got {}",
                self.mean.len(),
                x.cols()
            );
        }
        let k = self.n_components();
        Ok(Matrix::from_fn(x.rows(), k, |i, c| {
            x.row(i)
                .iter()
                .zip(&self.mean)
                .zip(self.components.row(c))
                .map(|((v, mu), w)| (v - mu) * w)
                .sum()
        }))
    }

    /// Maps scores back to the original feature space.
    pub fn reconstruct(&self, scores: &Matrix) -> Result<Matrix> {
        if scores.cols() != self.n_components() {
            bail!(
                InvalidDimension,
                "expected {} scores per row, got {}",
                self.n_components(),
                scores.cols()
            );
        }
        let back = scores * &self.components;
        Ok(Matrix::from_fn(back.rows(), back.cols(), |i, j| {
            back[(i, j)] + self.mean[j]
        }))
    }
}

/// Projects a dataset onto the fitted components; features become `PC1..PCk`.
pub fn pca_transform(model: &PcaModel, data: &LabeledDataset) -> Result<LabeledDataset> {
    let projected = model.project(data.features())?;
    let names = (1..=model.n_components())
        .map(|i| format!("PC{i}"))
        .collect();
    Ok(data.with_features(projected, names, format!("pca[k={}]", model.n_components())))
}

/// Per-column standardization statistics.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Scaler {
    pub mean: Vec<f64>,
    /// Population standard deviation.
    pub std: Vec<f64>,
    /// Zero-variance columns; these pass through untouched.
    pub constant: Vec<bool>,
}

pub fn standardize_fit(data: &LabeledDataset) -> Result<Scaler> {
    let x = data.features();
    let m = x.rows();
    if m < 2 {
        bail!(
            InvalidInput,
            "standardization needs at least 2 rows, got {m}"
        );
    }
    if !x.is_finite() {
        bail!(InvalidInput, "data contains non-finite values");
    }
    let mut mean = Vec::with_capacity(x.cols());
    let mut std = Vec::with_capacity(x.cols());
    let mut constant = Vec::with_capacity(x.cols());
    for j in 0..x.cols() {
        let col = x.column(j);
        let mu = col.iter().sum::<f64>() / m as f64;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64;
        let is_constant = col.iter().all(|v| *v == col[0]);
        mean.push(mu);
        std.push(math::sqrt(var));
        constant.push(is_constant || var == 0.0);
    }
    Ok(Scaler {
        mean,
        std,
        constant,
    })
}

impl Scaler {
    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        let x = data.features();
        if x.cols() != self.mean.len() {
            bail!(
                InvalidDimension,
                "scaler fitted on {} features, got {}",
                self.mean.len(),
                x.cols()
            );
        }
        let scaled = Matrix::from_fn(x.rows(), x.cols(), |i, j| {
            if self.constant[j] {
                x[(i, j)]
            } else {
                (x[(i, j)] - self.mean[j]) / self.std[j]
            }
        });
        Ok(data.with_features(
            scaled,
            data.feature_names.clone(),
            "standardize".to_string(),
        ))
    }

    pub fn has_constant_columns(&self) -> bool {
        self.constant.iter().any(|c| *c)
    }
}
