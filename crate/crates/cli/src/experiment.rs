//! Experiment definitions, the per-γ train/evaluate loop, γ sweeps and
//! the reports they produce.

use std::path::Path;

use dsvkernel::data::{
    make_circles, make_moons, make_spirals, select_features, split, LabeledDataset, Provenance,
    SplitSpec, DEFAULT_CIRCLES_NOISE, DEFAULT_CIRCLES_RATIO, DEFAULT_MOONS_NOISE,
    DEFAULT_SPIRALS_NOISE, DEFAULT_SPIRALS_TURNS, DEFAULT_TRAIN_FRACTION,
};
use dsvkernel::kernel::KernelConfig;
use dsvkernel::svm::{
    accuracy, train_multiclass, MulticlassModel, SvmConfig, DEFAULT_C, DEFAULT_MAX_PASSES,
    DEFAULT_TOL,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io::{load_csv, sha256_hex};
use crate::model::Preprocess;

pub const REPORT_VERSION: u32 = 1;
/// The coherent-state kernel; every report carries it.
pub const BASELINE_GAMMA: f64 = 1.0;
pub const DEFAULT_SAMPLES: usize = 300;
/// Log-spaced sweep grid; contains 1 and the widths 0.06, 0.8 and 1.5.
pub const DEFAULT_GRID: [f64; 21] = [
    0.01, 0.02, 0.03, 0.04, 0.06, 0.08, 0.1, 0.15, 0.2, 0.3, 0.5, 0.8, 1.0, 1.25, 1.5, 2.0, 3.0,
    5.0, 8.0, 12.0, 20.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Moons,
    Circles,
    Spirals,
}

impl GeneratorKind {
    pub fn default_noise(self) -> f64 {
        match self {
            GeneratorKind::Moons => DEFAULT_MOONS_NOISE,
            GeneratorKind::Circles => DEFAULT_CIRCLES_NOISE,
            GeneratorKind::Spirals => DEFAULT_SPIRALS_NOISE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSpec {
    Generator {
        kind: GeneratorKind,
        n: usize,
        noise: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius_ratio: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        turns: Option<f64>,
    },
    File {
        path: String,
        label_column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        features: Option<Vec<String>>,
    },
}

impl DatasetSpec {
    /// A generator with its default geometry and noise.
    pub fn generator(kind: GeneratorKind) -> Self {
        DatasetSpec::Generator {
            kind,
            n: DEFAULT_SAMPLES,
            noise: kind.default_noise(),
            radius_ratio: None,
            turns: None,
        }
    }

    pub fn load(&self, seed: u64) -> Result<LabeledDataset> {
        match self {
            DatasetSpec::Generator {
                kind,
                n,
                noise,
                radius_ratio,
                turns,
            } => Ok(match kind {
                GeneratorKind::Moons => make_moons(*n, *noise, seed)?,
                GeneratorKind::Circles => make_circles(
                    *n,
                    radius_ratio.unwrap_or(DEFAULT_CIRCLES_RATIO),
                    *noise,
                    seed,
                )?,
                GeneratorKind::Spirals => {
                    make_spirals(*n, turns.unwrap_or(DEFAULT_SPIRALS_TURNS), *noise, seed)?
                }
            }),
            DatasetSpec::File {
                path,
                label_column,
                features,
            } => {
                let data = load_csv(Path::new(path), label_column, None)?;
                match features {
                    Some(names) => {
                        let names: Vec<&str> = names.iter().map(String::as_str).collect();
                        Ok(select_features(&data, &names)?)
                    }
                    None => Ok(data),
                }
            }
        }
    }
}

/// Everything needed to reproduce a run. The output location is deliberately
/// not part of it, so the hash only covers what affects the numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub dataset: DatasetSpec,
    pub gammas: Vec<f64>,
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
    pub train_fraction: f64,
    pub stratified: bool,
    pub standardize: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pca: Option<usize>,
    /// Drives generation, splitting and the solver.
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn new(dataset: DatasetSpec, gammas: Vec<f64>, seed: u64) -> Self {
        Self {
            dataset,
            gammas,
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_passes: DEFAULT_MAX_PASSES,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            stratified: true,
            standardize: false,
            pca: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(CliError::Invalid("gamma list is empty".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(CliError::Invalid(format!(
                "gamma must be positive and finite, got {g}"
            )));
        }
        self.svm_config(BASELINE_GAMMA)?.validate()?;
        Ok(())
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("spec serializes"))
    }

    pub fn svm_config(&self, gamma: f64) -> Result<SvmConfig> {
        Ok(SvmConfig::new(KernelConfig::direct(gamma)?)
            .with_c(self.c)
            .with_tol(self.tol)
            .with_max_passes(self.max_passes))
    }

    fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.train_fraction,
            seed: self.seed,
            stratified: self.stratified,
        }
    }

    /// The configured γ list with the baseline inserted first when missing.
    pub fn gamma_list(&self) -> Vec<f64> {
        let mut list = self.gammas.clone();
        if !list.contains(&BASELINE_GAMMA) {
            list.insert(0, BASELINE_GAMMA);
        }
        list
    }
}

/// Raw data plus the preprocessed splits.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub raw: LabeledDataset,
    pub preprocess: Preprocess,
    pub train: LabeledDataset,
    pub test: LabeledDataset,
}

pub fn prepare(spec: &ExperimentSpec) -> Result<Prepared> {
    let raw = spec.dataset.load(spec.seed)?;
    let (train_raw, test_raw) = split(&raw, &spec.split_spec())?;
    let preprocess = Preprocess::fit(&train_raw, spec.standardize, spec.pca)?;
    Ok(Prepared {
        train: preprocess.apply(&train_raw)?,
        test: preprocess.apply(&test_raw)?,
        raw,
        preprocess,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub gamma: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub n_sv: usize,
    pub converged: bool,
    pub is_baseline: bool,
    /// `test_acc − test_acc(γ = 1)`.
    pub baseline_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: u32,
    pub spec_hash: String,
    pub seed: u64,
    pub dataset_provenance: Provenance,
    pub spec: ExperimentSpec,
    pub rows: Vec<ReportRow>,
    pub selected_gamma: f64,
}

impl ExperimentReport {
    pub fn row(&self, gamma: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.gamma == gamma)
    }

    pub fn baseline(&self) -> &ReportRow {
        self.rows
            .iter()
            .find(|r| r.is_baseline)
            .expect("baseline row is always present")
    }

    pub fn selected(&self) -> &ReportRow {
        self.row(self.selected_gamma)
            .expect("selected gamma has a row")
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub prepared: Prepared,
    /// Trained models in report-row order.
    pub models: Vec<MulticlassModel>,
    /// Seconds spent per γ; kept out of the report so it stays reproducible.
    pub wall_times: Vec<f64>,
}

/// Best test accuracy; ties go to the γ closest to 1 in log distance, then to
/// the larger γ.
pub fn select_gamma(rows: &[ReportRow]) -> f64 {
    const LOG_TIE: f64 = 1e-12;
    let mut best = &rows[0];
    for row in &rows[1..] {
        let (d_row, d_best) = (row.gamma.ln().abs(), best.gamma.ln().abs());
        let better = row.test_acc > best.test_acc
            || (row.test_acc == best.test_acc
                && (d_row < d_best - LOG_TIE
                    || ((d_row - d_best).abs() <= LOG_TIE && row.gamma > best.gamma)));
        if better {
            best = row;
        }
    }
    best.gamma
}

/// For each γ: train on the training split, score train and test. The
/// baseline γ = 1 is always included.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Experiment> {
    spec.validate()?;
    let prepared = prepare(spec)?;
    let mut rows = Vec::new();
    let mut models = Vec::new();
    let mut wall_times = Vec::new();
    for gamma in spec.gamma_list() {
        let start = std::time::Instant::now();
        let model = train_multiclass(&prepared.train, &spec.svm_config(gamma)?, spec.seed)?;
        rows.push(ReportRow {
            gamma,
            train_acc: accuracy(&model, &prepared.train)?,
            test_acc: accuracy(&model, &prepared.test)?,
            n_sv: model.n_support(),
            converged: model.converged(),
            is_baseline: gamma == BASELINE_GAMMA,
            baseline_delta: 0.0,
        });
        models.push(model);
        wall_times.push(start.elapsed().as_secs_f64());
    }
    let base = rows
        .iter()
        .find(|r| r.is_baseline)
        .map(|r| r.test_acc)
        .expect("baseline present");
    for row in &mut rows {
        row.baseline_delta = row.test_acc - base;
    }
    let selected_gamma = select_gamma(&rows);
    Ok(Experiment {
        report: ExperimentReport {
            version: REPORT_VERSION,
            spec_hash: spec.hash(),
            seed: spec.seed,
            dataset_provenance: prepared.raw.provenance().clone(),
            spec: spec.clone(),
            rows,
            selected_gamma,
        },
        prepared,
        models,
        wall_times,
    })
}

/// Runs the experiment over `grid` instead of its own γ list.
pub fn sweep(spec: &ExperimentSpec, grid: &[f64]) -> Result<Experiment> {
    if grid.is_empty() {
        return Err(CliError::Invalid("sweep grid is empty".into()));
    }
    let spec = ExperimentSpec {
        gammas: grid.to_vec(),
        ..spec.clone()
    };
    run_experiment(&spec)
}

/// Replays the experiment recorded in a report and checks it reproduces exactly.
pub fn replay(report: &ExperimentReport) -> Result<Experiment> {
    if report.spec.hash() != report.spec_hash {
        return Err(CliError::Invalid(format!(
            "report spec hashes to {} but records {}",
            report.spec.hash(),
            report.spec_hash
        )));
    }
    let run = run_experiment(&report.spec)?;
    if run.report != *report {
        return Err(CliError::Invalid(
            "replayed report differs from the recorded one".into(),
        ));
    }
    Ok(run)
}
