use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dsvkernel::data::{select_features, LabeledDataset};
use dsvkernel::fock::{SqueezeParams, DEFAULT_CUTOFF};
use dsvkernel::kernel::{gamma_from_squeeze, gram, kernel_vec};
use dsvkernel::svm::{accuracy, train_multiclass, DEFAULT_C, DEFAULT_MAX_PASSES, DEFAULT_TOL};
use dsvkernel_cli::boundary::{boundary_grid, padded_bounds, DEFAULT_RESOLUTION};
use dsvkernel_cli::experiment::{
    prepare, replay, run_experiment, DatasetSpec, ExperimentReport, ExperimentSpec, GeneratorKind,
    DEFAULT_GRID, DEFAULT_SAMPLES,
};
use dsvkernel_cli::io::{
    load_csv, read_json, write_atomic, write_dataset, write_gram, write_json, write_rows,
};
use dsvkernel_cli::model::ModelFile;
use dsvkernel_cli::simulate::simulate_overlap;
use dsvkernel_cli::{CliError, Result};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "dsvkernel",
    version,
    about = "Squeezed-state Gaussian kernels and SVM experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dataset utilities
    #[command(subcommand)]
    Data(DataCommand),
    /// Kernel evaluation
    #[command(subcommand)]
    Kernel(KernelCommand),
    /// Fock-space simulation
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Train one model on the training split and write it as JSON
    Train(TrainArgs),
    /// Score a saved model on a labeled CSV
    Evaluate(EvaluateArgs),
    /// Train and score over a list of gammas (γ = 1 is always included)
    Sweep(SweepArgs),
    /// Sample a 2-feature model's decision function on a grid
    Boundary(BoundaryArgs),
}

#[derive(Subcommand)]
enum DataCommand {
    /// Write a synthetic dataset as CSV plus a provenance sidecar
    Generate {
        #[arg(long, value_enum)]
        kind: GeneratorKind,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        n: usize,
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long)]
        radius_ratio: Option<f64>,
        #[arg(long)]
        turns: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum KernelCommand {
    /// Kernel value between two points
    Eval {
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        xp: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        xq: Vec<f64>,
        #[command(flatten)]
        width: Width,
    },
    /// Gram matrix of a CSV's features
    Gram {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "label")]
        label_column: String,
        #[command(flatten)]
        width: Width,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Kernel width, either directly or from squeezing parameters.
#[derive(Args)]
struct Width {
    #[arg(long, conflicts_with_all = ["r", "theta"])]
    gamma: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    theta: f64,
}

impl Width {
    fn gamma(&self) -> Result<f64> {
        match (self.gamma, self.r) {
            (Some(g), _) => Ok(g),
            (None, Some(r)) => Ok(gamma_from_squeeze(SqueezeParams::new(r, self.theta)?)),
            (None, None) => Err(CliError::Invalid("give --gamma or --r".into())),
        }
    }
}

#[derive(Subcommand)]
enum SimulateCommand {
    /// Zero-photon probability of the overlap circuit, with the closed form
    Overlap {
        #[arg(long, allow_hyphen_values = true)]
        xp: f64,
        #[arg(long, allow_hyphen_values = true)]
        xq: f64,
        #[arg(long, default_value_t = 0.0)]
        r: f64,
        #[arg(long, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, default_value_t = DEFAULT_CUTOFF)]
        cutoff: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DatasetArgs {
    /// Synthetic generator
    #[arg(long, value_enum, conflicts_with = "data")]
    generator: Option<GeneratorKind>,
    /// Labeled CSV file
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    n: usize,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    radius_ratio: Option<f64>,
    #[arg(long)]
    turns: Option<f64>,
    #[arg(long, default_value = "label")]
    label_column: String,
    /// Feature columns to keep (comma separated)
    #[arg(long, value_delimiter = ',')]
    features: Option<Vec<String>>,
    /// Standardize with training-split statistics
    #[arg(long)]
    standardize: bool,
    /// Project onto this many principal components
    #[arg(long)]
    pca: Option<usize>,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    #[arg(long)]
    no_stratify: bool,
    #[arg(long, default_value_t = DEFAULT_C)]
    c: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_PASSES)]
    max_passes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DatasetArgs {
    fn spec(&self, gammas: Vec<f64>) -> Result<ExperimentSpec> {
        let dataset = match (&self.generator, &self.data) {
            (Some(kind), _) => DatasetSpec::Generator {
                kind: *kind,
                n: self.n,
                noise: self.noise.unwrap_or(kind.default_noise()),
                radius_ratio: self.radius_ratio,
                turns: self.turns,
            },
            (None, Some(path)) => DatasetSpec::File {
                path: path.display().to_string(),
                label_column: self.label_column.clone(),
                features: self.features.clone(),
            },
            (None, None) => return Err(CliError::Invalid("give --generator or --data".into())),
        };
        Ok(ExperimentSpec {
            c: self.c,
            tol: self.tol,
            max_passes: self.max_passes,
            train_fraction: self.train_fraction,
            stratified: !self.no_stratify,
            standardize: self.standardize,
            pca: self.pca,
            ..ExperimentSpec::new(dataset, gammas, self.seed)
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    dataset: DatasetArgs,
    /// Gamma to evaluate; repeat for a grid (default: a log-spaced grid from 0.01 to 20)
    #[arg(long = "gamma")]
    gammas: Vec<f64>,
    /// Re-run the experiment recorded in a report and require an identical result
    #[arg(long, conflicts_with = "gammas")]
    replay: Option<PathBuf>,
    /// Output directory for report.json, timing.json and per-γ models
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BoundaryArgs {
    #[arg(long)]
    model: PathBuf,
    /// Data whose bounding box (after the model's preprocessing) sets the grid
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_column: String,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: usize,
    #[arg(long)]
    out: PathBuf,
}

fn print_json(value: &serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("json value")
    );
}

/// Loads `path` in the model's input space: same columns, class names mapped
/// onto the model's class indices.
fn load_for_model(model: &ModelFile, path: &Path, label_column: &str) -> Result<LabeledDataset> {
    let data = load_csv(path, label_column, None)?;
    let names: Vec<&str> = model.input_features.iter().map(String::as_str).collect();
    let data = select_features(&data, &names)?;
    let labels = data
        .labels()
        .iter()
        .map(|&l| {
            let name = &data.class_names()[l];
            model
                .class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| CliError::Invalid(format!("class '{name}' is unknown to the model")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledDataset::new(
        data.features().clone(),
        labels,
        data.feature_names().to_vec(),
        model.class_names.clone(),
        data.provenance().clone(),
    )?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Data(DataCommand::Generate {
            kind,
            n,
            noise,
            radius_ratio,
            turns,
            seed,
            out,
        }) => {
            let spec = DatasetSpec::Generator {
                kind,
                n,
                noise: noise.unwrap_or(kind.default_noise()),
                radius_ratio,
                turns,
            };
            let data = spec.load(seed)?;
            write_dataset(&out, &data)?;
            print_json(&json!({ "rows": data.len(), "out": out.display().to_string() }));
        }
        Command::Kernel(KernelCommand::Eval { xp, xq, width }) => {
            let gamma = width.gamma()?;
            let value = kernel_vec(&xp, &xq, gamma)?;
            print_json(&json!({ "gamma": gamma, "value": value }));
        }
        Command::Kernel(KernelCommand::Gram {
            data,
            label_column,
            width,
            out,
        }) => {
            let dataset = load_csv(&data, &label_column, None)?;
            let g = gram(dataset.features(), width.gamma()?)?;
            write_gram(&out, &g)?;
            print_json(
                &json!({ "dim": g.dim(), "gamma": g.gamma(), "out": out.display().to_string() }),
            );
        }
        Command::Simulate(SimulateCommand::Overlap {
            xp,
            xq,
            r,
            theta,
            cutoff,
            out,
        }) => {
            let record = simulate_overlap(xp, xq, r, theta, cutoff)?;
            match out {
                Some(path) => write_json(&path, &record)?,
                None => print_json(&serde_json::to_value(record).expect("record")),
            }
        }
        Command::Train(args) => {
            let spec = args.dataset.spec(vec![args.gamma])?;
            spec.validate()?;
            let prepared = prepare(&spec)?;
            let model =
                train_multiclass(&prepared.train, &spec.svm_config(args.gamma)?, spec.seed)?;
            let file = ModelFile::new(
                &model,
                &prepared.raw,
                &prepared.preprocess,
                Some(spec.hash()),
            )?;
            write_json(&args.out, &file)?;
            print_json(&json!({
                "gamma": args.gamma,
                "train_acc": accuracy(&model, &prepared.train)?,
                "test_acc": accuracy(&model, &prepared.test)?,
                "n_sv": model.n_support(),
                "converged": model.converged(),
                "out": args.out.display().to_string(),
            }));
            if !model.converged() {
                return Err(CliError::NonConvergence(format!(
                    "solver hit max_passes = {} before meeting tol = {}",
                    spec.max_passes, spec.tol
                )));
            }
        }
        Command::Evaluate(args) => {
            let file: ModelFile = read_json(&args.model)?;
            let model = file.to_model()?;
            let data = load_for_model(&file, &args.data, &args.label_column)?;
            let data = file.preprocess.apply(&data)?;
            print_json(&json!({ "rows": data.len(), "accuracy": accuracy(&model, &data)? }));
        }
        Command::Sweep(args) => {
            let (run, recorded) = match &args.replay {
                Some(path) => {
                    let report: ExperimentReport = read_json(path)?;
                    (replay(&report)?, true)
                }
                None => {
                    let gammas = if args.gammas.is_empty() {
                        DEFAULT_GRID.to_vec()
                    } else {
                        args.gammas.clone()
                    };
                    (run_experiment(&args.dataset.spec(gammas)?)?, false)
                }
            };
            let report = &run.report;
            write_atomic(&args.out.join("report.json"), report.to_json().as_bytes())?;
            let timing: Vec<_> = report
                .rows
                .iter()
                .zip(&run.wall_times)
                .map(|(r, t)| json!({ "gamma": r.gamma, "wall_seconds": t }))
                .collect();
            write_json(&args.out.join("timing.json"), &timing)?;
            for (row, model) in report.rows.iter().zip(&run.models) {
                let file = ModelFile::new(
                    model,
                    &run.prepared.raw,
                    &run.prepared.preprocess,
                    Some(report.spec_hash.clone()),
                )?;
                write_json(
                    &args.out.join(format!("model_gamma_{}.json", row.gamma)),
                    &file,
                )?;
            }
            print_json(&json!({
                "spec_hash": report.spec_hash,
                "replayed": recorded,
                "selected_gamma": report.selected_gamma,
                "rows": report.rows,
            }));
            if !report.all_converged() {
                return Err(CliError::NonConvergence(
                    "at least one gamma did not converge".into(),
                ));
            }
        }
        Command::Boundary(args) => {
            let file: ModelFile = read_json(&args.model)?;
            let model = file.to_model()?;
            let data = load_for_model(&file, &args.data, &args.label_column)?;
            let data = file.preprocess.apply(&data)?;
            let bounds = padded_bounds(data.features())?;
            let grid = boundary_grid(&model, bounds, args.resolution)?;
            let rows = grid.iter().map(|p| {
                vec![
                    p.x1.to_string(),
                    p.x2.to_string(),
                    p.decision_value.to_string(),
                    file.class_names[p.label].clone(),
                ]
            });
            write_rows(&args.out, &["x1", "x2", "decision_value", "label"], rows)?;
            print_json(&json!({ "rows": grid.len(), "out": args.out.display().to_string() }));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
