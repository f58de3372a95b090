use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dsvkernel::data::{make_moons, LabeledDataset, Provenance};
use dsvkernel::kernel::KernelConfig;
use dsvkernel::linalg::Matrix;
use dsvkernel::svm::{accuracy, decision_value, predict_multiclass, train_multiclass, SvmConfig};
use dsvkernel_cli::boundary::{boundary_grid, padded_bounds};
use dsvkernel_cli::error::CliError;
use dsvkernel_cli::experiment::{
    replay, run_experiment, select_gamma, sweep, DatasetSpec, ExperimentSpec, GeneratorKind,
    ReportRow,
};
use dsvkernel_cli::io::{load_csv, sidecar_path, write_dataset, DatasetSidecar};
use dsvkernel_cli::model::{ModelFile, Preprocess};
use dsvkernel_cli::simulate::simulate_overlap;
use serde_json::Value;

fn data_file(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dsvkernel"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn row(gamma: f64, test_acc: f64) -> ReportRow {
    ReportRow {
        gamma,
        train_acc: 1.0,
        test_acc,
        n_sv: 1,
        converged: true,
        is_baseline: gamma == 1.0,
        baseline_delta: 0.0,
    }
}

#[test]
fn benchmark_files_load() {
    let iris = load_csv(&data_file("iris.csv"), "species", None).unwrap();
    assert_eq!(
        (iris.len(), iris.n_features(), iris.n_classes()),
        (150, 4, 3)
    );
    assert_eq!(iris.class_counts(), vec![50, 50, 50]);
    let diabetes = load_csv(&data_file("diabetes.csv"), "Outcome", None).unwrap();
    assert_eq!(
        (diabetes.len(), diabetes.n_features(), diabetes.n_classes()),
        (768, 8, 2)
    );
    assert_eq!(diabetes.class_names(), &["0".to_string(), "1".to_string()]);
    assert_eq!(diabetes.class_counts(), vec![500, 268]);
    // same bytes, same provenance
    let again = load_csv(&data_file("diabetes.csv"), "Outcome", None).unwrap();
    assert_eq!(diabetes.provenance(), again.provenance());
}

#[test]
fn csv_errors_carry_context() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    let mut text = String::from("a,b,label\n");
    for i in 0..5 {
        text.push_str(&format!("{i},1.5,x\n"));
    }
    text.push_str("oops,2,y\n");
    fs::write(&path, &text).unwrap();
    match load_csv(&path, "label", None) {
        Err(CliError::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (7, "a")),
        other => panic!("expected parse error, got {other:?}"),
    }
    assert!(matches!(
        load_csv(&path, "nope", None),
        Err(CliError::Parse { row: 1, .. })
    ));
    assert!(matches!(
        load_csv(&path, "label", Some(&["zzz".to_string()])),
        Err(CliError::Parse { .. })
    ));

    fs::write(&path, "a,b,label\n1,2,x\n1,2\n").unwrap();
    assert!(matches!(
        load_csv(&path, "label", None),
        Err(CliError::Parse { row: 3, .. })
    ));
    assert!(matches!(
        load_csv(&dir.path().join("missing.csv"), "label", None),
        Err(CliError::Io { .. })
    ));
}

#[test]
fn dataset_roundtrip_with_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("moons.csv");
    let data = make_moons(40, 0.1, 4).unwrap();
    write_dataset(&path, &data).unwrap();
    let back = load_csv(&path, "label", None).unwrap();
    assert_eq!(back.features(), data.features());
    assert_eq!(back.labels(), data.labels());
    let side: DatasetSidecar =
        serde_json::from_slice(&fs::read(sidecar_path(&path)).unwrap()).unwrap();
    assert_eq!(side.provenance, *data.provenance());
    assert_eq!(side.rows, 40);
}

#[test]
fn simulate_records() {
    let same = simulate_overlap(0.3, 0.3, 0.4, 0.0, 64).unwrap();
    assert!((same.probability - 1.0).abs() <= 1e-12 && same.abs_error <= 1e-12);
    let coherent = simulate_overlap(0.0, 1.0, 0.0, 0.0, 64).unwrap();
    assert!((coherent.probability - (-1.0f64).exp()).abs() <= 1e-9);
    let squeezed = simulate_overlap(0.0, 0.5, 0.3, 0.0, 64).unwrap();
    assert!((squeezed.probability - (-(0.6f64).exp() * 0.25).exp()).abs() <= 1e-6);
    assert!(squeezed.abs_error <= 1e-6);
    assert!(simulate_overlap(0.0, 1.0, 1.5, 0.0, 64).is_err());
}

#[test]
fn gamma_selection_rule() {
    assert_eq!(select_gamma(&[row(1.0, 0.9)]), 1.0);
    assert_eq!(
        select_gamma(&[row(1.0, 0.8), row(0.8, 0.9), row(1.25, 0.9)]),
        1.25
    );
    assert_eq!(
        select_gamma(&[row(1.0, 0.8), row(1.25, 0.9), row(0.8, 0.9)]),
        1.25
    );
    assert_eq!(select_gamma(&[row(1.0, 0.9), row(0.5, 0.9)]), 1.0);
    assert_eq!(
        select_gamma(&[row(1.0, 0.8), row(0.1, 0.95), row(3.0, 0.9)]),
        0.1
    );
}

#[test]
fn experiment_rows_and_baseline() {
    let spec = ExperimentSpec::new(DatasetSpec::generator(GeneratorKind::Moons), vec![1.5], 2);
    let run = run_experiment(&spec).unwrap();
    let gammas: Vec<f64> = run.report.rows.iter().map(|r| r.gamma).collect();
    assert_eq!(gammas, vec![1.0, 1.5]);
    let base = run.report.baseline().clone();
    assert!(base.is_baseline);
    let r15 = run.report.row(1.5).unwrap();
    assert_eq!(r15.baseline_delta, r15.test_acc - base.test_acc);
    for r in &run.report.rows {
        assert!((0.0..=1.0).contains(&r.train_acc) && (0.0..=1.0).contains(&r.test_acc));
    }

    // the baseline row is what a standalone γ = 1 run gives
    let alone = run_experiment(&ExperimentSpec {
        gammas: vec![1.0],
        ..spec.clone()
    })
    .unwrap();
    assert_eq!(alone.report.rows, vec![base]);

    let one = sweep(&spec, &[1.0]).unwrap();
    assert_eq!(one.report.selected_gamma, 1.0);
    assert!(sweep(&spec, &[]).is_err());
    assert!(run_experiment(&ExperimentSpec {
        gammas: vec![-1.0],
        ..spec
    })
    .is_err());
}

#[test]
fn replay_detects_tampering() {
    let spec = ExperimentSpec::new(DatasetSpec::generator(GeneratorKind::Circles), vec![0.8], 1);
    let report = run_experiment(&spec).unwrap().report;
    replay(&report).unwrap();
    let mut forged = report.clone();
    forged.spec.c = 2.0;
    assert!(replay(&forged).is_err());
    let mut edited = report;
    edited.rows[0].test_acc = 0.0;
    assert!(replay(&edited).is_err());
}

fn two_point_model() -> dsvkernel::svm::MulticlassModel {
    let data = LabeledDataset::new(
        Matrix::from_rows(&[[-1.0, 0.0], [1.0, 0.0]]).unwrap(),
        vec![0, 1],
        vec!["x1".into(), "x2".into()],
        vec!["a".into(), "b".into()],
        Provenance::Inline,
    )
    .unwrap();
    train_multiclass(
        &data,
        &SvmConfig::new(KernelConfig::direct(1.0).unwrap()).with_c(10.0),
        0,
    )
    .unwrap()
}

#[test]
fn boundary_grid_geometry() {
    let model = two_point_model();
    let pts = Matrix::from_rows(&[[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    let bounds = padded_bounds(&pts).unwrap();
    assert_eq!(bounds, [(-1.2, 1.2), (-0.1, 1.1)]);
    let corners = boundary_grid(&model, bounds, 2).unwrap();
    let xy: Vec<(f64, f64)> = corners.iter().map(|p| (p.x1, p.x2)).collect();
    assert_eq!(xy, vec![(-1.2, -0.1), (1.2, -0.1), (-1.2, 1.1), (1.2, 1.1)]);

    // zero level set of the symmetric problem is the bisector x1 = 0
    let res = 41;
    let grid = boundary_grid(&model, [(-1.0, 1.0), (-1.0, 1.0)], res).unwrap();
    let cell = 2.0 / (res - 1) as f64 + 1e-12;
    for line in grid.chunks(res) {
        let flip = line
            .windows(2)
            .position(|w| w[0].label != w[1].label)
            .unwrap();
        assert!(line[flip].x1.abs() <= cell && line[flip + 1].x1.abs() <= cell);
    }
    assert!(boundary_grid(&model, bounds, 1).is_err());
    assert!(padded_bounds(&Matrix::zeros(3, 3)).is_err());
}

#[test]
fn boundary_grid_matches_predictions_on_lattice() {
    let spec = ExperimentSpec::new(DatasetSpec::generator(GeneratorKind::Moons), vec![1.5], 0);
    let run = run_experiment(&spec).unwrap();
    let model = &run.models[1];
    let bounds = padded_bounds(run.prepared.raw.features()).unwrap();
    let grid = boundary_grid(model, bounds, 200).unwrap();
    assert_eq!(grid.len(), 40_000);
    for p in grid.iter().step_by(97) {
        assert_eq!(predict_multiclass(model, &[p.x1, p.x2]).unwrap(), p.label);
        let v = decision_value(&model.machines[0].1, &[p.x1, p.x2]).unwrap();
        assert_eq!(v, p.decision_value);
    }
}

#[test]
fn model_file_roundtrip() {
    let spec = ExperimentSpec {
        standardize: true,
        ..ExperimentSpec::new(
            DatasetSpec::File {
                path: data_file("iris.csv").display().to_string(),
                label_column: "species".into(),
                features: None,
            },
            vec![0.5],
            0,
        )
    };
    let run = run_experiment(&spec).unwrap();
    let model = &run.models[1];
    let file = ModelFile::new(model, &run.prepared.raw, &run.prepared.preprocess, None).unwrap();
    let json = serde_json::to_string(&file).unwrap();
    let back: ModelFile = serde_json::from_str(&json).unwrap();
    let restored = back.to_model().unwrap();
    assert_eq!(
        accuracy(&restored, &run.prepared.test).unwrap(),
        run.report.row(0.5).unwrap().test_acc
    );
    assert_eq!(back.preprocess, run.prepared.preprocess);

    let mut wrong = back.clone();
    wrong.version = 99;
    assert!(wrong.to_model().is_err());
    assert_eq!(
        Preprocess::default().apply(&run.prepared.raw).unwrap(),
        run.prepared.raw
    );
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn command_line_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("moons.csv");
    let model = dir.path().join("model.json");
    let grid = dir.path().join("grid.csv");

    let out = stdout_json(&cli(&[
        "data",
        "generate",
        "--kind",
        "moons",
        "--seed",
        "3",
        "--out",
        path_str(&data),
    ]));
    assert_eq!(out["rows"], 300);
    assert!(sidecar_path(&data).exists());

    let out = stdout_json(&cli(&[
        "kernel", "eval", "--xp", "0,0", "--xq", "1,1", "--gamma", "1",
    ]));
    assert!((out["value"].as_f64().unwrap() - (-2.0f64).exp()).abs() < 1e-15);
    let out = stdout_json(&cli(&[
        "kernel",
        "eval",
        "--xp",
        "0",
        "--xq",
        "1",
        "--r",
        "0.4",
        "--theta",
        "1.5707963267948966",
    ]));
    assert!((out["gamma"].as_f64().unwrap() - (-0.8f64).exp()).abs() < 1e-12);

    let gram_path = dir.path().join("gram.csv");
    stdout_json(&cli(&[
        "kernel",
        "gram",
        "--data",
        path_str(&data),
        "--gamma",
        "1.5",
        "--out",
        path_str(&gram_path),
    ]));
    let text = fs::read_to_string(&gram_path).unwrap();
    assert_eq!(text.lines().count(), 301);

    let out = stdout_json(&cli(&["simulate", "overlap", "--xp", "0", "--xq", "1"]));
    assert!((out["probability"].as_f64().unwrap() - (-1.0f64).exp()).abs() < 1e-9);

    let out = stdout_json(&cli(&[
        "train",
        "--data",
        path_str(&data),
        "--gamma",
        "1.5",
        "--seed",
        "3",
        "--out",
        path_str(&model),
    ]));
    let test_acc = out["test_acc"].as_f64().unwrap();
    assert!(test_acc > 0.9);

    let out = stdout_json(&cli(&[
        "evaluate",
        "--model",
        path_str(&model),
        "--data",
        path_str(&data),
    ]));
    assert_eq!(out["rows"], 300);
    assert!(out["accuracy"].as_f64().unwrap() > 0.9);

    stdout_json(&cli(&[
        "boundary",
        "--model",
        path_str(&model),
        "--data",
        path_str(&data),
        "--resolution",
        "20",
        "--out",
        path_str(&grid),
    ]));
    let text = fs::read_to_string(&grid).unwrap();
    assert_eq!(text.lines().next(), Some("x1,x2,decision_value,label"));
    assert_eq!(text.lines().count(), 401);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let one_class = dir.path().join("one.csv");
    fs::write(&one_class, "a,label\n1,x\n2,x\n3,x\n4,x\n").unwrap();
    let out = cli(&[
        "sweep",
        "--data",
        path_str(&one_class),
        "--gamma",
        "1",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("class"));

    let out = cli(&[
        "simulate", "overlap", "--xp", "0", "--xq", "1", "--r", "1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = cli(&[
        "evaluate",
        "--model",
        path_str(&dir.path().join("none.json")),
        "--data",
        path_str(&one_class),
    ]);
    assert_eq!(out.status.code(), Some(4));

    let out = cli(&[
        "train",
        "--generator",
        "spirals",
        "--gamma",
        "1",
        "--c",
        "1000",
        "--tol",
        "1e-12",
        "--max-passes",
        "1",
        "--out",
        path_str(&dir.path().join("m.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));

    let out = cli(&["boundary", "--model", "x"]);
    assert_eq!(out.status.code(), Some(2));
}
