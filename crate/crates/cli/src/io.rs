//! CSV ingestion and output, sidecar metadata, and atomic file writes.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dsvkernel::data::{LabeledDataset, Provenance};
use dsvkernel::kernel::{data_fingerprint, GramMatrix};
use dsvkernel::linalg::Matrix;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Writes via a temporary file in the same directory and a rename, so readers
/// never observe a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        CliError::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::format(path, e))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::format(path, e))
}

/// `data.csv` → `data.csv.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn parse_error(path: &Path, row: usize, column: &str, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        row,
        column: column.to_string(),
        message: message.into(),
    }
}

/// Orders class names numerically when every name is a number, otherwise
/// lexicographically. Index in the result is the class label.
fn ordered_classes(names: BTreeSet<String>) -> Vec<String> {
    let mut classes: Vec<String> = names.into_iter().collect();
    let numeric: Option<Vec<f64>> = classes.iter().map(|c| c.parse::<f64>().ok()).collect();
    if let Some(values) = numeric {
        let mut paired: Vec<(f64, String)> = values.into_iter().zip(classes).collect();
        paired.sort_by(|a, b| a.0.total_cmp(&b.0));
        classes = paired.into_iter().map(|(_, c)| c).collect();
    }
    classes
}

/// Loads a headed CSV. `features` defaults to every column except the label.
/// Error rows are file line numbers (the header is line 1).
pub fn load_csv(
    path: &Path,
    label_column: &str,
    features: Option<&[String]>,
) -> Result<LabeledDataset> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let hash = sha256_hex(&bytes);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(path, 1, "", e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            parse_error(
                path,
                1,
                name,
                format!("no such column (have: {})", headers.join(", ")),
            )
        })
    };
    let label_idx = find(label_column)?;
    let feature_names: Vec<String> = match features {
        Some(names) => names.to_vec(),
        None => headers
            .iter()
            .filter(|h| *h != label_column)
            .cloned()
            .collect(),
    };
    if feature_names.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no feature columns",
            path.display()
        )));
    }
    let mut feature_idx = Vec::with_capacity(feature_names.len());
    for name in &feature_names {
        if name == label_column {
            return Err(parse_error(
                path,
                1,
                name,
                "label column cannot also be a feature",
            ));
        }
        feature_idx.push(find(name)?);
    }

    let mut values = Vec::new();
    let mut raw_labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, row, "", e.to_string())
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        for (&j, name) in feature_idx.iter().zip(&feature_names) {
            let cell = &record[j];
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(path, row, name, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(
                    path,
                    row,
                    name,
                    format!("'{cell}' is not finite"),
                ));
            }
            values.push(v);
        }
        let label = &record[label_idx];
        if label.is_empty() {
            return Err(parse_error(path, row, label_column, "empty label"));
        }
        raw_labels.push(label.to_string());
    }
    if raw_labels.is_empty() {
        return Err(CliError::Invalid(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    let classes = ordered_classes(raw_labels.iter().cloned().collect());
    let labels = raw_labels
        .iter()
        .map(|l| {
            classes
                .iter()
                .position(|c| c == l)
                .expect("collected above")
        })
        .collect();
    let matrix = Matrix::from_vec(raw_labels.len(), feature_names.len(), values)?;
    Ok(LabeledDataset::new(
        matrix,
        labels,
        feature_names,
        classes,
        Provenance::File {
            path: path.display().to_string(),
            hash,
        },
    )?)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DatasetSidecar {
    pub rows: usize,
    pub features: Vec<String>,
    pub classes: Vec<String>,
    pub fingerprint: String,
    pub provenance: Provenance,
}

fn csv_bytes(header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Invalid(e.to_string());
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.into_inner().map_err(|e| CliError::Invalid(e.to_string()))
}

/// Feature columns then `label` (class names), plus a provenance sidecar.
pub fn write_dataset(path: &Path, data: &LabeledDataset) -> Result<()> {
    let mut header = data.feature_names().to_vec();
    header.push("label".to_string());
    let rows = data
        .features()
        .iter_rows()
        .zip(data.labels())
        .map(|(row, &l)| {
            let mut cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            cells.push(data.class_names()[l].clone());
            cells
        });
    write_atomic(path, &csv_bytes(&header, rows)?)?;
    write_json(
        &sidecar_path(path),
        &DatasetSidecar {
            rows: data.len(),
            features: data.feature_names().to_vec(),
            classes: data.class_names().to_vec(),
            fingerprint: format!("{:016x}", data_fingerprint(data.features())),
            provenance: data.provenance().clone(),
        },
    )
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GramSidecar {
    pub gamma: f64,
    pub dim: usize,
    pub fingerprint: String,
    pub min_eigenvalue: f64,
}

/// Square CSV with header `k0..k{n-1}`; γ and the data fingerprint go in the
/// sidecar.
pub fn write_gram(path: &Path, gram: &GramMatrix) -> Result<()> {
    let header: Vec<String> = (0..gram.dim()).map(|j| format!("k{j}")).collect();
    let rows = (0..gram.dim()).map(|i| gram.row(i).iter().map(|v| v.to_string()).collect());
    write_atomic(path, &csv_bytes(&header, rows)?)?;
    write_json(
        &sidecar_path(path),
        &GramSidecar {
            gamma: gram.gamma(),
            dim: gram.dim(),
            fingerprint: format!("{:016x}", gram.data_fingerprint()),
            min_eigenvalue: gram.min_eigenvalue()?,
        },
    )
}

pub fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<()> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_atomic(path, &csv_bytes(&header, rows)?)
}
