//! Versioned JSON form of a trained classifier together with the
//! preprocessing it expects.

use dsvkernel::data::{LabeledDataset, PcaModel, Scaler};
use dsvkernel::kernel::KernelConfig;
use dsvkernel::linalg::Matrix;
use dsvkernel::svm::{MulticlassModel, SvmModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MODEL_VERSION: u32 = 1;

/// Transformations fitted on the training split, applied in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub scaler: Option<Scaler>,
    pub pca: Option<PcaModel>,
}

impl Preprocess {
    pub fn fit(train: &LabeledDataset, standardize: bool, pca: Option<usize>) -> Result<Self> {
        let scaler = if standardize {
            Some(dsvkernel::data::standardize_fit(train)?)
        } else {
            None
        };
        let pca = match pca {
            Some(k) => {
                let scaled = match &scaler {
                    Some(s) => s.apply(train)?,
                    None => train.clone(),
                };
                Some(dsvkernel::data::pca_fit(&scaled, k)?)
            }
            None => None,
        };
        Ok(Self { scaler, pca })
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        let mut out = data.clone();
        if let Some(s) = &self.scaler {
            out = s.apply(&out)?;
        }
        if let Some(p) = &self.pca {
            out = dsvkernel::data::pca_transform(p, &out)?;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineFile {
    /// `+1` decisions vote for `classes[0]`.
    pub classes: [usize; 2],
    pub support_indices: Vec<usize>,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_m · y_m`.
    pub dual_coefficients: Vec<f64>,
    pub bias: f64,
    pub converged: bool,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub spec_hash: Option<String>,
    pub kernel: KernelConfig,
    pub c: f64,
    /// Names of the raw input columns, before preprocessing.
    pub input_features: Vec<String>,
    pub class_names: Vec<String>,
    pub preprocess: Preprocess,
    pub machines: Vec<MachineFile>,
}

impl ModelFile {
    pub fn new(
        model: &MulticlassModel,
        raw: &LabeledDataset,
        preprocess: &Preprocess,
        spec_hash: Option<String>,
    ) -> Result<Self> {
        let first = &model
            .machines
            .first()
            .ok_or_else(|| CliError::Invalid("model has no machines".into()))?
            .1;
        let machines = model
            .machines
            .iter()
            .map(|(_, m)| MachineFile {
                classes: m.classes,
                support_indices: m.support_indices.clone(),
                support_vectors: m.support_vectors.iter_rows().map(<[f64]>::to_vec).collect(),
                dual_coefficients: m.dual_coefficients(),
                bias: m.bias,
                converged: m.converged,
                objective: m.objective,
            })
            .collect();
        Ok(Self {
            version: MODEL_VERSION,
            spec_hash,
            kernel: first.kernel,
            c: first.c,
            input_features: raw.feature_names().to_vec(),
            class_names: raw.class_names().to_vec(),
            preprocess: preprocess.clone(),
            machines,
        })
    }

    pub fn to_model(&self) -> Result<MulticlassModel> {
        if self.version != MODEL_VERSION {
            return Err(CliError::Invalid(format!(
                "model format version {} is not supported (expected {MODEL_VERSION})",
                self.version
            )));
        }
        self.kernel.validate()?;
        let mut machines = Vec::with_capacity(self.machines.len());
        for m in &self.machines {
            let n = m.dual_coefficients.len();
            if m.support_vectors.len() != n || m.support_indices.len() != n {
                return Err(CliError::Invalid(
                    "machine has inconsistent support-vector lengths".into(),
                ));
            }
            if m.classes.iter().any(|c| *c >= self.class_names.len()) {
                return Err(CliError::Invalid(format!(
                    "machine classes {:?} out of range",
                    m.classes
                )));
            }
            let model = SvmModel {
                support_indices: m.support_indices.clone(),
                alphas: m.dual_coefficients.iter().map(|v| v.abs()).collect(),
                support_labels: m.dual_coefficients.iter().map(|v| v.signum()).collect(),
                support_vectors: Matrix::from_rows(&m.support_vectors)?,
                bias: m.bias,
                classes: m.classes,
                kernel: self.kernel,
                c: self.c,
                converged: m.converged,
                objective: m.objective,
            };
            model.validate()?;
            machines.push(((m.classes[0], m.classes[1]), model));
        }
        Ok(MulticlassModel {
            classes: (0..self.class_names.len()).collect(),
            machines,
        })
    }
}
