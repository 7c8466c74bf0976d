//! Trained model, prediction and the on-disk model container.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Standardizer;
use crate::error::{LdlError, Result};
use crate::solver::{design_matrix, Transform};
use crate::types::{FeatureMatrix, Hyperparams, LabelDistributionMatrix, Variant};

pub const MODEL_FORMAT: &str = "lrldl-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct TlrldlModel {
    weights: DMatrix<f64>,
    /// Training-time instance map; never consulted by [`TlrldlModel::predict`].
    transform: Option<Transform>,
    variant: Variant,
    standardizer: Option<Standardizer>,
    bias: bool,
    input_dim: usize,
    hyperparams: Hyperparams,
}

impl TlrldlModel {
    pub fn new(
        weights: DMatrix<f64>,
        variant: Variant,
        standardizer: Option<Standardizer>,
        bias: bool,
        input_dim: usize,
        hyperparams: Hyperparams,
    ) -> Result<Self> {
        let expected = input_dim + usize::from(bias);
        if weights.ncols() != expected {
            return Err(LdlError::dims("weight columns", expected, weights.ncols()));
        }
        if weights.nrows() == 0 {
            return Err(LdlError::ShapeMismatch("model has no labels".into()));
        }
        if !weights.iter().all(|v| v.is_finite()) {
            return Err(LdlError::NonFinite { row: 0, col: 0 });
        }
        if let Some(s) = &standardizer {
            if s.dim() != input_dim {
                return Err(LdlError::dims("standardizer dimension", input_dim, s.dim()));
            }
        }
        Ok(TlrldlModel {
            weights,
            transform: None,
            variant,
            standardizer,
            bias,
            input_dim,
            hyperparams,
        })
    }

    pub(crate) fn with_transform(mut self, transform: Option<Transform>) -> Self {
        self.transform = transform;
        self
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn transform(&self) -> Option<&Transform> {
        self.transform.as_ref()
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn standardizer(&self) -> Option<&Standardizer> {
        self.standardizer.as_ref()
    }

    pub fn bias(&self) -> bool {
        self.bias
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    /// Feature dimension before bias augmentation.
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn n_labels(&self) -> usize {
        self.weights.nrows()
    }

    /// Raw linear output `W x̃` for one instance.
    pub fn decision(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(LdlError::dims(
                "feature vector length",
                self.input_dim,
                x.len(),
            ));
        }
        let mut z = match &self.standardizer {
            Some(s) => s.apply_vec(x)?,
            None => x.to_vec(),
        };
        if self.bias {
            z.push(1.0);
        }
        Ok(self
            .weights
            .row_iter()
            .map(|row| row.iter().zip(&z).map(|(w, v)| w * v).sum())
            .collect())
    }

    /// Predicted label distribution for one instance.
    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(project_to_simplex(&self.decision(x)?))
    }

    /// Predicted distributions for every row of `x`, as an `m × n` matrix.
    pub fn predict_matrix(&self, x: &FeatureMatrix) -> Result<LabelDistributionMatrix> {
        if x.d() != self.input_dim {
            return Err(LdlError::dims("feature dimension", self.input_dim, x.d()));
        }
        let z = design_matrix(x.as_matrix(), self.standardizer.as_ref(), self.bias)?;
        let mut raw = &self.weights * z.transpose();
        for mut col in raw.column_iter_mut() {
            let v: Vec<f64> = col.iter().copied().collect();
            col.copy_from_slice(&project_to_simplex(&v));
        }
        LabelDistributionMatrix::new(raw)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            variant: self.variant,
            hyperparams: self.hyperparams,
            bias: self.bias,
            input_dim: self.input_dim,
            standardizer: self.standardizer.clone(),
            weights: StoredMatrix::from(&self.weights),
        };
        serde_json::to_string_pretty(&file).map_err(|e| LdlError::ModelFormat(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| LdlError::ModelFormat(e.to_string()))?;
        if file.format != MODEL_FORMAT {
            return Err(LdlError::ModelFormat(format!(
                "expected format `{MODEL_FORMAT}`, found `{}`",
                file.format
            )));
        }
        if file.version != MODEL_VERSION {
            return Err(LdlError::ModelFormat(format!(
                "unsupported model version {} (this build reads {MODEL_VERSION})",
                file.version
            )));
        }
        let weights = file.weights.into_matrix()?;
        TlrldlModel::new(
            weights,
            file.variant,
            file.standardizer,
            file.bias,
            file.input_dim,
            file.hyperparams,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}

/// Clamps negative entries to zero and rescales to sum one; a vector with no
/// positive entry maps to the uniform distribution.
pub fn project_to_simplex(raw: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total > 0.0 && total.is_finite() {
        clamped.iter().map(|v| v / total).collect()
    } else {
        vec![1.0 / raw.len() as f64; raw.len()]
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    variant: Variant,
    hyperparams: Hyperparams,
    bias: bool,
    input_dim: usize,
    standardizer: Option<Standardizer>,
    weights: StoredMatrix,
}

/// Row-major matrix payload.
#[derive(Debug, Serialize, Deserialize)]
struct StoredMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for StoredMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        StoredMatrix {
            rows: m.nrows(),
            cols: m.ncols(),
            data: m.transpose().as_slice().to_vec(),
        }
    }
}

impl StoredMatrix {
    fn into_matrix(self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(LdlError::ModelFormat(format!(
                "weight payload has {} values for a {}x{} matrix",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}
