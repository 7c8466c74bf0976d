//! Validated matrix types and hyperparameters shared by every module.
//!
//! Label-side matrices are stored label-major: a label distribution matrix is
//! `m × n` with one column per instance. Feature matrices are `n × d` with one
//! row per instance.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{LdlError, Result};

/// Columns whose sum is within this distance of 1 are accepted as-is.
pub const SIMPLEX_TOL: f64 = 1e-9;
/// Columns within this band (but outside [`SIMPLEX_TOL`]) are renormalized on load.
pub const RENORMALIZE_TOL: f64 = 1e-6;

fn check_finite(data: &DMatrix<f64>) -> Result<()> {
    for j in 0..data.ncols() {
        for i in 0..data.nrows() {
            if !data[(i, j)].is_finite() {
                return Err(LdlError::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// `n × d` instance features, one row per instance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(DMatrix<f64>);

impl FeatureMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(LdlError::ShapeMismatch(format!(
                "feature matrix must be at least 1x1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        check_finite(&data)?;
        Ok(FeatureMatrix(data))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn d(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Rows selected by `idx`, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix(self.0.select_rows(idx))
    }
}

/// `m × n` matrix whose columns are label distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelDistributionMatrix(DMatrix<f64>);

fn column_violation(data: &DMatrix<f64>, j: usize, tol: f64) -> Option<f64> {
    let col = data.column(j);
    let sum: f64 = col.iter().sum();
    let out_of_range = col.iter().any(|&v| !(0.0..=1.0).contains(&v));
    if out_of_range || (sum - 1.0).abs() > tol {
        Some(sum)
    } else {
        None
    }
}

fn simplex_error(bad: Vec<(usize, f64)>) -> LdlError {
    let (index, sum) = bad[0];
    LdlError::ColumnNotSimplex {
        index,
        sum,
        offending: bad.len(),
        columns: bad.iter().map(|&(j, _)| j).collect(),
    }
}

impl LabelDistributionMatrix {
    /// Strict validation: every entry in `[0, 1]`, every column sums to 1
    /// within [`SIMPLEX_TOL`].
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        check_finite(&data)?;
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(LdlError::ShapeMismatch(
                "label distribution matrix must be non-empty".into(),
            ));
        }
        let bad: Vec<(usize, f64)> = (0..data.ncols())
            .filter_map(|j| column_violation(&data, j, SIMPLEX_TOL).map(|s| (j, s)))
            .collect();
        if !bad.is_empty() {
            return Err(simplex_error(bad));
        }
        Ok(LabelDistributionMatrix(data))
    }

    /// Lenient validation used when reading data from disk: columns whose sum is
    /// off by at most [`RENORMALIZE_TOL`] are rescaled to sum to 1. Returns the
    /// indices of rescaled columns alongside the matrix.
    pub fn from_noisy(mut data: DMatrix<f64>) -> Result<(Self, Vec<usize>)> {
        check_finite(&data)?;
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(LdlError::ShapeMismatch(
                "label distribution matrix must be non-empty".into(),
            ));
        }
        let mut bad = Vec::new();
        let mut fixed = Vec::new();
        for j in 0..data.ncols() {
            if column_violation(&data, j, SIMPLEX_TOL).is_none() {
                continue;
            }
            match column_violation(&data, j, RENORMALIZE_TOL) {
                Some(sum) => bad.push((j, sum)),
                None => {
                    let sum: f64 = data.column(j).iter().sum();
                    data.column_mut(j).iter_mut().for_each(|v| *v /= sum);
                    fixed.push(j);
                }
            }
        }
        if !bad.is_empty() {
            return Err(simplex_error(bad));
        }
        if !fixed.is_empty() {
            log::warn!(
                "renormalized {} label distribution column(s) with rounding noise",
                fixed.len()
            );
        }
        Ok((LabelDistributionMatrix(data), fixed))
    }

    /// Number of labels.
    pub fn m(&self) -> usize {
        self.0.nrows()
    }

    /// Number of instances.
    pub fn n(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn select_columns(&self, idx: &[usize]) -> LabelDistributionMatrix {
        LabelDistributionMatrix(self.0.select_columns(idx))
    }
}

/// Checks a raw matrix against the simplex constraints and wraps it.
pub fn validate_distribution_matrix(data: DMatrix<f64>) -> Result<LabelDistributionMatrix> {
    LabelDistributionMatrix::new(data)
}

/// `m × n` binary relevance matrix produced by degradation.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLabelMatrix(DMatrix<f64>);

impl MultiLabelMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        for j in 0..data.ncols() {
            let mut any = false;
            for i in 0..data.nrows() {
                let v = data[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(LdlError::NotBinary {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                any |= v == 1.0;
            }
            if !any {
                return Err(LdlError::EmptyLabelSet(j));
            }
        }
        Ok(MultiLabelMatrix(data))
    }

    pub fn m(&self) -> usize {
        self.0.nrows()
    }

    pub fn n(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Number of relevant labels per instance.
    pub fn positives_per_instance(&self) -> Vec<usize> {
        self.0
            .column_iter()
            .map(|c| c.iter().filter(|&&v| v == 1.0).count())
            .collect()
    }
}

/// How a label distribution is turned into a multi-label set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Degradation {
    /// Add labels by descending degree until the selected mass exceeds `t`.
    Threshold { t: f64 },
    /// Keep the `k` labels with the highest degrees.
    TopK { k: usize },
}

impl Degradation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Degradation::Threshold { t } if !(t > 0.0 && t < 1.0) => {
                Err(LdlError::InvalidHyperparameter {
                    name: "threshold",
                    reason: format!("T must lie in the open interval (0, 1), got {t}"),
                })
            }
            Degradation::TopK { k: 0 } => Err(LdlError::InvalidHyperparameter {
                name: "topk",
                reason: "k must be at least 1".into(),
            }),
            _ => Ok(()),
        }
    }

    /// Validation that also needs the label count.
    pub fn validate_for(&self, m: usize) -> Result<()> {
        self.validate()?;
        if let Degradation::TopK { k } = *self {
            if k > m {
                return Err(LdlError::InvalidHyperparameter {
                    name: "topk",
                    reason: format!("k must satisfy 1 <= k <= m = {m}, got {k}"),
                });
            }
        }
        Ok(())
    }
}

impl Default for Degradation {
    fn default() -> Self {
        Degradation::Threshold { t: 0.5 }
    }
}

impl fmt::Display for Degradation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degradation::Threshold { t } => write!(f, "threshold:{t}"),
            Degradation::TopK { k } => write!(f, "topk:{k}"),
        }
    }
}

impl FromStr for Degradation {
    type Err = LdlError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            LdlError::InvalidArgument(format!(
                "degradation must be `threshold:T` or `topk:K`, got `{s}`"
            ))
        };
        let (kind, value) = s.split_once(':').ok_or_else(bad)?;
        let d = match kind.trim() {
            "threshold" => Degradation::Threshold {
                t: value.trim().parse().map_err(|_| bad())?,
            },
            "topk" => Degradation::TopK {
                k: value.trim().parse().map_err(|_| bad())?,
            },
            _ => return Err(bad()),
        };
        d.validate()?;
        Ok(d)
    }
}

/// Which objective [`crate::solver::fit`] minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Distribution fit plus low-rank auxiliary multi-label fit.
    Full,
    /// Nuclear norm placed directly on the distribution prediction.
    AblationA,
    /// Plain ridge regression, no label correlation.
    AblationB,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Full, Variant::AblationA, Variant::AblationB];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::AblationA => "ablation-a",
            Variant::AblationB => "ablation-b",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = LdlError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "full" => Ok(Variant::Full),
            "ablation-a" => Ok(Variant::AblationA),
            "ablation-b" => Ok(Variant::AblationB),
            other => Err(LdlError::InvalidArgument(format!(
                "variant must be one of full, ablation-a, ablation-b; got `{other}`"
            ))),
        }
    }
}

/// Objective weights, degradation rule and ADMM schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Nuclear-norm weight.
    pub alpha: f64,
    /// Ridge weight, shared by `W` and `O`.
    pub lambda: f64,
    pub degradation: Degradation,
    /// Initial penalty.
    pub mu0: f64,
    pub mu_max: f64,
    pub mu_growth: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            alpha: 0.1,
            lambda: 0.1,
            degradation: Degradation::default(),
            mu0: 0.1,
            mu_max: 1e6,
            mu_growth: 1.1,
            max_iters: 200,
            tol: 1e-5,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let fail = |name, reason: &str| {
            Err(LdlError::InvalidHyperparameter {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return fail("alpha", "alpha must be finite and >= 0");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return fail("lambda", "lambda must be finite and >= 0");
        }
        if !(self.mu0 > 0.0 && self.mu0 <= self.mu_max && self.mu_max.is_finite()) {
            return fail("mu0", "requires 0 < mu0 <= mu_max < inf");
        }
        if !(self.mu_growth > 1.0 && self.mu_growth.is_finite()) {
            return fail("mu_growth", "growth factor must be > 1");
        }
        if self.max_iters == 0 {
            return fail("max_iters", "must be positive");
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return fail("tol", "must be positive");
        }
        self.degradation.validate()
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_degradation(mut self, degradation: Degradation) -> Self {
        self.degradation = degradation;
        self
    }
}
