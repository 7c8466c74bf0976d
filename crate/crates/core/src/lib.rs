//! Label distribution learning that captures low-rank label correlation on an
//! auxiliary multi-label task instead of on the (typically full-rank) label
//! distribution matrix itself.
//!
//! The pipeline: degrade each training distribution to a multi-label set
//! ([`degrade`]), then jointly fit a linear distribution regressor `W` and an
//! instance map `O` whose multi-label prediction `W Xᵀ O` carries a
//! nuclear-norm penalty, solved by ADMM ([`solver`]). Predictions use `W`
//! alone and are projected onto the probability simplex ([`model`]).

pub mod data;
pub mod degrade;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod report;
pub mod solver;
pub mod types;

pub use data::{
    kfold, load_dataset, standardize, synth_lowrank, DataFormat, Dataset, FoldPlan, Standardizer,
};
pub use degrade::{degrade, threshold_degrade, topk_degrade};
pub use error::{LdlError, Result};
pub use metrics::{evaluate, EvalReport, Metric};
pub use model::{project_to_simplex, TlrldlModel};
pub use solver::{fit, fit_with, FitOptions, FitResult, SolverState, Transform};
pub use types::{
    validate_distribution_matrix, Degradation, FeatureMatrix, Hyperparams, LabelDistributionMatrix,
    MultiLabelMatrix, Variant,
};

pub use nalgebra::DMatrix;
