//! Cross-validation, nested grid search, ablation and sensitivity sweeps.
//!
//! Every routine is deterministic given its seed. Work items may run in
//! parallel; results are always collected in a fixed (variant, fold, cell)
//! order.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{kfold, Dataset};
use crate::error::{LdlError, Result};
use crate::metrics::{evaluate, mean_std, EvalReport, Metric};
use crate::solver::{fit_with, FitOptions};
use crate::types::{Degradation, Hyperparams, Variant};

/// Candidate values for `alpha` and `lambda`.
pub const STANDARD_GRID: [f64; 7] = [0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 10.0];
/// Candidate thresholds for threshold degradation.
pub const THRESHOLD_GRID: [f64; 5] = [0.1, 0.2, 0.3, 0.4, 0.5];

/// Hyperparameter search space. Empty lists keep the base value.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Grid {
    pub alphas: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub degradations: Vec<Degradation>,
}

impl Grid {
    /// `alpha` and `lambda` over the seven standard candidates.
    pub fn standard() -> Grid {
        Grid {
            alphas: STANDARD_GRID.to_vec(),
            lambdas: STANDARD_GRID.to_vec(),
            degradations: Vec::new(),
        }
    }

    /// Candidate settings for `variant`, in row-major (alpha, lambda,
    /// degradation) order. Parameters the variant ignores are not expanded.
    pub fn cells(&self, base: &Hyperparams, variant: Variant) -> Vec<Hyperparams> {
        let or_base = |v: &Vec<f64>, b: f64| if v.is_empty() { vec![b] } else { v.clone() };
        let alphas = match variant {
            Variant::AblationB => vec![base.alpha],
            _ => or_base(&self.alphas, base.alpha),
        };
        let lambdas = or_base(&self.lambdas, base.lambda);
        let degs = match variant {
            Variant::Full if !self.degradations.is_empty() => self.degradations.clone(),
            _ => vec![base.degradation],
        };
        let mut out = Vec::with_capacity(alphas.len() * lambdas.len() * degs.len());
        for &a in &alphas {
            for &l in &lambdas {
                for &g in &degs {
                    out.push(Hyperparams {
                        alpha: a,
                        lambda: l,
                        degradation: g,
                        ..*base
                    });
                }
            }
        }
        out
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| LdlError::InvalidArgument(format!("`{t}` is not a number")))
        })
        .collect()
}

/// `alpha=0.01,0.1;lambda=0.1,1;degrade=threshold:0.3,topk:2`, or
/// `standard` for the seven-value alpha/lambda grid.
impl FromStr for Grid {
    type Err = LdlError;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim() == "standard" {
            return Ok(Grid::standard());
        }
        let mut g = Grid::default();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, values) = part.split_once('=').ok_or_else(|| {
                LdlError::InvalidArgument(format!("grid entry `{part}` must look like key=v1,v2"))
            })?;
            match key.trim() {
                "alpha" => g.alphas = parse_list(values)?,
                "lambda" => g.lambdas = parse_list(values)?,
                "degrade" => {
                    g.degradations = values
                        .split(',')
                        .map(|v| v.trim().parse())
                        .collect::<Result<_>>()?
                }
                other => {
                    return Err(LdlError::InvalidArgument(format!(
                        "unknown grid key `{other}` (expected alpha, lambda or degrade)"
                    )))
                }
            }
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    /// Folds of the inner split used for tuning on each outer training set.
    pub inner_folds: usize,
    /// Measure minimized (or maximized, for similarities) during tuning.
    pub selection_metric: Metric,
    pub fit_options: FitOptions,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: 42,
            inner_folds: 5,
            selection_metric: Metric::Kl,
            fit_options: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub report: EvalReport,
    pub hyperparams: Hyperparams,
    pub converged: bool,
    pub iterations: usize,
}

/// Cross-validated scores of one variant.
#[derive(Debug, Clone)]
pub struct VariantSummary {
    pub dataset: String,
    pub variant: Variant,
    pub folds: Vec<FoldOutcome>,
    /// Mean over folds, [`Metric::ALL`] order.
    pub mean: [f64; 6],
    /// Sample standard deviation over folds.
    pub std: [f64; 6],
}

impl VariantSummary {
    fn new(dataset: String, variant: Variant, folds: Vec<FoldOutcome>) -> Self {
        let mut mean = [0.0; 6];
        let mut std = [0.0; 6];
        for (k, m) in Metric::ALL.iter().enumerate() {
            let vals: Vec<f64> = folds.iter().map(|f| f.report.get(*m)).collect();
            (mean[k], std[k]) = mean_std(&vals);
        }
        VariantSummary {
            dataset,
            variant,
            folds,
            mean,
            std,
        }
    }

    pub fn get(&self, m: Metric) -> f64 {
        self.mean[m.index()]
    }

    pub fn unconverged_folds(&self) -> usize {
        self.folds.iter().filter(|f| !f.converged).count()
    }
}

/// Fits on `train` and scores on `test`.
pub fn train_and_score(
    train: &Dataset,
    test: &Dataset,
    hp: &Hyperparams,
    variant: Variant,
    opts: FitOptions,
) -> Result<FoldOutcome> {
    let res = fit_with(&train.features, &train.distributions, hp, variant, opts)?;
    let pred = res.model.predict_matrix(&test.features)?;
    Ok(FoldOutcome {
        report: evaluate(&test.distributions, &pred)?,
        hyperparams: *hp,
        converged: res.converged,
        iterations: res.iterations_run,
    })
}

fn derive_seed(seed: u64, salt: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Picks the grid cell with the best mean inner-CV score; ties go to the
/// earliest cell. Cells whose fits fail are skipped.
pub fn select_hyperparams(
    train: &Dataset,
    cells: &[Hyperparams],
    variant: Variant,
    cfg: &CvConfig,
    seed: u64,
) -> Result<Hyperparams> {
    if cells.len() == 1 {
        return Ok(cells[0]);
    }
    let plan = kfold(train.n(), cfg.inner_folds, seed)?;
    let splits: Vec<(Dataset, Dataset)> = (0..plan.k)
        .map(|f| {
            (
                train.subset(&plan.train_indices(f)),
                train.subset(&plan.test_indices(f)),
            )
        })
        .collect();
    let metric = cfg.selection_metric;
    let scores: Vec<Result<f64>> = cells
        .par_iter()
        .map(|hp| {
            let mut total = 0.0;
            for (tr, te) in &splits {
                total += train_and_score(tr, te, hp, variant, cfg.fit_options)?
                    .report
                    .get(metric);
            }
            Ok(total / splits.len() as f64)
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    let mut last_err = None;
    for (i, s) in scores.into_iter().enumerate() {
        match s {
            Ok(v) if v.is_finite() => {
                let better = match best {
                    None => true,
                    Some((_, b)) if metric.higher_is_better() => v > b,
                    Some((_, b)) => v < b,
                };
                if better {
                    best = Some((i, v));
                }
            }
            Ok(_) => {}
            Err(e) => {
                log::warn!("grid cell {:?} failed during tuning: {e}", cells[i]);
                last_err = Some(e);
            }
        }
    }
    match (best, last_err) {
        (Some((i, _)), _) => Ok(cells[i]),
        (None, Some(e)) => Err(e),
        (None, None) => Err(LdlError::InvalidArgument("no usable grid cell".into())),
    }
}

/// k-fold cross-validation of each variant. With a `grid`, hyperparameters
/// are re-tuned on every outer training split by inner cross-validation;
/// otherwise `base` is used throughout.
pub fn cross_validate(
    ds: &Dataset,
    base: &Hyperparams,
    variants: &[Variant],
    grid: Option<&Grid>,
    cfg: &CvConfig,
) -> Result<Vec<VariantSummary>> {
    base.validate()?;
    let plan = kfold(ds.n(), cfg.folds, cfg.seed)?;
    let jobs: Vec<(Variant, usize)> = variants
        .iter()
        .flat_map(|&v| (0..plan.k).map(move |f| (v, f)))
        .collect();
    let outcomes: Vec<Result<FoldOutcome>> = jobs
        .par_iter()
        .map(|&(variant, f)| {
            let train = ds.subset(&plan.train_indices(f));
            let test = ds.subset(&plan.test_indices(f));
            let hp = match grid {
                Some(g) => {
                    let cells = g.cells(base, variant);
                    let seed = derive_seed(cfg.seed, f as u64 + 1);
                    select_hyperparams(&train, &cells, variant, cfg, seed)?
                }
                None => *base,
            };
            train_and_score(&train, &test, &hp, variant, cfg.fit_options)
        })
        .collect();
    let mut outcomes = outcomes.into_iter();
    let mut out = Vec::with_capacity(variants.len());
    for &v in variants {
        let folds = outcomes.by_ref().take(plan.k).collect::<Result<Vec<_>>>()?;
        out.push(VariantSummary::new(ds.name.clone(), v, folds));
    }
    Ok(out)
}

/// Full model against both ablations under identical folds.
pub fn ablate(
    ds: &Dataset,
    base: &Hyperparams,
    grid: Option<&Grid>,
    cfg: &CvConfig,
) -> Result<Vec<VariantSummary>> {
    cross_validate(ds, base, &Variant::ALL, grid, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Alpha,
    Lambda,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Alpha => "alpha",
            SweepParam::Lambda => "lambda",
        }
    }
}

impl FromStr for SweepParam {
    type Err = LdlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(SweepParam::Alpha),
            "lambda" => Ok(SweepParam::Lambda),
            other => Err(LdlError::InvalidArgument(format!(
                "sweep parameter must be alpha or lambda, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub value: f64,
    pub summary: VariantSummary,
}

/// Cross-validated scores of one variant as `param` moves over `values`, all
/// other settings fixed at `base`.
pub fn sweep(
    ds: &Dataset,
    base: &Hyperparams,
    variant: Variant,
    param: SweepParam,
    values: &[f64],
    cfg: &CvConfig,
) -> Result<Vec<SweepPoint>> {
    values
        .iter()
        .map(|&value| {
            let hp = match param {
                SweepParam::Alpha => base.with_alpha(value),
                SweepParam::Lambda => base.with_lambda(value),
            };
            let mut s = cross_validate(ds, &hp, &[variant], None, cfg)?;
            Ok(SweepPoint {
                value,
                summary: s.remove(0),
            })
        })
        .collect()
}

/// Number of measures on which each summary is (jointly) best.
pub fn win_counts(summaries: &[VariantSummary]) -> Vec<usize> {
    let mut wins = vec![0; summaries.len()];
    for m in Metric::ALL {
        let vals: Vec<f64> = summaries.iter().map(|s| s.get(m)).collect();
        let best = if m.higher_is_better() {
            vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        } else {
            vals.iter().copied().fold(f64::INFINITY, f64::min)
        };
        for (w, v) in wins.iter_mut().zip(&vals) {
            if *v == best {
                *w += 1;
            }
        }
    }
    wins
}
