//! Dataset files, synthetic data, standardization and fold assignment.
//!
//! Two on-disk formats are supported. `MatrixText`:
//!
//! ```text
//! n d m
//! <n lines of d feature values>
//! <n lines of m distribution values>
//! ```
//!
//! and `Csv`: a header row `f1,..,fd,y1,..,ym` followed by one row per
//! instance. Both store one instance per row; distributions are transposed to
//! the label-major layout on load.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LdlError, Result};
use crate::types::{FeatureMatrix, LabelDistributionMatrix};

/// Environment variable naming the default directory searched for datasets.
pub const DATA_DIR_ENV: &str = "LDL_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataFormat {
    MatrixText,
    Csv,
}

impl DataFormat {
    /// Picks the format from a file extension, defaulting to `MatrixText`.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
            _ => DataFormat::MatrixText,
        }
    }
}

impl FromStr for DataFormat {
    type Err = LdlError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "matrix" | "txt" | "matrix-text" => Ok(DataFormat::MatrixText),
            "csv" => Ok(DataFormat::Csv),
            other => Err(LdlError::InvalidArgument(format!(
                "unknown data format `{other}` (expected matrix or csv)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub features: FeatureMatrix,
    pub distributions: LabelDistributionMatrix,
    pub label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: FeatureMatrix,
        distributions: LabelDistributionMatrix,
    ) -> Result<Self> {
        if features.n() != distributions.n() {
            return Err(LdlError::ShapeMismatch(format!(
                "{} feature rows but {} distribution columns",
                features.n(),
                distributions.n()
            )));
        }
        Ok(Dataset {
            name: name.into(),
            features,
            distributions,
            label_names: None,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n()
    }

    pub fn d(&self) -> usize {
        self.features.d()
    }

    pub fn m(&self) -> usize {
        self.distributions.m()
    }

    /// Instances selected by `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(idx),
            distributions: self.distributions.select_columns(idx),
            label_names: self.label_names.clone(),
        }
    }
}

/// Resolves a dataset path: existing paths are used as-is, otherwise the path
/// is looked up under `$LDL_DATA_DIR`.
pub fn resolve_path(path: &Path) -> PathBuf {
    if path.exists() || path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) => Path::new(&dir).join(path),
        None => path.to_path_buf(),
    }
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("dataset")
        .to_string()
}

pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let path = resolve_path(path);
    let text = fs::read_to_string(&path)?;
    let name = dataset_name(&path);
    match format {
        DataFormat::MatrixText => parse_matrix_text(&text, name),
        DataFormat::Csv => parse_csv(&text, name),
    }
}

fn parse_value(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| LdlError::ParseError {
        line,
        reason: format!("`{tok}` is not a number"),
    })
}

fn assemble(
    name: String,
    n: usize,
    d: usize,
    m: usize,
    feats: Vec<f64>,
    dists: Vec<f64>,
) -> Result<Dataset> {
    let features = FeatureMatrix::new(DMatrix::from_row_slice(n, d, &feats))?;
    // rows are instances on disk; the label-major matrix is the transpose
    let raw = DMatrix::from_column_slice(m, n, &dists);
    let (distributions, _) = LabelDistributionMatrix::from_noisy(raw)?;
    Dataset::new(name, features, distributions)
}

pub fn parse_matrix_text(text: &str, name: impl Into<String>) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or(LdlError::ParseError {
        line: 1,
        reason: "missing `n d m` header".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>().map_err(|_| LdlError::ParseError {
                line: hl,
                reason: format!("header field `{t}` is not a nonnegative integer"),
            })
        })
        .collect::<Result<_>>()?;
    let [n, d, m] = dims[..] else {
        return Err(LdlError::ParseError {
            line: hl,
            reason: format!("header must have 3 fields (n d m), found {}", dims.len()),
        });
    };
    if n == 0 || d == 0 || m == 0 {
        return Err(LdlError::ShapeMismatch(format!(
            "header declares an empty dataset: n={n} d={d} m={m}"
        )));
    }

    let mut last_line = hl;
    let mut read_block = |rows: usize, width: usize, what: &str| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(rows * width);
        for r in 0..rows {
            let (ln, line) = lines.next().ok_or_else(|| LdlError::ParseError {
                line: last_line + 1,
                reason: format!("file ended before {what} row {} of {rows}", r + 1),
            })?;
            last_line = ln;
            let before = out.len();
            for tok in line.split_whitespace() {
                out.push(parse_value(tok, ln)?);
            }
            if out.len() - before != width {
                return Err(LdlError::ParseError {
                    line: ln,
                    reason: format!(
                        "{what} row has {} values, expected {width}",
                        out.len() - before
                    ),
                });
            }
        }
        Ok(out)
    };
    let feats = read_block(n, d, "feature")?;
    let dists = read_block(n, m, "distribution")?;
    if let Some((ln, _)) = lines.next() {
        return Err(LdlError::ParseError {
            line: ln,
            reason: "unexpected trailing data".into(),
        });
    }
    assemble(name.into(), n, d, m, feats, dists)
}

pub fn parse_csv(text: &str, name: impl Into<String>) -> Result<Dataset> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or(LdlError::ParseError {
        line: 1,
        reason: "missing header row".into(),
    })?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let d = cols.iter().filter(|c| c.starts_with('f')).count();
    let m = cols.iter().filter(|c| c.starts_with('y')).count();
    let well_formed = d > 0
        && m > 0
        && cols.len() == d + m
        && cols[..d].iter().all(|c| c.starts_with('f'))
        && cols[d..].iter().all(|c| c.starts_with('y'));
    if !well_formed {
        return Err(LdlError::ParseError {
            line: hl,
            reason: "header must list feature columns f1..fd followed by label columns y1..ym"
                .into(),
        });
    }
    let mut feats = Vec::new();
    let mut dists = Vec::new();
    let mut n = 0;
    for (ln, line) in lines {
        let vals: Vec<f64> = line
            .split(',')
            .map(|t| parse_value(t.trim(), ln))
            .collect::<Result<_>>()?;
        if vals.len() != d + m {
            return Err(LdlError::ParseError {
                line: ln,
                reason: format!("row has {} values, expected {}", vals.len(), d + m),
            });
        }
        feats.extend_from_slice(&vals[..d]);
        dists.extend_from_slice(&vals[d..]);
        n += 1;
    }
    if n == 0 {
        return Err(LdlError::ParseError {
            line: hl + 1,
            reason: "no data rows".into(),
        });
    }
    assemble(name.into(), n, d, m, feats, dists)
}

/// 17 significant digits: enough to round-trip every `f64`.
pub(crate) fn fmt_exact(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_matrix_text(ds: &Dataset) -> String {
    let x = ds.features.as_matrix();
    let dm = ds.distributions.as_matrix();
    let mut out = format!("{} {} {}\n", ds.n(), ds.d(), ds.m());
    for row in x.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt_exact(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    for col in dm.column_iter() {
        let line: Vec<String> = col.iter().map(|&v| fmt_exact(v)).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn to_csv(ds: &Dataset) -> String {
    let mut header: Vec<String> = (1..=ds.d()).map(|j| format!("f{j}")).collect();
    header.extend((1..=ds.m()).map(|j| format!("y{j}")));
    let mut out = header.join(",");
    out.push('\n');
    let x = ds.features.as_matrix();
    let dm = ds.distributions.as_matrix();
    for i in 0..ds.n() {
        let row: Vec<String> = x
            .row(i)
            .iter()
            .chain(dm.column(i).iter())
            .map(|&v| fmt_exact(v))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn save_dataset(ds: &Dataset, path: &Path, format: DataFormat) -> Result<()> {
    let text = match format {
        DataFormat::MatrixText => to_matrix_text(ds),
        DataFormat::Csv => to_csv(ds),
    };
    fs::write(path, text)?;
    Ok(())
}

/// Logit scale of the generating model. Large enough that one group usually
/// dominates an instance, so top-k label sets follow the groups while the
/// distributions themselves stay far from rank `r`.
const SYNTH_LOGIT_SCALE: f64 = 5.0;
/// Per-label deviation from the group prototype, relative to the prototype.
const SYNTH_WITHIN_GROUP: f64 = 0.3;

/// Synthetic data with `r` correlated label groups.
///
/// Labels are split into `r` contiguous groups; each label's weight row is
/// its group prototype plus a small private perturbation, so the generating
/// matrix `W*` has `r`-dimensional dominant row structure. Features are
/// standard normal, logits are `W* X^T` plus Gaussian noise and each column is
/// softmax-normalized.
pub fn synth_lowrank(
    n: usize,
    d: usize,
    m: usize,
    r: usize,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 || d == 0 || m == 0 {
        return Err(LdlError::InvalidArgument(format!(
            "synthetic sizes must be positive: n={n} d={d} m={m}"
        )));
    }
    if r == 0 || r > m.min(n) {
        return Err(LdlError::InvalidArgument(format!(
            "rank r must satisfy 1 <= r <= min(m, n) = {}, got {r}",
            m.min(n)
        )));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(LdlError::InvalidArgument(format!(
            "noise must be finite and >= 0, got {noise}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = |rows: usize, cols: usize| -> DMatrix<f64> {
        // row-major fill keeps the draw order independent of storage layout
        let v: Vec<f64> = (0..rows * cols)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        DMatrix::from_row_slice(rows, cols, &v)
    };
    let inv_sqrt_d = 1.0 / (d as f64).sqrt();
    let prototypes = normal(r, d) * inv_sqrt_d;
    let spread = normal(m, d) * inv_sqrt_d;
    let weights = DMatrix::from_fn(m, d, |j, k| {
        let group = j * r / m;
        SYNTH_LOGIT_SCALE * (prototypes[(group, k)] + SYNTH_WITHIN_GROUP * spread[(j, k)])
    });
    let x = normal(n, d);
    let logits = &weights * x.transpose() + normal(m, n) * noise;
    let mut dist = logits;
    for mut col in dist.column_iter_mut() {
        let max = col.max();
        col.apply(|v| *v = (*v - max).exp());
        let s = col.sum();
        col /= s;
    }
    let ds = Dataset::new(
        format!("synth-n{n}-d{d}-m{m}-r{r}-s{seed}"),
        FeatureMatrix::new(x)?,
        LabelDistributionMatrix::from_noisy(dist)?.0,
    )?;
    Ok(ds)
}

/// Assignment of instances to cross-validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// Instance indices of fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == f)
            .collect()
    }

    /// Instance indices outside fold `f`, ascending.
    pub fn train_indices(&self, f: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != f)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &a in &self.assignments {
            sizes[a] += 1;
        }
        sizes
    }
}

/// Shuffles `0..n` with a seeded RNG and deals instances round-robin, so the
/// first `n mod k` folds get one extra instance.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(LdlError::InvalidArgument(format!(
            "k must be >= 2, got {k}"
        )));
    }
    if n < k {
        return Err(LdlError::InvalidArgument(format!(
            "cannot split {n} instances into {k} folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan {
        k,
        seed,
        assignments,
    })
}

/// Per-feature z-scoring fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of every column. Columns whose
    /// spread is negligible relative to their magnitude get `std = 0`.
    pub fn fit(x: &DMatrix<f64>) -> Standardizer {
        let n = x.nrows() as f64;
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.column_iter() {
            let mu = col.sum() / n;
            let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n;
            let sd = var.sqrt();
            mean.push(mu);
            std.push(if sd <= 1e-12 * mu.abs().max(1.0) {
                0.0
            } else {
                sd
            });
        }
        Standardizer { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Zero-variance features map to 0.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x.ncols() != self.dim() {
            return Err(LdlError::dims("feature dimension", self.dim(), x.ncols()));
        }
        Ok(DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| {
            if self.std[j] == 0.0 {
                0.0
            } else {
                (x[(i, j)] - self.mean[j]) / self.std[j]
            }
        }))
    }

    pub fn apply_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(LdlError::dims("feature dimension", self.dim(), x.len()));
        }
        Ok(x.iter()
            .enumerate()
            .map(|(j, &v)| {
                if self.std[j] == 0.0 {
                    0.0
                } else {
                    (v - self.mean[j]) / self.std[j]
                }
            })
            .collect())
    }
}

/// Fits a standardizer on `train` and applies it to both matrices.
pub fn standardize(
    train: &DMatrix<f64>,
    test: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, Standardizer)> {
    let s = Standardizer::fit(train);
    Ok((s.apply(train)?, s.apply(test)?, s))
}
