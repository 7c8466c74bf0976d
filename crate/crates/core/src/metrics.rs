//! The six label distribution measures and per-dataset aggregation.
//!
//! Conventions: terms of Clark and Canberra with `d_j + p_j = 0` count as 0;
//! KL smooths the prediction by clamping below at [`KL_EPS`] and
//! renormalizing, and terms with `d_j = 0` count as 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LdlError, Result};
use crate::types::LabelDistributionMatrix;

pub const KL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Metric {
    Chebyshev,
    Clark,
    Canberra,
    Kl,
    Cosine,
    Intersection,
}

impl Metric {
    pub const ALL: [Metric; 6] = [
        Metric::Chebyshev,
        Metric::Clark,
        Metric::Canberra,
        Metric::Kl,
        Metric::Cosine,
        Metric::Intersection,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Chebyshev => "chebyshev",
            Metric::Clark => "clark",
            Metric::Canberra => "canberra",
            Metric::Kl => "kl",
            Metric::Cosine => "cosine",
            Metric::Intersection => "intersection",
        }
    }

    /// `true` for the two similarity measures.
    pub fn higher_is_better(&self) -> bool {
        matches!(self, Metric::Cosine | Metric::Intersection)
    }

    pub fn index(&self) -> usize {
        Metric::ALL.iter().position(|m| m == self).unwrap()
    }

    pub fn eval(&self, d: &[f64], p: &[f64]) -> Result<f64> {
        match self {
            Metric::Chebyshev => chebyshev(d, p),
            Metric::Clark => clark(d, p),
            Metric::Canberra => canberra(d, p),
            Metric::Kl => kl(d, p),
            Metric::Cosine => cosine(d, p),
            Metric::Intersection => intersection(d, p),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Metric {
    type Err = LdlError;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| LdlError::InvalidArgument(format!("unknown metric `{s}`")))
    }
}

fn same_len(d: &[f64], p: &[f64]) -> Result<()> {
    if d.len() != p.len() {
        return Err(LdlError::dims("distribution length", d.len(), p.len()));
    }
    Ok(())
}

pub fn chebyshev(d: &[f64], p: &[f64]) -> Result<f64> {
    same_len(d, p)?;
    Ok(d.iter()
        .zip(p)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

pub fn clark(d: &[f64], p: &[f64]) -> Result<f64> {
    same_len(d, p)?;
    let s: f64 = d
        .iter()
        .zip(p)
        .map(|(a, b)| {
            let den = a + b;
            if den == 0.0 {
                0.0
            } else {
                ((a - b) / den).powi(2)
            }
        })
        .sum();
    Ok(s.sqrt())
}

pub fn canberra(d: &[f64], p: &[f64]) -> Result<f64> {
    same_len(d, p)?;
    Ok(d.iter()
        .zip(p)
        .map(|(a, b)| {
            let den = a + b;
            if den == 0.0 {
                0.0
            } else {
                (a - b).abs() / den
            }
        })
        .sum())
}

/// `KL(d ‖ p) = Σ d_j ln(d_j / p_j)` with the smoothing described above.
pub fn kl(d: &[f64], p: &[f64]) -> Result<f64> {
    same_len(d, p)?;
    let clamped: Vec<f64> = p.iter().map(|&v| v.max(KL_EPS)).collect();
    let total: f64 = clamped.iter().sum();
    Ok(d.iter()
        .zip(&clamped)
        .map(|(&a, &b)| {
            if a > 0.0 {
                a * (a / (b / total)).ln()
            } else {
                0.0
            }
        })
        .sum())
}

pub fn cosine(d: &[f64], p: &[f64]) -> Result<f64> {
    same_len(d, p)?;
    let dot: f64 = d.iter().zip(p).map(|(a, b)| a * b).sum();
    let nd = d.iter().map(|a| a * a).sum::<f64>().sqrt();
    let np = p.iter().map(|b| b * b).sum::<f64>().sqrt();
    Ok(dot / (nd * np))
}

pub fn intersection(d: &[f64], p: &[f64]) -> Result<f64> {
    same_len(d, p)?;
    Ok(d.iter().zip(p).map(|(a, b)| a.min(*b)).sum())
}

/// All six measures for one pair, in [`Metric::ALL`] order.
pub fn score_pair(d: &[f64], p: &[f64]) -> Result<[f64; 6]> {
    let mut out = [0.0; 6];
    for (slot, m) in out.iter_mut().zip(Metric::ALL) {
        *slot = m.eval(d, p)?;
    }
    Ok(out)
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub chebyshev: f64,
    pub clark: f64,
    pub canberra: f64,
    pub kl: f64,
    pub cosine: f64,
    pub intersection: f64,
    /// Sample standard deviation over instances, in [`Metric::ALL`] order.
    pub std: [f64; 6],
    pub n_evaluated: usize,
    /// Per-instance scores (`n` rows, [`Metric::ALL`] order).
    pub per_instance: Option<Vec<[f64; 6]>>,
}

impl EvalReport {
    pub fn get(&self, m: Metric) -> f64 {
        self.means()[m.index()]
    }

    pub fn means(&self) -> [f64; 6] {
        [
            self.chebyshev,
            self.clark,
            self.canberra,
            self.kl,
            self.cosine,
            self.intersection,
        ]
    }

    fn from_rows(rows: Vec<[f64; 6]>, keep: bool) -> EvalReport {
        let mut means = [0.0; 6];
        let mut std = [0.0; 6];
        for k in 0..6 {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            (means[k], std[k]) = mean_std(&col);
        }
        EvalReport {
            chebyshev: means[0],
            clark: means[1],
            canberra: means[2],
            kl: means[3],
            cosine: means[4],
            intersection: means[5],
            std,
            n_evaluated: rows.len(),
            per_instance: keep.then_some(rows),
        }
    }
}

fn per_instance_scores(
    truth: &LabelDistributionMatrix,
    pred: &LabelDistributionMatrix,
) -> Result<Vec<[f64; 6]>> {
    if truth.as_matrix().shape() != pred.as_matrix().shape() {
        return Err(LdlError::dims(
            "prediction shape",
            format!("{}x{}", truth.m(), truth.n()),
            format!("{}x{}", pred.m(), pred.n()),
        ));
    }
    truth
        .as_matrix()
        .column_iter()
        .zip(pred.as_matrix().column_iter())
        .map(|(d, p)| {
            let d: Vec<f64> = d.iter().copied().collect();
            let p: Vec<f64> = p.iter().copied().collect();
            score_pair(&d, &p)
        })
        .collect()
}

/// Averages every measure arithmetically over instances.
pub fn evaluate(
    truth: &LabelDistributionMatrix,
    pred: &LabelDistributionMatrix,
) -> Result<EvalReport> {
    Ok(EvalReport::from_rows(
        per_instance_scores(truth, pred)?,
        false,
    ))
}

/// Like [`evaluate`] but keeps the per-instance score matrix.
pub fn evaluate_detailed(
    truth: &LabelDistributionMatrix,
    pred: &LabelDistributionMatrix,
) -> Result<EvalReport> {
    Ok(EvalReport::from_rows(
        per_instance_scores(truth, pred)?,
        true,
    ))
}
