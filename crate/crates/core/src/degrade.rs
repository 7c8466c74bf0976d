//! Label distribution to multi-label degradation.
//!
//! Both procedures rank labels by descending description degree; equal degrees
//! are ordered by lower label index first.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::types::{Degradation, LabelDistributionMatrix, MultiLabelMatrix};

fn descending_order(col: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..col.len()).collect();
    // sort_by is stable, so ties keep ascending index order
    idx.sort_by(|&a, &b| col[b].total_cmp(&col[a]));
    idx
}

/// Labels selected for one distribution by the cumulative-threshold rule.
fn threshold_column(col: &[f64], t: f64) -> Vec<usize> {
    let mut picked = Vec::new();
    let mut mass = 0.0;
    for j in descending_order(col) {
        picked.push(j);
        mass += col[j];
        if mass > t {
            break;
        }
    }
    picked
}

fn topk_column(col: &[f64], k: usize) -> Vec<usize> {
    let mut order = descending_order(col);
    order.truncate(k);
    order
}

fn build(d: &LabelDistributionMatrix, select: impl Fn(&[f64]) -> Vec<usize>) -> MultiLabelMatrix {
    let dm = d.as_matrix();
    let mut l = DMatrix::zeros(dm.nrows(), dm.ncols());
    for (i, col) in dm.column_iter().enumerate() {
        let col: Vec<f64> = col.iter().copied().collect();
        for j in select(&col) {
            l[(j, i)] = 1.0;
        }
    }
    MultiLabelMatrix::new(l).expect("degradation always selects at least one label")
}

/// Adds labels in descending degree order until the selected mass strictly
/// exceeds `t`. If rounding leaves the total mass at or below `t`, every label
/// is selected.
pub fn threshold_degrade(d: &LabelDistributionMatrix, t: f64) -> Result<MultiLabelMatrix> {
    Degradation::Threshold { t }.validate()?;
    Ok(build(d, |c| threshold_column(c, t)))
}

/// Keeps the `k` highest-degree labels of every instance.
pub fn topk_degrade(d: &LabelDistributionMatrix, k: usize) -> Result<MultiLabelMatrix> {
    Degradation::TopK { k }.validate_for(d.m())?;
    Ok(build(d, |c| topk_column(c, k)))
}

pub fn degrade(d: &LabelDistributionMatrix, how: Degradation) -> Result<MultiLabelMatrix> {
    match how {
        Degradation::Threshold { t } => threshold_degrade(d, t),
        Degradation::TopK { k } => topk_degrade(d, k),
    }
}
