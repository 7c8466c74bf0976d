//! CSV and Markdown emitters for evaluation and cross-validation results.
//!
//! Both emitters print every number with six significant digits so the two
//! formats always agree.

use std::fmt::Write as _;

use crate::experiment::{win_counts, SweepPoint, VariantSummary};
use crate::metrics::{EvalReport, Metric};

/// Fixed-point rendering with six significant digits.
pub fn sig6(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0.00000".to_string();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can bump the magnitude (e.g. 9.999995 -> 10.00000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
    let leading_zeros = s
        .trim_start_matches('-')
        .chars()
        .take_while(|&c| c == '0' || c == '.')
        .filter(|&c| c == '0')
        .count();
    if digits - leading_zeros > 6 && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "dataset,variant,metric,mean,std";
pub const SWEEP_CSV_HEADER: &str = "dataset,variant,param,value,metric,mean,std";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Long-format CSV: one row per (summary, metric).
pub fn summaries_csv(summaries: &[VariantSummary]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in summaries {
        for (k, m) in Metric::ALL.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                csv_field(&s.dataset),
                s.variant,
                m,
                sig6(s.mean[k]),
                sig6(s.std[k])
            );
        }
    }
    out
}

fn metric_header(out: &mut String, lead: &[&str]) {
    let mut cols: Vec<String> = lead.iter().map(|s| s.to_string()).collect();
    cols.extend(Metric::ALL.iter().map(|m| {
        let arrow = if m.higher_is_better() { "↑" } else { "↓" };
        format!("{m} {arrow}")
    }));
    let _ = writeln!(out, "| {} |", cols.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(cols.len()));
}

/// One row per summary with `mean ± std` cells, followed by a row counting
/// the measures on which each variant is best.
pub fn summaries_markdown(summaries: &[VariantSummary]) -> String {
    let mut out = String::new();
    metric_header(&mut out, &["dataset", "variant"]);
    for s in summaries {
        let cells: Vec<String> = (0..6)
            .map(|k| format!("{} ± {}", sig6(s.mean[k]), sig6(s.std[k])))
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} |",
            s.dataset,
            s.variant,
            cells.join(" | ")
        );
    }
    if summaries.len() > 1 {
        let wins = win_counts(summaries);
        let list: Vec<String> = summaries
            .iter()
            .zip(&wins)
            .map(|(s, w)| format!("{}: {w}", s.variant))
            .collect();
        let _ = writeln!(out, "\nbest-on-metric counts: {}", list.join(", "));
    }
    out
}

pub fn sweep_csv(param: &str, points: &[SweepPoint]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for p in points {
        let s = &p.summary;
        for (k, m) in Metric::ALL.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&s.dataset),
                s.variant,
                param,
                sig6(p.value),
                m,
                sig6(s.mean[k]),
                sig6(s.std[k])
            );
        }
    }
    out
}

pub fn sweep_markdown(param: &str, points: &[SweepPoint]) -> String {
    let mut out = String::new();
    metric_header(&mut out, &["dataset", "variant", param]);
    for p in points {
        let s = &p.summary;
        let cells: Vec<String> = (0..6)
            .map(|k| format!("{} ± {}", sig6(s.mean[k]), sig6(s.std[k])))
            .collect();
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} |",
            s.dataset,
            s.variant,
            sig6(p.value),
            cells.join(" | ")
        );
    }
    out
}

/// Single evaluation report as CSV (`std` is over instances).
pub fn report_csv(dataset: &str, variant: &str, r: &EvalReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (k, m) in Metric::ALL.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            csv_field(dataset),
            variant,
            m,
            sig6(r.means()[k]),
            sig6(r.std[k])
        );
    }
    out
}

pub fn report_markdown(dataset: &str, variant: &str, r: &EvalReport) -> String {
    let mut out = String::new();
    metric_header(&mut out, &["dataset", "variant"]);
    let cells: Vec<String> = (0..6)
        .map(|k| format!("{} ± {}", sig6(r.means()[k]), sig6(r.std[k])))
        .collect();
    let _ = writeln!(out, "| {dataset} | {variant} | {} |", cells.join(" | "));
    out
}
