//! Per-cell summaries of a results file.

use std::collections::BTreeMap;

use serde::Serialize;

use super::results::{fmt_sig, ResultRow};
use crate::error::{Error, Result};
use crate::samplers::SamplerKind;
use crate::simbench::{GraphType, RunStatus};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub graph_type: String,
    pub p: usize,
    pub n: usize,
    pub runs: usize,
    pub failed: usize,
    pub mean_auc: f64,
    pub mean_mamse: f64,
    pub median_cost_seconds: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len();
    if m % 2 == 1 {
        xs[m / 2]
    } else {
        0.5 * (xs[m / 2 - 1] + xs[m / 2])
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Rounds to the printed precision so that text and JSON carry equal values.
fn sig(x: f64) -> f64 {
    fmt_sig(x).parse().expect("formatted float")
}

/// Mean AUC, mean MAMSE and median cost per (graph type, p, n, algorithm),
/// over the `ok` rows. Cells where every run failed are dropped.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryRow>> {
    let mut cells: BTreeMap<(GraphType, usize, usize, SamplerKind), (Vec<&ResultRow>, usize)> = BTreeMap::new();
    for r in rows {
        let cell = cells.entry((r.graph_type, r.p, r.n, r.algorithm)).or_default();
        match r.status {
            RunStatus::Ok => cell.0.push(r),
            RunStatus::Failed => cell.1 += 1,
        }
    }
    let out: Vec<SummaryRow> = cells
        .into_iter()
        .filter(|(_, (ok, _))| !ok.is_empty())
        .map(|((g, p, n, a), (ok, failed))| SummaryRow {
            algorithm: a.name().into(),
            graph_type: g.name().into(),
            p,
            n,
            runs: ok.len(),
            failed,
            mean_auc: sig(mean(&ok.iter().map(|r| r.auc).collect::<Vec<_>>())),
            mean_mamse: sig(mean(&ok.iter().map(|r| r.mamse).collect::<Vec<_>>())),
            median_cost_seconds: sig(median(ok.iter().map(|r| r.cost_seconds).collect())),
        })
        .collect();
    if out.is_empty() {
        return Err(Error::Empty("no successful runs to report".into()));
    }
    Ok(out)
}

pub fn to_text(rows: &[SummaryRow]) -> String {
    let head = ["graph_type", "p", "n", "algorithm", "runs", "failed", "mean_auc", "mean_mamse", "median_cost_s"];
    let body: Vec<[String; 9]> = rows
        .iter()
        .map(|r| {
            [
                r.graph_type.clone(),
                r.p.to_string(),
                r.n.to_string(),
                r.algorithm.clone(),
                r.runs.to_string(),
                r.failed.to_string(),
                fmt_sig(r.mean_auc),
                fmt_sig(r.mean_mamse),
                fmt_sig(r.median_cost_seconds),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = head.iter().map(|h| h.len()).collect();
    for row in &body {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(head.to_vec());
    for row in &body {
        out.push_str(&line(row.iter().map(|s| s.as_str()).collect()));
    }
    out
}

#[derive(Serialize)]
struct Report<'a> {
    format: &'static str,
    groups: &'a [SummaryRow],
}

pub fn to_json(rows: &[SummaryRow]) -> String {
    serde_json::to_string_pretty(&Report { format: "ggmsl-report v1", groups: rows }).expect("plain data") + "\n"
}
