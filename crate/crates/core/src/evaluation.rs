//! Retrieval metrics and pairwise model comparison.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::DocumentProfile;
use crate::concept_graph::{ConceptGraph, GraphError};
use crate::gp::f_score;
use crate::query::WikiEsRule;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no documents to evaluate")]
    EmptyCorpus,
    #[error("document {0} has no relevance label")]
    MissingRelevance(String),
    #[error("need at least 2 reports to compare, got {0}")]
    TooFewReports(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Confusion counts with the metrics derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub f_score: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        Self {
            f_score: f_score(tp, tp + fp, tp + fn_),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            accuracy: ratio(tp + tn, tp + fp + fn_ + tn),
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: tn,
        }
    }

    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "f_score    {:.4}", self.f_score)?;
        writeln!(f, "precision  {:.4}", self.precision)?;
        writeln!(f, "recall     {:.4}", self.recall)?;
        writeln!(f, "accuracy   {:.4}", self.accuracy)?;
        write!(
            f,
            "tp {}  fp {}  fn {}  tn {}",
            self.true_positives, self.false_positives, self.false_negatives, self.true_negatives
        )
    }
}

/// Classifies every document with `rule` and tallies the outcome.
pub fn score<'a>(
    rule: &WikiEsRule,
    graph: &ConceptGraph,
    docs: impl IntoIterator<Item = (&'a DocumentProfile, Option<bool>)>,
) -> Result<MetricsReport, EvalError> {
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (profile, relevance) in docs {
        let relevant = relevance.ok_or_else(|| EvalError::MissingRelevance(profile.doc_id.clone()))?;
        match (rule.classify(graph, profile)?, relevant) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    if tp + fp + fn_ + tn == 0 {
        return Err(EvalError::EmptyCorpus);
    }
    Ok(MetricsReport::from_counts(tp, fp, fn_, tn))
}

/// Mean of per-topic metrics. Counts are summed.
pub fn macro_average(reports: &[MetricsReport]) -> Option<MetricsReport> {
    if reports.is_empty() {
        return None;
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    let sum = |f: fn(&MetricsReport) -> usize| reports.iter().map(f).sum::<usize>();
    Some(MetricsReport {
        f_score: mean(|r| r.f_score),
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        accuracy: mean(|r| r.accuracy),
        true_positives: sum(|r| r.true_positives),
        false_positives: sum(|r| r.false_positives),
        false_negatives: sum(|r| r.false_negatives),
        true_negatives: sum(|r| r.true_negatives),
    })
}

/// `100 (f_col - f_row) / f_row`, undefined when `f_row` is 0.
pub fn relative_difference(f_col: f64, f_row: f64) -> Option<f64> {
    (f_row != 0.0).then(|| 100.0 * (f_col - f_row) / f_row)
}

/// Pairwise relative F-score differences. `cells[row][col]` compares the
/// column model against the row model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonMatrix {
    pub names: Vec<String>,
    pub f_scores: Vec<f64>,
    pub cells: Vec<Vec<Option<f64>>>,
}

pub fn compare(reports: &[(String, MetricsReport)]) -> Result<ComparisonMatrix, EvalError> {
    if reports.len() < 2 {
        return Err(EvalError::TooFewReports(reports.len()));
    }
    let f_scores: Vec<f64> = reports.iter().map(|(_, r)| r.f_score).collect();
    let cells = f_scores
        .iter()
        .map(|&row| f_scores.iter().map(|&col| relative_difference(col, row)).collect())
        .collect();
    Ok(ComparisonMatrix {
        names: reports.iter().map(|(n, _)| n.clone()).collect(),
        f_scores,
        cells,
    })
}

impl ComparisonMatrix {
    pub fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.cells[row][col]
    }

    /// Plain-text table with right-aligned percentage cells; `-` marks
    /// undefined cells.
    pub fn to_table(&self) -> String {
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("model".to_string())
            .chain(self.names.iter().cloned())
            .collect()];
        for (name, cells) in self.names.iter().zip(&self.cells) {
            let mut row = vec![name.clone()];
            row.extend(cells.iter().map(|c| match c {
                Some(x) => format!("{x:.2}%"),
                None => "-".to_string(),
            }));
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| {
                    if c == 0 {
                        format!("{s:<w$}", w = widths[c])
                    } else {
                        format!("{s:>w$}", w = widths[c])
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Writes per-topic F-scores as tab-separated columns: the topic, one
/// F-score per model, then the relative difference of the first model
/// against each other model (`NA` when undefined).
pub fn write_breakdown(
    out: &mut impl Write,
    names: &[String],
    topics: &[(String, Vec<MetricsReport>)],
) -> io::Result<()> {
    let mut header = vec!["topic".to_string()];
    header.extend(names.iter().map(|n| format!("f_{n}")));
    if let Some((reference, others)) = names.split_first() {
        header.extend(others.iter().map(|n| format!("diff_{reference}_vs_{n}")));
    }
    writeln!(out, "{}", header.join("\t"))?;
    for (topic, reports) in topics {
        let mut row = vec![topic.clone()];
        row.extend(reports.iter().map(|r| format!("{:.6}", r.f_score)));
        if let Some((reference, others)) = reports.split_first() {
            row.extend(
                others
                    .iter()
                    .map(|r| match relative_difference(reference.f_score, r.f_score) {
                        Some(d) => format!("{d:.4}"),
                        None => "NA".to_string(),
                    }),
            );
        }
        writeln!(out, "{}", row.join("\t"))?;
    }
    Ok(())
}
