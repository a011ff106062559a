use super::fitness::f_score;
use super::{select_terminals, GpError, TrainingSet};
use crate::concept_graph::ConceptGraph;
use crate::query::{Matcher, SensitivityConfig};

/// Candidate thresholds for named entities (`c1`) and general concepts (`c2`).
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid {
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self {
            c1: vec![0.90, 0.95, 0.99],
            c2: vec![0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
        }
    }
}

struct TerminalRow {
    named_entity: bool,
    present: Vec<bool>,
    related: Vec<f64>,
}

/// Grid search for the thresholds maximizing the mean F-score of the
/// single-terminal queries over the training terminal set.
///
/// Ties go to the larger `c1`, then the larger `c2`. Returns the chosen
/// configuration and its score.
pub fn calibrate_thresholds(
    training: &TrainingSet,
    graph: &ConceptGraph,
    grid: &ThresholdGrid,
    terminal_cap: usize,
) -> Result<(SensitivityConfig, f64), GpError> {
    if grid.c1.is_empty() || grid.c2.is_empty() {
        return Err(GpError::Config("threshold grid is empty".into()));
    }
    training.ensure_non_degenerate()?;
    let terminals = select_terminals(training, terminal_cap)?;
    let relevant = training.relevant_count();

    let mut rows = Vec::with_capacity(terminals.len());
    for &w in &terminals {
        let mut present = Vec::with_capacity(training.len());
        let mut related = Vec::with_capacity(training.len());
        for (profile, _) in training.items() {
            let p = profile.contains(w);
            present.push(p);
            related.push(if p { 1.0 } else { graph.d_rel(w, profile)? });
        }
        rows.push(TerminalRow {
            named_entity: graph.is_named_entity(w)?,
            present,
            related,
        });
    }

    let mut best: Option<(SensitivityConfig, f64)> = None;
    for &c1 in &grid.c1 {
        for &c2 in &grid.c2 {
            let cfg = SensitivityConfig::new(Matcher::WikiRelatedness, c1, c2)?;
            let mut total = 0.0;
            for row in &rows {
                let threshold = cfg.threshold(row.named_entity);
                let (mut tp, mut retrieved) = (0, 0);
                for (i, (_, rel)) in training.items().iter().enumerate() {
                    if row.present[i] || row.related[i] > threshold {
                        retrieved += 1;
                        tp += *rel as usize;
                    }
                }
                total += f_score(tp, retrieved, relevant);
            }
            let score = total / rows.len() as f64;
            log::debug!("c1 = {c1}, c2 = {c2}: mean F {score:.6}");
            let better = match &best {
                None => true,
                Some((b, s)) => score > *s || (score == *s && (c1 > b.c1 || (c1 == b.c1 && c2 > b.c2))),
            };
            if better {
                best = Some((cfg, score));
            }
        }
    }
    Ok(best.expect("grid is non-empty"))
}
