//! Concept link graph and link-overlap relatedness.
//!
//! Every concept carries the set of concepts that link *to* it. Two concepts
//! are related in proportion to how much those inlink sets overlap, using the
//! normalized-distance form familiar from Wikipedia link measures:
//!
//! ```text
//! dist = (ln max(|A|,|B|) - ln |A ∩ B|) / (ln |W| - ln min(|A|,|B|))
//! rel  = 1 - clamp(dist, 0, 1)
//! ```
//!
//! where `|W|` is the number of concepts in the graph.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotator::DocumentProfile;
use crate::text::{normalize_label, tokenize};

/// Identifier of a concept within a [`ConceptGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("no concepts")]
    NoConcepts,
    #[error("duplicate concept id {0}")]
    DuplicateId(ConceptId),
    #[error("concept {concept} lists inlink {target}, which is not in the graph")]
    DanglingReference { concept: ConceptId, target: ConceptId },
    #[error("concept {0} has an empty title")]
    EmptyTitle(ConceptId),
    #[error("unknown concept id {0}")]
    UnknownId(ConceptId),
}

/// One record of a graph file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub id: ConceptId,
    pub title: String,
    #[serde(default)]
    pub redirects: Vec<String>,
    #[serde(default)]
    pub anchors: Vec<String>,
    #[serde(default)]
    pub inlinks: Vec<ConceptId>,
    #[serde(default)]
    pub named_entity: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Concept {
    pub id: ConceptId,
    pub title: String,
    pub redirects: Vec<String>,
    pub anchors: Vec<String>,
    pub is_named_entity: bool,
}

impl Concept {
    /// Title, redirects and anchors, in that order.
    pub fn labels(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.title.as_str())
            .chain(self.redirects.iter().map(String::as_str))
            .chain(self.anchors.iter().map(String::as_str))
    }
}

/// Immutable concept store with sorted inlink sets and a case-folded label index.
#[derive(Debug, Clone)]
pub struct ConceptGraph {
    concepts: Vec<Concept>,
    inlinks: Vec<Vec<ConceptId>>,
    slots: HashMap<ConceptId, usize>,
    labels: HashMap<String, Vec<usize>>,
}

impl ConceptGraph {
    /// Reads a line-delimited graph file (one JSON object per line).
    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| GraphError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_reader(BufReader::new(file)).map_err(|e| match e {
            GraphError::Io { source, .. } => GraphError::Io {
                path: path.to_owned(),
                source,
            },
            other => other,
        })
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, GraphError> {
        let mut records = Vec::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| GraphError::Io {
                path: PathBuf::new(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let record = serde_json::from_str(&line).map_err(|source| GraphError::Parse { line: n + 1, source })?;
            records.push(record);
        }
        Self::from_records(records)
    }

    /// Validates records and builds the graph.
    pub fn from_records(records: Vec<GraphRecord>) -> Result<Self, GraphError> {
        if records.is_empty() {
            return Err(GraphError::NoConcepts);
        }
        let mut ids = HashSet::with_capacity(records.len());
        for r in &records {
            if !ids.insert(r.id) {
                return Err(GraphError::DuplicateId(r.id));
            }
        }

        let mut records = records;
        records.sort_by_key(|r| r.id);

        let mut concepts = Vec::with_capacity(records.len());
        let mut inlinks = Vec::with_capacity(records.len());
        let mut slots = HashMap::with_capacity(records.len());
        let mut labels: HashMap<String, Vec<usize>> = HashMap::new();

        for (slot, r) in records.into_iter().enumerate() {
            if r.title.trim().is_empty() {
                return Err(GraphError::EmptyTitle(r.id));
            }
            let mut links = r.inlinks;
            if let Some(&target) = links.iter().find(|t| !ids.contains(t)) {
                return Err(GraphError::DanglingReference { concept: r.id, target });
            }
            links.sort_unstable();
            links.dedup();

            // case-folded dedup across title, redirects and anchors
            let mut seen = HashSet::new();
            seen.insert(r.title.to_lowercase());
            let redirects: Vec<String> = r
                .redirects
                .into_iter()
                .filter(|s| !s.trim().is_empty() && seen.insert(s.to_lowercase()))
                .collect();
            let anchors: Vec<String> = r
                .anchors
                .into_iter()
                .filter(|s| !s.trim().is_empty() && seen.insert(s.to_lowercase()))
                .collect();

            let concept = Concept {
                id: r.id,
                title: r.title,
                redirects,
                anchors,
                is_named_entity: r.named_entity,
            };
            let mut keys: Vec<String> = concept
                .labels()
                .map(normalize_label)
                .filter(|k| !k.is_empty())
                .collect();
            keys.sort();
            keys.dedup();
            for key in keys {
                labels.entry(key).or_default().push(slot);
            }

            slots.insert(concept.id, slot);
            concepts.push(concept);
            inlinks.push(links);
        }

        Ok(Self {
            concepts,
            inlinks,
            slots,
            labels,
        })
    }

    /// |W|, the number of concepts.
    pub fn total_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.slots.contains_key(&id)
    }

    pub fn concept(&self, id: ConceptId) -> Option<&Concept> {
        self.slots.get(&id).map(|&s| &self.concepts[s])
    }

    /// Concepts in ascending id order.
    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.iter()
    }

    pub fn inlinks(&self, id: ConceptId) -> Result<&[ConceptId], GraphError> {
        self.slot(id).map(|s| self.inlinks[s].as_slice())
    }

    pub fn is_named_entity(&self, id: ConceptId) -> Result<bool, GraphError> {
        self.slot(id).map(|s| self.concepts[s].is_named_entity)
    }

    fn slot(&self, id: ConceptId) -> Result<usize, GraphError> {
        self.slots.get(&id).copied().ok_or(GraphError::UnknownId(id))
    }

    /// Resolves a surface string to the concept whose title, redirect or
    /// anchor matches it after case-folding. Ambiguous labels go to the
    /// concept with the most inlinks, then the smaller id.
    pub fn resolve_label(&self, surface: &str) -> Option<ConceptId> {
        self.resolve_normalized(&normalize_label(surface))
    }

    /// Same as [`resolve_label`](Self::resolve_label) for a key that is
    /// already normalized.
    pub(crate) fn resolve_normalized(&self, key: &str) -> Option<ConceptId> {
        self.labels.get(key).and_then(|candidates| {
            candidates
                .iter()
                .max_by(|&&a, &&b| {
                    self.inlinks[a]
                        .len()
                        .cmp(&self.inlinks[b].len())
                        .then_with(|| self.concepts[b].id.cmp(&self.concepts[a].id))
                })
                .map(|&s| self.concepts[s].id)
        })
    }

    /// Tokens of a concept's title, used by the bag-of-words view.
    pub fn title_tokens(&self, id: ConceptId) -> Result<Vec<String>, GraphError> {
        self.slot(id).map(|s| tokenize(&self.concepts[s].title))
    }

    /// Link-overlap relatedness in `[0, 1]`.
    ///
    /// Self-relatedness is 1 when the inlink set is non-empty. Disjoint or
    /// empty inlink sets give 0, as does the degenerate case where the
    /// smaller inlink set already spans the whole graph.
    pub fn link_rel(&self, w1: ConceptId, w2: ConceptId) -> Result<f64, GraphError> {
        let a = &self.inlinks[self.slot(w1)?];
        let b = &self.inlinks[self.slot(w2)?];
        if a.is_empty() || b.is_empty() {
            log::debug!("link_rel({w1}, {w2}): empty inlink set");
            return Ok(0.0);
        }
        if w1 == w2 {
            return Ok(1.0);
        }
        let common = intersection_len(a, b);
        if common == 0 {
            return Ok(0.0);
        }
        let (lo, hi) = if a.len() <= b.len() {
            (a.len(), b.len())
        } else {
            (b.len(), a.len())
        };
        let denom = (self.total_count() as f64).ln() - (lo as f64).ln();
        if denom <= 0.0 {
            log::debug!("link_rel({w1}, {w2}): inlink set spans the graph, denominator undefined");
            return Ok(0.0);
        }
        let dist = ((hi as f64).ln() - (common as f64).ln()) / denom;
        Ok(1.0 - dist.clamp(0.0, 1.0))
    }

    /// Document-concept relatedness: the best `link_rel` between `w` and any
    /// concept of the profile, 0 for an empty profile.
    pub fn d_rel(&self, w: ConceptId, profile: &DocumentProfile) -> Result<f64, GraphError> {
        self.slot(w)?;
        let mut best = 0.0_f64;
        for other in profile.concepts() {
            let r = self.link_rel(w, other)?;
            if r > best {
                best = r;
                if best >= 1.0 {
                    break;
                }
            }
        }
        Ok(best)
    }
}

/// Size of the intersection of two sorted, deduplicated slices.
fn intersection_len(a: &[ConceptId], b: &[ConceptId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}
