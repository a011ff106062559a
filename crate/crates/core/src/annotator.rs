//! Document model: turns raw text or pre-annotated concept lists into the
//! `(named entities, general concepts)` pair the query evaluator consumes.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use thiserror::Error;

use crate::concept_graph::{ConceptGraph, ConceptId, GraphError, GraphRecord};
use crate::text::{tokenize, MAX_LABEL_TOKENS};

/// Concepts recognized in one document, split by the graph's named-entity flag.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DocumentProfile {
    pub doc_id: String,
    named_entities: BTreeSet<ConceptId>,
    general_concepts: BTreeSet<ConceptId>,
}

impl DocumentProfile {
    pub fn new(doc_id: impl Into<String>) -> Self {
        Self {
            doc_id: doc_id.into(),
            ..Self::default()
        }
    }

    /// Builds a profile from concept ids, routing each by its flag in `graph`.
    pub fn from_concepts(
        graph: &ConceptGraph,
        doc_id: impl Into<String>,
        ids: impl IntoIterator<Item = ConceptId>,
    ) -> Result<Self, GraphError> {
        let mut profile = Self::new(doc_id);
        for id in ids {
            profile.insert(graph, id)?;
        }
        Ok(profile)
    }

    pub fn insert(&mut self, graph: &ConceptGraph, id: ConceptId) -> Result<(), GraphError> {
        if graph.is_named_entity(id)? {
            self.named_entities.insert(id);
        } else {
            self.general_concepts.insert(id);
        }
        Ok(())
    }

    pub fn named_entities(&self) -> &BTreeSet<ConceptId> {
        &self.named_entities
    }

    pub fn general_concepts(&self) -> &BTreeSet<ConceptId> {
        &self.general_concepts
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.named_entities.contains(&id) || self.general_concepts.contains(&id)
    }

    /// All concepts, named entities first.
    pub fn concepts(&self) -> impl Iterator<Item = ConceptId> + '_ {
        self.named_entities.iter().chain(self.general_concepts.iter()).copied()
    }

    pub fn len(&self) -> usize {
        self.named_entities.len() + self.general_concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
}

/// Dictionary annotation: leftmost-longest matching of label spans of up to
/// six tokens, each span resolved through [`ConceptGraph::resolve_label`].
pub fn annotate(graph: &ConceptGraph, doc: &RawDocument) -> DocumentProfile {
    let tokens = tokenize(&doc.text);
    let mut profile = DocumentProfile::new(doc.doc_id.clone());
    let mut i = 0;
    'scan: while i < tokens.len() {
        let longest = MAX_LABEL_TOKENS.min(tokens.len() - i);
        for len in (1..=longest).rev() {
            let key = tokens[i..i + len].join(" ");
            if let Some(id) = graph.resolve_normalized(&key) {
                profile.insert(graph, id).expect("resolved ids exist in the graph");
                i += len;
                continue 'scan;
            }
        }
        i += 1;
    }
    profile
}

#[derive(Debug, Error)]
pub enum CorpusError {
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
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("document {doc_id}: unknown concept id {id}")]
    UnknownConcept { doc_id: String, id: ConceptId },
    #[error("duplicate doc_id {0}")]
    DuplicateDocId(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusRecord {
    doc_id: String,
    text: Option<String>,
    concepts: Option<Vec<ConceptId>>,
    relevance: Option<u8>,
}

/// A corpus entry after annotation or validation.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusDocument {
    pub profile: DocumentProfile,
    pub relevance: Option<bool>,
    /// Original text for text records, `None` for pre-annotated ones.
    pub text: Option<String>,
}

impl CorpusDocument {
    pub fn doc_id(&self) -> &str {
        &self.profile.doc_id
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CorpusError> {
    File::open(path).map(BufReader::new).map_err(|source| CorpusError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Reads a line-delimited corpus file.
pub fn load_corpus(path: impl AsRef<Path>, graph: &ConceptGraph) -> Result<Vec<CorpusDocument>, CorpusError> {
    let path = path.as_ref();
    parse_corpus(open(path)?, graph).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

/// Profiles only, for callers that do not need relevance labels.
pub fn load_profiles(path: impl AsRef<Path>, graph: &ConceptGraph) -> Result<Vec<DocumentProfile>, CorpusError> {
    Ok(load_corpus(path, graph)?.into_iter().map(|d| d.profile).collect())
}

pub fn parse_corpus(reader: impl BufRead, graph: &ConceptGraph) -> Result<Vec<CorpusDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: CorpusRecord =
            serde_json::from_str(&line).map_err(|source| CorpusError::Parse { line: line_no, source })?;
        let invalid = |reason: &str| CorpusError::Invalid {
            line: line_no,
            reason: reason.to_owned(),
        };
        if record.doc_id.is_empty() {
            return Err(invalid("empty doc_id"));
        }
        let relevance = match record.relevance {
            None => None,
            Some(0) => Some(false),
            Some(1) => Some(true),
            Some(_) => return Err(invalid("relevance must be 0 or 1")),
        };
        let doc = match (record.text, record.concepts) {
            (Some(text), None) => {
                let raw = RawDocument {
                    doc_id: record.doc_id,
                    text,
                };
                CorpusDocument {
                    profile: annotate(graph, &raw),
                    relevance,
                    text: Some(raw.text),
                }
            }
            (None, Some(ids)) => {
                let mut profile = DocumentProfile::new(record.doc_id);
                for id in ids {
                    profile.insert(graph, id).map_err(|_| CorpusError::UnknownConcept {
                        doc_id: profile.doc_id.clone(),
                        id,
                    })?;
                }
                CorpusDocument {
                    profile,
                    relevance,
                    text: None,
                }
            }
            _ => return Err(invalid("exactly one of `text` or `concepts` is required")),
        };
        if !seen.insert(doc.doc_id().to_owned()) {
            return Err(CorpusError::DuplicateDocId(doc.doc_id().to_owned()));
        }
        docs.push(doc);
    }
    Ok(docs)
}

/// Relevance judgments keyed by topic, then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: HashMap<String, HashMap<String, bool>>,
}

impl Qrels {
    /// Reads `topic_id TAB doc_id TAB relevance` lines.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::from_reader(open(path.as_ref())?)
    }

    pub fn from_reader(reader: impl BufRead) -> Result<Self, CorpusError> {
        let mut judgments: HashMap<String, HashMap<String, bool>> = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| CorpusError::Io {
                path: PathBuf::new(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
            let invalid = |reason: &str| CorpusError::Invalid {
                line: n + 1,
                reason: reason.to_owned(),
            };
            let [topic, doc, rel] = fields[..] else {
                return Err(invalid("expected topic_id, doc_id and relevance separated by tabs"));
            };
            let rel = match rel {
                "0" => false,
                "1" => true,
                _ => return Err(invalid("relevance must be 0 or 1")),
            };
            judgments
                .entry(topic.to_owned())
                .or_default()
                .insert(doc.to_owned(), rel);
        }
        Ok(Self { judgments })
    }

    pub fn topics(&self) -> impl Iterator<Item = &str> {
        self.judgments.keys().map(String::as_str)
    }

    pub fn relevance(&self, topic: &str, doc_id: &str) -> Option<bool> {
        self.judgments.get(topic)?.get(doc_id).copied()
    }

    /// Overwrites labels of judged documents; returns how many were judged.
    pub fn apply(&self, topic: &str, docs: &mut [CorpusDocument]) -> usize {
        let mut hits = 0;
        for doc in docs {
            if let Some(rel) = self.relevance(topic, doc.doc_id()) {
                doc.relevance = Some(rel);
                hits += 1;
            }
        }
        hits
    }
}

/// Bag-of-words view of a corpus: each distinct token is a pseudo-concept
/// with no inlinks, so exact matching is plain token presence.
#[derive(Debug, Clone)]
pub struct TokenVocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, ConceptId>,
    graph: ConceptGraph,
}

impl TokenVocabulary {
    /// Vocabulary over the union of tokens; ids follow lexicographic order.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let sorted: BTreeSet<String> = tokens.into_iter().map(Into::into).collect();
        let pairs = sorted
            .into_iter()
            .enumerate()
            .map(|(i, t)| (ConceptId(i as u32), t))
            .collect();
        Self::from_pairs(pairs)
    }

    /// Vocabulary with explicit ids, as recorded in a rule file.
    pub fn from_pairs(pairs: Vec<(ConceptId, String)>) -> Result<Self, GraphError> {
        let records = pairs
            .iter()
            .map(|(id, t)| GraphRecord {
                id: *id,
                title: t.clone(),
                redirects: vec![],
                anchors: vec![],
                inlinks: vec![],
                named_entity: false,
            })
            .collect();
        let graph = ConceptGraph::from_records(records)?;
        let ids = pairs.iter().map(|(id, t)| (t.clone(), *id)).collect();
        let tokens = pairs.into_iter().map(|(_, t)| t).collect();
        Ok(Self { tokens, ids, graph })
    }

    pub fn graph(&self) -> &ConceptGraph {
        &self.graph
    }

    pub fn id(&self, token: &str) -> Option<ConceptId> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: ConceptId) -> Option<&str> {
        self.graph.concept(id).map(|c| c.title.as_str())
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Profile of the tokens that belong to this vocabulary; others are dropped.
    pub fn profile<'a>(&self, doc_id: &str, tokens: impl IntoIterator<Item = &'a str>) -> DocumentProfile {
        let mut profile = DocumentProfile::new(doc_id);
        for id in tokens.into_iter().filter_map(|t| self.id(t)) {
            profile
                .insert(&self.graph, id)
                .expect("vocabulary ids are in its graph");
        }
        profile
    }
}

/// Word tokens of a document: its text when present, otherwise the titles of
/// its pre-annotated concepts.
pub fn document_tokens(graph: &ConceptGraph, doc: &CorpusDocument) -> Result<Vec<String>, GraphError> {
    match &doc.text {
        Some(text) => Ok(tokenize(text)),
        None => {
            let mut tokens = Vec::new();
            for id in doc.profile.concepts() {
                tokens.extend(graph.title_tokens(id)?);
            }
            Ok(tokens)
        }
    }
}

/// Builds the bag-of-words vocabulary of `docs` and the matching profiles.
pub fn token_view(
    graph: &ConceptGraph,
    docs: &[CorpusDocument],
) -> Result<(TokenVocabulary, Vec<DocumentProfile>), GraphError> {
    let per_doc = docs
        .iter()
        .map(|d| document_tokens(graph, d))
        .collect::<Result<Vec<_>, _>>()?;
    let vocabulary = TokenVocabulary::from_tokens(per_doc.iter().flatten().cloned())?;
    let profiles = docs
        .iter()
        .zip(&per_doc)
        .map(|(d, toks)| vocabulary.profile(d.doc_id(), toks.iter().map(String::as_str)))
        .collect();
    Ok((vocabulary, profiles))
}
