//! Concept-based document filtering with boolean queries learned by
//! co-evolutionary genetic programming.
//!
//! Documents are mapped to sets of concepts from a link graph. A query is a
//! boolean tree over concepts, and a concept matches a document when it is
//! present or sufficiently related, by shared inlinks, to a concept that is.

pub mod annotator;
pub mod concept_graph;
pub mod evaluation;
pub mod gp;
pub mod query;
pub mod text;
