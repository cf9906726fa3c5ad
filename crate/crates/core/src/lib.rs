//! Annotation of argument structure for free word-order languages.
//!
//! - [`graph`]: sentences as unordered trees with crossing branches and
//!   secondary links, editing commands, validation, constituency recovery.
//! - [`tagset`]: the variable part-of-speech, category and function tagsets.
//! - [`corpus`]: corpora and their line-oriented text format.
//! - [`tagger`]: the grammatical-function tagger with reliability estimates.
//! - [`automation`]: suggestion levels built on the tagger.
//! - [`layout`]: geometry and SVG rendering.
//! - [`random`]: seeded generators for property tests.

pub mod automation;
pub mod corpus;
pub mod graph;
pub mod layout;
pub mod random;
pub mod tagger;
pub mod tagset;

pub use corpus::Corpus;
pub use graph::{AnnotationGraph, NodeId, NodeRef, Status};
pub use tagset::{default_tagsets, TagsetKind, TagsetRegistry};
