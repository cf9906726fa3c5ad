//! Grammatical-function tagger.
//!
//! For each phrase category the tagger keeps lexical tables `P(G|T)` of
//! child functions given child tags and trigram tables over the child tag
//! sequence. Every assignment is compared with its strongest competitor;
//! if the score quotient exceeds the reliability threshold the assignment
//! needs human confirmation.

mod calibrate;
mod decode;
mod eval;
mod model;
mod ngram;
pub mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::graph::{AnnotationGraph, NodeRef, Status};

pub use calibrate::{calibrate_threshold, choose_threshold, Calibration, HeldoutPosition};
pub use decode::{CategoryScore, Decoded, Scored, Suggestion, Variant};
pub use eval::{evaluate, EvalConfig, EvalCounts, EvalReport, ReliabilityPolicy, MIN_EVAL_SENTENCES};
pub use model::{train, Smoothing, TaggerModel, DEFAULT_THRESHOLD, MODEL_FORMAT_VERSION};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaggerError {
    #[error("no training instances")]
    EmptyTraining,
    #[error("a phrase needs at least one child")]
    EmptyInput,
    #[error("no tagger model is trained")]
    NoModel,
    #[error("invalid smoothing parameters")]
    InvalidSmoothing,
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("target fraction {0} is outside (0, 1)")]
    InvalidTarget(f64),
    #[error("held-out set is empty")]
    EmptyHeldout,
    #[error("evaluation needs at least {needed} complete sentences, found {found}")]
    CorpusTooSmall { needed: usize, found: usize },
    #[error("invalid evaluation setting: {0}")]
    InvalidConfig(String),
    #[error("unknown decoding variant `{0}`")]
    UnknownVariant(String),
    #[error("model dump: {0}")]
    Dump(String),
}

/// One phrase as seen by the tagger: its category and the `(tag, function)`
/// pair of every child in surface order. A token child's tag is its part of
/// speech, a phrase child's tag is its category.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseInstance {
    pub category: String,
    pub children: Vec<(String, String)>,
}

impl PhraseInstance {
    pub fn new<T: Into<String>, G: Into<String>>(
        category: impl Into<String>,
        children: impl IntoIterator<Item = (T, G)>,
    ) -> Self {
        PhraseInstance {
            category: category.into(),
            children: children
                .into_iter()
                .map(|(t, g)| (t.into(), g.into()))
                .collect(),
        }
    }

    pub fn tags(&self) -> Vec<&str> {
        self.children.iter().map(|(t, _)| t.as_str()).collect()
    }

    pub fn functions(&self) -> Vec<&str> {
        self.children.iter().map(|(_, g)| g.as_str()).collect()
    }
}

/// Tag of a node for the tagger: part of speech or phrase category.
pub fn node_tag(graph: &AnnotationGraph, node: NodeRef) -> Option<&str> {
    match node {
        NodeRef::Token(p) => graph.token(p).map(|t| t.pos.as_str()),
        NodeRef::Phrase(id) => graph.phrase(id).map(|p| p.category.as_str()),
    }
}

/// Orders nodes by the leftmost token they dominate, then by id.
pub fn surface_order(graph: &AnnotationGraph, nodes: &mut [NodeRef]) {
    nodes.sort_by_key(|&n| {
        let first = graph
            .yield_of(n)
            .ok()
            .and_then(|y| y.first().copied())
            .unwrap_or(u32::MAX);
        (first, n)
    });
}

/// One instance per phrase node with at least one child, in node id order.
pub fn sentence_instances(graph: &AnnotationGraph) -> Vec<PhraseInstance> {
    graph
        .phrases()
        .filter_map(|p| {
            let mut children = graph.children(p.id);
            if children.is_empty() {
                return None;
            }
            surface_order(graph, &mut children);
            Some(PhraseInstance {
                category: p.category.clone(),
                children: children
                    .into_iter()
                    .map(|c| {
                        let tag = node_tag(graph, c).expect("child exists").to_string();
                        let function = graph.attachment(c).expect("child").function.clone();
                        (tag, function)
                    })
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Extraction {
    pub instances: Vec<PhraseInstance>,
    /// Sentences skipped because they are not complete.
    pub skipped: usize,
}

/// Training material: the phrases of all complete sentences.
pub fn extract_instances(corpus: &Corpus) -> Extraction {
    let mut out = Extraction::default();
    for s in corpus.sentences() {
        if s.status() == Status::Complete {
            out.instances.extend(sentence_instances(s));
        } else {
            out.skipped += 1;
        }
    }
    out
}
