//! Corpora: ordered sentences stored together with their tagsets.

mod format;
mod store;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::graph::{AnnotationGraph, Violation};
use crate::tagset::{TagsetEdit, TagsetError, TagsetKind, TagsetRegistry};

pub use format::{parse, serialize, ParseError, ParseErrorKind, FORMAT_VERSION};
pub use store::{load, save, LockMode, StoreError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("sentence id `{0}` is empty or contains whitespace")]
    InvalidSentenceId(String),
    #[error("duplicate sentence id `{0}`")]
    DuplicateSentence(String),
    #[error("unknown sentence `{0}`")]
    UnknownSentence(String),
    #[error("invalid corpus name")]
    InvalidName,
    #[error("invalid metadata entry `{0}`")]
    InvalidMetadata(String),
    #[error("sentence `{id}` is invalid: {}", first_message(.violations))]
    InvalidSentence {
        id: String,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Tagset(#[from] TagsetError),
}

fn first_message(violations: &[Violation]) -> String {
    violations
        .first()
        .map(|v| v.to_string())
        .unwrap_or_default()
}

pub(crate) fn valid_sentence_id(id: &str) -> bool {
    !id.is_empty() && !id.chars().any(|c| c.is_whitespace() || c.is_control())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    tagsets: TagsetRegistry,
    sentences: Vec<AnnotationGraph>,
    metadata: BTreeMap<String, String>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, tagsets: TagsetRegistry) -> Result<Self, CorpusError> {
        let name = name.into();
        if name.chars().any(|c| c.is_control()) {
            return Err(CorpusError::InvalidName);
        }
        Ok(Corpus {
            name,
            tagsets,
            sentences: Vec::new(),
            metadata: BTreeMap::new(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn tagsets(&self) -> &TagsetRegistry {
        &self.tagsets
    }

    pub fn sentences(&self) -> &[AnnotationGraph] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn sentence(&self, id: &str) -> Option<&AnnotationGraph> {
        self.sentences.iter().find(|s| s.id() == id)
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn set_metadata(
        &mut self,
        key: impl Into<String>,
        value: impl Into<String>,
    ) -> Result<(), CorpusError> {
        let (key, value) = (key.into(), value.into());
        if key.is_empty()
            || key.chars().any(|c| c.is_whitespace() || c.is_control())
            || value.chars().any(|c| c.is_control())
        {
            return Err(CorpusError::InvalidMetadata(key));
        }
        self.metadata.insert(key, value);
        Ok(())
    }

    /// Appends a sentence. Its id must be fresh and it must satisfy the
    /// integrity rules under this corpus' tagsets.
    pub fn push(&mut self, graph: AnnotationGraph) -> Result<(), CorpusError> {
        if !valid_sentence_id(graph.id()) {
            return Err(CorpusError::InvalidSentenceId(graph.id().to_string()));
        }
        if self.sentence(graph.id()).is_some() {
            return Err(CorpusError::DuplicateSentence(graph.id().to_string()));
        }
        check_sentence(&graph, &self.tagsets)?;
        self.sentences.push(graph);
        Ok(())
    }

    /// Replaces a sentence with a new version of itself.
    pub fn replace(&mut self, graph: AnnotationGraph) -> Result<(), CorpusError> {
        check_sentence(&graph, &self.tagsets)?;
        let slot = self
            .sentences
            .iter_mut()
            .find(|s| s.id() == graph.id())
            .ok_or_else(|| CorpusError::UnknownSentence(graph.id().to_string()))?;
        *slot = graph;
        Ok(())
    }

    /// Runs `f` on a sentence; the change is kept only if the result still
    /// passes [`Corpus::replace`] checks.
    pub fn edit<R, E>(
        &mut self,
        id: &str,
        f: impl FnOnce(&mut AnnotationGraph, &TagsetRegistry) -> Result<R, E>,
    ) -> Result<Result<R, E>, CorpusError> {
        let mut g = self
            .sentence(id)
            .cloned()
            .ok_or_else(|| CorpusError::UnknownSentence(id.to_string()))?;
        match f(&mut g, &self.tagsets) {
            Ok(r) => {
                self.replace(g)?;
                Ok(Ok(r))
            }
            Err(e) => Ok(Err(e)),
        }
    }

    pub fn label_in_use(&self, kind: TagsetKind, label: &str) -> bool {
        self.sentences.iter().any(|s| s.uses_label(kind, label))
    }

    /// Changes a tagset. Removing a label still used by some sentence needs
    /// `force`, after which the affected sentences no longer validate.
    pub fn modify_tagset(
        &mut self,
        kind: TagsetKind,
        edit: TagsetEdit,
        force: bool,
    ) -> Result<u64, CorpusError> {
        let sentences = &self.sentences;
        let version = self.tagsets.modify(kind, edit, force, |label| {
            sentences.iter().any(|s| s.uses_label(kind, label))
        })?;
        Ok(version)
    }

    /// Checks every sentence against the integrity rules.
    pub fn check(&self) -> Result<(), CorpusError> {
        for s in &self.sentences {
            check_sentence(s, &self.tagsets)?;
        }
        Ok(())
    }
}

fn check_sentence(g: &AnnotationGraph, tagsets: &TagsetRegistry) -> Result<(), CorpusError> {
    let violations: Vec<Violation> = g
        .validate(tagsets)
        .into_iter()
        .filter(|v| v.rule.is_integrity() || g.status() == crate::graph::Status::Complete)
        .filter(|v| v.severity == crate::graph::Severity::Error)
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(CorpusError::InvalidSentence {
            id: g.id().to_string(),
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeRef, RelabelTarget};
    use crate::tagset::default_tagsets;

    #[test]
    fn push_checks_ids() {
        let ts = default_tagsets();
        let mut c = Corpus::new("t", ts.clone()).unwrap();
        let g = AnnotationGraph::new("s1", [("er", "PPER")], &ts).unwrap();
        c.push(g.clone()).unwrap();
        assert_eq!(
            c.push(g).unwrap_err(),
            CorpusError::DuplicateSentence("s1".into())
        );
        let bad = AnnotationGraph::new("s 2", [("er", "PPER")], &ts).unwrap();
        assert!(matches!(
            c.push(bad),
            Err(CorpusError::InvalidSentenceId(_))
        ));
    }

    #[test]
    fn tagset_removal_respects_usage() {
        let ts = default_tagsets();
        let mut c = Corpus::new("t", ts.clone()).unwrap();
        let mut g = AnnotationGraph::new("s1", [("er", "PPER"), ("weint", "VVFIN")], &ts).unwrap();
        g.group(&ts, &[NodeRef::Token(1), NodeRef::Token(2)], "S")
            .unwrap();
        g.relabel(&ts, RelabelTarget::Edge(NodeRef::Token(1)), "SB")
            .unwrap();
        c.push(g).unwrap();
        assert!(c.label_in_use(TagsetKind::Edge, "SB"));
        let err = c
            .modify_tagset(
                TagsetKind::Edge,
                TagsetEdit::Remove { label: "SB".into() },
                false,
            )
            .unwrap_err();
        assert!(matches!(
            err,
            CorpusError::Tagset(TagsetError::LabelInUse { .. })
        ));
        let v = c
            .modify_tagset(
                TagsetKind::Edge,
                TagsetEdit::Remove { label: "OA".into() },
                false,
            )
            .unwrap();
        assert_eq!(v, 2);
        // forced removal leaves the corpus inconsistent, which check reports
        c.modify_tagset(
            TagsetKind::Edge,
            TagsetEdit::Remove { label: "SB".into() },
            true,
        )
        .unwrap();
        assert!(c.check().is_err());
    }
}
