//! Variable tagsets for parts of speech, node categories and edge functions.
//!
//! The three tagsets travel with the corpus they describe. Every label that
//! enters an [`AnnotationGraph`](crate::graph::AnnotationGraph) is checked
//! against them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Placeholder for an edge whose function has not been assigned yet.
pub const UNLABELED: &str = "--";

/// Prefix marking a coordinated category, e.g. `CVP` for coordinated `VP`.
pub const COORDINATION_PREFIX: char = 'C';

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagsetKind {
    Pos,
    Node,
    Edge,
}

impl TagsetKind {
    pub const ALL: [TagsetKind; 3] = [TagsetKind::Pos, TagsetKind::Node, TagsetKind::Edge];

    pub fn as_str(self) -> &'static str {
        match self {
            TagsetKind::Pos => "pos",
            TagsetKind::Node => "node",
            TagsetKind::Edge => "edge",
        }
    }
}

impl fmt::Display for TagsetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TagsetKind {
    type Err = TagsetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pos" => Ok(TagsetKind::Pos),
            "node" => Ok(TagsetKind::Node),
            "edge" => Ok(TagsetKind::Edge),
            other => Err(TagsetError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TagsetError {
    #[error("unknown tagset kind `{0}`")]
    UnknownKind(String),
    #[error("invalid label `{label}`: {reason}")]
    InvalidLabel { label: String, reason: &'static str },
    #[error("invalid description for `{0}`: tabs and line breaks are not allowed")]
    InvalidDescription(String),
    #[error("label `{label}` already present in the {kind} tagset")]
    Duplicate { kind: TagsetKind, label: String },
    #[error("label `{label}` is not in the {kind} tagset")]
    Missing { kind: TagsetKind, label: String },
    #[error("label `{label}` of the {kind} tagset is used in the corpus")]
    LabelInUse { kind: TagsetKind, label: String },
}

/// Result of checking a label against a tagset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelCheck {
    Valid,
    /// `C`+base where base is a member (node tagsets only).
    ValidCoordination(String),
    Invalid,
}

impl LabelCheck {
    pub fn is_valid(&self) -> bool {
        !matches!(self, LabelCheck::Invalid)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagEntry {
    pub label: String,
    pub description: String,
}

/// Checks the lexical shape of a label; membership is a separate question.
pub fn validate_label(label: &str) -> Result<(), TagsetError> {
    let invalid = |reason| TagsetError::InvalidLabel {
        label: label.to_string(),
        reason,
    };
    if label.is_empty() {
        return Err(invalid("empty"));
    }
    if label == UNLABELED {
        return Err(invalid("`--` is reserved for unlabeled edges"));
    }
    if label.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(invalid("whitespace or control characters"));
    }
    if label.starts_with('#') || label.starts_with('%') {
        return Err(invalid("must not start with `#` or `%`"));
    }
    Ok(())
}

fn validate_description(label: &str, description: &str) -> Result<(), TagsetError> {
    if description.contains(['\t', '\n', '\r']) {
        return Err(TagsetError::InvalidDescription(label.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tagset {
    kind: TagsetKind,
    entries: Vec<TagEntry>,
    version: u64,
}

impl Tagset {
    pub fn new(kind: TagsetKind) -> Self {
        Tagset {
            kind,
            entries: Vec::new(),
            version: 1,
        }
    }

    /// Builds a tagset from stored entries, e.g. when loading a corpus.
    pub fn from_entries(
        kind: TagsetKind,
        version: u64,
        entries: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, TagsetError> {
        let mut set = Tagset {
            kind,
            entries: Vec::new(),
            version,
        };
        for (label, description) in entries {
            set.push(label, description)?;
        }
        Ok(set)
    }

    fn push(&mut self, label: String, description: String) -> Result<(), TagsetError> {
        validate_label(&label)?;
        validate_description(&label, &description)?;
        if self.contains(&label) {
            return Err(TagsetError::Duplicate {
                kind: self.kind,
                label,
            });
        }
        self.entries.push(TagEntry { label, description });
        Ok(())
    }

    pub fn kind(&self) -> TagsetKind {
        self.kind
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn entries(&self) -> &[TagEntry] {
        &self.entries
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.iter().any(|e| e.label == label)
    }

    pub fn description(&self, label: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|e| e.label == label)
            .map(|e| e.description.as_str())
    }

    /// Membership test. Node tagsets also accept `C`+base for coordinated
    /// phrases when base is a member.
    pub fn check_label(&self, label: &str) -> LabelCheck {
        if self.contains(label) {
            return LabelCheck::Valid;
        }
        if self.kind == TagsetKind::Node {
            if let Some(base) = label.strip_prefix(COORDINATION_PREFIX) {
                if !base.is_empty() && self.contains(base) {
                    return LabelCheck::ValidCoordination(base.to_string());
                }
            }
        }
        LabelCheck::Invalid
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TagsetEdit {
    Add { label: String, description: String },
    Remove { label: String },
}

impl TagsetEdit {
    pub fn label(&self) -> &str {
        match self {
            TagsetEdit::Add { label, .. } | TagsetEdit::Remove { label } => label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub kind: TagsetKind,
    pub version: u64,
    pub edit: TagsetEdit,
    pub forced: bool,
}

/// The three tagsets of a corpus plus the journal of changes made to them
/// during this session.
///
/// The journal is session-local: it is not serialized and does not take part
/// in equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TagsetRegistry {
    pos: Tagset,
    node: Tagset,
    edge: Tagset,
    #[serde(skip)]
    journal: Vec<JournalEntry>,
}

impl PartialEq for TagsetRegistry {
    fn eq(&self, other: &Self) -> bool {
        self.pos == other.pos && self.node == other.node && self.edge == other.edge
    }
}

impl Eq for TagsetRegistry {}

impl Default for TagsetRegistry {
    fn default() -> Self {
        default_tagsets()
    }
}

impl TagsetRegistry {
    pub fn new(pos: Tagset, node: Tagset, edge: Tagset) -> Self {
        assert_eq!(pos.kind, TagsetKind::Pos);
        assert_eq!(node.kind, TagsetKind::Node);
        assert_eq!(edge.kind, TagsetKind::Edge);
        TagsetRegistry {
            pos,
            node,
            edge,
            journal: Vec::new(),
        }
    }

    pub fn get(&self, kind: TagsetKind) -> &Tagset {
        match kind {
            TagsetKind::Pos => &self.pos,
            TagsetKind::Node => &self.node,
            TagsetKind::Edge => &self.edge,
        }
    }

    fn get_mut(&mut self, kind: TagsetKind) -> &mut Tagset {
        match kind {
            TagsetKind::Pos => &mut self.pos,
            TagsetKind::Node => &mut self.node,
            TagsetKind::Edge => &mut self.edge,
        }
    }

    pub fn pos(&self) -> &Tagset {
        &self.pos
    }

    pub fn node(&self) -> &Tagset {
        &self.node
    }

    pub fn edge(&self) -> &Tagset {
        &self.edge
    }

    pub fn check_label(&self, kind: TagsetKind, label: &str) -> LabelCheck {
        self.get(kind).check_label(label)
    }

    /// Edge functions additionally accept the unlabeled placeholder.
    pub fn is_edge_function(&self, label: &str) -> bool {
        label == UNLABELED || self.edge.contains(label)
    }

    pub fn journal(&self) -> &[JournalEntry] {
        &self.journal
    }

    /// Adds or removes a label and bumps the tagset version.
    ///
    /// `in_use` answers whether a label still occurs in the corpus; removing a
    /// used label requires `force`.
    pub fn modify(
        &mut self,
        kind: TagsetKind,
        edit: TagsetEdit,
        force: bool,
        in_use: impl Fn(&str) -> bool,
    ) -> Result<u64, TagsetError> {
        let set = self.get_mut(kind);
        match &edit {
            TagsetEdit::Add { label, description } => {
                set.push(label.clone(), description.clone())?;
            }
            TagsetEdit::Remove { label } => {
                let idx = set
                    .entries
                    .iter()
                    .position(|e| &e.label == label)
                    .ok_or_else(|| TagsetError::Missing {
                        kind,
                        label: label.clone(),
                    })?;
                if !force && in_use(label) {
                    return Err(TagsetError::LabelInUse {
                        kind,
                        label: label.clone(),
                    });
                }
                set.entries.remove(idx);
            }
        }
        set.version += 1;
        let version = set.version;
        self.journal.push(JournalEntry {
            kind,
            version,
            edit,
            forced: force,
        });
        Ok(version)
    }
}

const DEFAULT_POS: &[(&str, &str)] = &[
    ("ADJA", "attributive adjective"),
    ("ADJD", "predicative or adverbial adjective"),
    ("ADV", "adverb"),
    ("APPR", "preposition"),
    ("APPRART", "preposition with article"),
    ("ART", "article"),
    ("CARD", "cardinal number"),
    ("KON", "coordinating conjunction"),
    ("KOUS", "subordinating conjunction"),
    ("NE", "proper noun"),
    ("NN", "common noun"),
    ("PDAT", "attributive demonstrative pronoun"),
    ("PIAT", "attributive indefinite pronoun"),
    ("PPER", "personal pronoun"),
    ("PPOSAT", "attributive possessive pronoun"),
    ("PRELS", "substituting relative pronoun"),
    ("PRF", "reflexive pronoun"),
    ("PROAV", "pronominal adverb"),
    ("PTKVZ", "separable verb prefix"),
    ("PTKZU", "infinitival zu"),
    ("VAFIN", "finite auxiliary"),
    ("VAINF", "infinitive auxiliary"),
    ("VMFIN", "finite modal"),
    ("VVFIN", "finite full verb"),
    ("VVINF", "infinitive full verb"),
    ("VVPP", "past participle full verb"),
    ("$,", "comma"),
    ("$.", "sentence-final punctuation"),
];

const DEFAULT_NODE: &[(&str, &str)] = &[
    ("S", "sentence"),
    ("NP", "noun phrase"),
    ("AP", "adjective phrase"),
    ("VP", "verb phrase"),
    ("PP", "prepositional phrase"),
];

const DEFAULT_EDGE: &[(&str, &str)] = &[
    ("SB", "subject"),
    ("MO", "modifier"),
    ("HD", "head"),
    ("PD", "predicate"),
    ("CP", "complementizer"),
    ("OA", "accusative object"),
    ("OC", "clausal complement"),
    ("DA", "dative"),
    ("GL", "prenominal genitive"),
    ("GR", "postnominal genitive"),
    ("RC", "relative clause"),
    ("NK", "noun kernel element"),
    ("PM", "morphological particle"),
    ("SVP", "separable verb prefix"),
    ("CJ", "conjunct"),
    ("CD", "coordinating conjunction"),
];

fn seeded(kind: TagsetKind, entries: &[(&str, &str)]) -> Tagset {
    Tagset::from_entries(
        kind,
        1,
        entries
            .iter()
            .map(|(l, d)| (l.to_string(), d.to_string())),
    )
    .expect("default tagsets are well-formed")
}

/// The shipped tagsets. Only the labels named by the annotation scheme's
/// documentation are seeded; extend them with [`TagsetRegistry::modify`].
pub fn default_tagsets() -> TagsetRegistry {
    TagsetRegistry::new(
        seeded(TagsetKind::Pos, DEFAULT_POS),
        seeded(TagsetKind::Node, DEFAULT_NODE),
        seeded(TagsetKind::Edge, DEFAULT_EDGE),
    )
}
