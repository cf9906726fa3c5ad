//! Degrees of automation on top of the tagger.
//!
//! | level | annotator supplies                | program proposes           |
//! |-------|-----------------------------------|----------------------------|
//! | 0     | children, category, functions     | nothing                    |
//! | 1     | children, category                | functions                  |
//! | 2     | children                          | category and functions     |
//! | 3     | nothing                           | kernel phrases, as level 2 |
//!
//! Proposals are data; nothing here changes a graph except
//! [`apply_reliable`], which callers invoke explicitly.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AnnotationGraph, GraphError, NodeId, NodeRef, RelabelTarget, Token};
use crate::tagger::{node_tag, surface_order, Suggestion, TaggerError, TaggerModel, Variant};
use crate::tagset::{TagsetKind, TagsetRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum AutomationLevel {
    Manual = 0,
    Functions = 1,
    Category = 2,
    Kernels = 3,
}

/// What the annotator has to provide for a new phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Children,
    Category,
    Functions,
}

impl AutomationLevel {
    pub const ALL: [AutomationLevel; 4] = [
        AutomationLevel::Manual,
        AutomationLevel::Functions,
        AutomationLevel::Category,
        AutomationLevel::Kernels,
    ];

    pub fn required_fields(self) -> &'static [Field] {
        match self {
            AutomationLevel::Manual => &[Field::Children, Field::Category, Field::Functions],
            AutomationLevel::Functions => &[Field::Children, Field::Category],
            AutomationLevel::Category => &[Field::Children],
            AutomationLevel::Kernels => &[],
        }
    }
}

impl TryFrom<u8> for AutomationLevel {
    type Error = AutomationError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        AutomationLevel::ALL
            .get(v as usize)
            .copied()
            .ok_or(AutomationError::UnsupportedLevel(v))
    }
}

impl From<AutomationLevel> for u8 {
    fn from(l: AutomationLevel) -> u8 {
        l as u8
    }
}

impl fmt::Display for AutomationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", *self as u8)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AutomationError {
    #[error("automation level {0} is not supported (0 to 3)")]
    UnsupportedLevel(u8),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("no tagger model is loaded")]
    NoModel,
    #[error(transparent)]
    Tagger(#[from] TaggerError),
}

/// Input from the annotator.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Selection {
    #[serde(default)]
    pub children: Vec<NodeRef>,
    #[serde(default)]
    pub category: Option<String>,
}

/// Part-of-speech classes for kernel detection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosClassMap {
    pub determiners: BTreeSet<String>,
    pub adjectives: BTreeSet<String>,
    pub nouns: BTreeSet<String>,
    /// Category of the proposed kernels.
    pub category: String,
}

impl Default for PosClassMap {
    fn default() -> Self {
        let set = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect();
        PosClassMap {
            determiners: set(&["ART", "PDAT", "PIAT", "PPOSAT"]),
            adjectives: set(&["ADJA"]),
            nouns: set(&["NN", "NE"]),
            category: "NP".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpan {
    pub start: u32,
    pub end: u32,
    pub category: String,
}

/// Finds noun kernels: maximal runs of an optional determiner, any number
/// of adjectives and at least one noun, scanned greedily left to right.
pub fn kernel_chunk(tokens: &[Token], classes: &PosClassMap) -> Vec<KernelSpan> {
    let mut spans = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let is = |set: &BTreeSet<String>, j: usize| j < tokens.len() && set.contains(&tokens[j].pos);
        let mut j = i;
        if is(&classes.determiners, j) {
            j += 1;
        }
        while is(&classes.adjectives, j) {
            j += 1;
        }
        let nouns_from = j;
        while is(&classes.nouns, j) {
            j += 1;
        }
        if j > nouns_from {
            spans.push(KernelSpan {
                start: tokens[i].position,
                end: tokens[j - 1].position,
                category: classes.category.clone(),
            });
            i = j;
        } else {
            i += 1;
        }
    }
    spans
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionProposal {
    pub child: NodeRef,
    pub suggestion: Suggestion,
}

/// Labels for one phrase, new or existing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseProposal {
    /// The phrase already exists with exactly these children.
    pub node: Option<NodeId>,
    /// Children in surface order.
    pub children: Vec<NodeRef>,
    pub category: String,
    /// Whether the category was chosen by the tagger.
    pub category_proposed: bool,
    pub functions: Vec<FunctionProposal>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionSet {
    pub level: AutomationLevel,
    pub kernels: Vec<KernelSpan>,
    pub proposals: Vec<PhraseProposal>,
}

impl SuggestionSet {
    /// Function proposals that need an explicit decision by the annotator.
    pub fn must_confirm(&self) -> impl Iterator<Item = &FunctionProposal> {
        self.proposals
            .iter()
            .flat_map(|p| &p.functions)
            .filter(|f| !f.suggestion.reliable)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuggestOptions {
    pub variant: Variant,
    pub classes: PosClassMap,
}

impl Default for SuggestOptions {
    fn default() -> Self {
        SuggestOptions {
            variant: Variant::Positional,
            classes: PosClassMap::default(),
        }
    }
}

const HEAD: &str = "HD";

fn invalid<T>(msg: impl Into<String>) -> Result<T, AutomationError> {
    Err(AutomationError::InvalidSelection(msg.into()))
}

/// Checks the children of a selection and returns them in surface order
/// together with the phrase they already form, if any.
fn resolve_children(
    graph: &AnnotationGraph,
    children: &[NodeRef],
) -> Result<(Vec<NodeRef>, Option<NodeId>), AutomationError> {
    if children.is_empty() {
        return invalid("no children selected");
    }
    let set: BTreeSet<NodeRef> = children.iter().copied().collect();
    if set.len() != children.len() {
        return invalid("duplicate children");
    }
    if let Some(c) = children.iter().find(|c| !graph.contains(**c)) {
        return invalid(format!("unknown node {c}"));
    }
    let parents: BTreeSet<Option<NodeId>> = children.iter().map(|c| graph.parent(*c)).collect();
    let node = match parents.into_iter().collect::<Vec<_>>()[..] {
        [None] => None,
        [Some(p)] if graph.children(p).into_iter().collect::<BTreeSet<_>>() == set => Some(p),
        _ => return invalid("children must be unattached or form exactly one phrase"),
    };
    let mut ordered = children.to_vec();
    surface_order(graph, &mut ordered);
    Ok((ordered, node))
}

fn proposal(
    graph: &AnnotationGraph,
    model: &TaggerModel,
    children: Vec<NodeRef>,
    node: Option<NodeId>,
    category: Option<&str>,
    variant: Variant,
) -> Result<PhraseProposal, AutomationError> {
    let tags: Vec<&str> = children
        .iter()
        .map(|c| node_tag(graph, *c).expect("resolved child"))
        .collect();
    let decoded = match category {
        Some(q) => model.decode_functions(q, &tags, variant)?,
        None => model.decode_category(&tags, variant)?,
    };
    Ok(PhraseProposal {
        node,
        functions: children
            .iter()
            .zip(decoded.suggestions)
            .map(|(&child, suggestion)| FunctionProposal { child, suggestion })
            .collect(),
        children,
        category: decoded.category,
        category_proposed: category.is_none(),
    })
}

/// Proposes annotation for `graph` at `level` without changing it.
pub fn suggest(
    graph: &AnnotationGraph,
    tagsets: &TagsetRegistry,
    model: Option<&TaggerModel>,
    level: AutomationLevel,
    selection: &Selection,
    options: &SuggestOptions,
) -> Result<SuggestionSet, AutomationError> {
    let mut out = SuggestionSet {
        level,
        kernels: Vec::new(),
        proposals: Vec::new(),
    };
    let needs = level.required_fields();
    if !needs.contains(&Field::Children) && !selection.children.is_empty() {
        return invalid(format!("level {level} takes no children"));
    }
    if !needs.contains(&Field::Category) && selection.category.is_some() {
        return invalid(format!("level {level} takes no category"));
    }
    if level == AutomationLevel::Manual {
        return Ok(out);
    }
    let model = model.ok_or(AutomationError::NoModel)?;
    if model.is_empty() {
        return Err(AutomationError::NoModel);
    }
    match level {
        AutomationLevel::Manual => unreachable!(),
        AutomationLevel::Functions => {
            let Some(category) = &selection.category else {
                return invalid("level 1 needs a category");
            };
            if !tagsets.check_label(TagsetKind::Node, category).is_valid() {
                return invalid(format!("unknown category `{category}`"));
            }
            let (children, node) = resolve_children(graph, &selection.children)?;
            out.proposals.push(proposal(
                graph,
                model,
                children,
                node,
                Some(category),
                options.variant,
            )?);
        }
        AutomationLevel::Category => {
            let (children, node) = resolve_children(graph, &selection.children)?;
            out.proposals
                .push(proposal(graph, model, children, node, None, options.variant)?);
        }
        AutomationLevel::Kernels => {
            let free: Vec<bool> = graph
                .tokens()
                .iter()
                .map(|t| graph.parent(NodeRef::Token(t.position)).is_none())
                .collect();
            // scan each run of unattached tokens separately
            let mut start = 0;
            while start < free.len() {
                if !free[start] {
                    start += 1;
                    continue;
                }
                let mut end = start;
                while end < free.len() && free[end] {
                    end += 1;
                }
                out.kernels
                    .extend(kernel_chunk(&graph.tokens()[start..end], &options.classes));
                start = end;
            }
            for span in &out.kernels {
                let children: Vec<NodeRef> = (span.start..=span.end).map(NodeRef::Token).collect();
                out.proposals
                    .push(proposal(graph, model, children, None, None, options.variant)?);
            }
        }
    }
    Ok(out)
}

/// Applies the reliable part of `set`: new phrases are grouped and reliable
/// function labels are set. Unreliable labels are left for the annotator,
/// and so is a reliable head label for a phrase that already has a head.
/// Returns the ids of the created phrases.
pub fn apply_reliable(
    graph: &mut AnnotationGraph,
    tagsets: &TagsetRegistry,
    set: &SuggestionSet,
) -> Result<Vec<NodeId>, GraphError> {
    let mut created = Vec::new();
    for p in &set.proposals {
        let parent = match p.node {
            Some(id) => id,
            None => {
                let id = graph.group(tagsets, &p.children, &p.category)?;
                created.push(id);
                id
            }
        };
        for f in p.functions.iter().filter(|f| f.suggestion.reliable) {
            if f.suggestion.best.function == HEAD
                && graph.children(parent).iter().any(|&c| {
                    c != f.child && graph.attachment(c).is_some_and(|a| a.function == HEAD)
                })
            {
                continue;
            }
            graph.relabel(
                tagsets,
                RelabelTarget::Edge(f.child),
                &f.suggestion.best.function,
            )?;
        }
    }
    Ok(created)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(tags: &[&str]) -> Vec<Token> {
        tags.iter()
            .enumerate()
            .map(|(i, t)| Token {
                position: i as u32 + 1,
                form: format!("w{i}"),
                pos: t.to_string(),
            })
            .collect()
    }

    fn spans(tags: &[&str]) -> Vec<(u32, u32)> {
        kernel_chunk(&tokens(tags), &PosClassMap::default())
            .into_iter()
            .map(|s| (s.start, s.end))
            .collect()
    }

    #[test]
    fn kernels() {
        assert_eq!(spans(&["ART", "ADJA", "NN"]), [(1, 3)]);
        assert_eq!(spans(&["VVFIN"]), []);
        assert_eq!(spans(&["ART", "NN", "ART", "NN"]), [(1, 2), (3, 4)]);
        assert_eq!(spans(&["ART", "ADJA", "VVFIN", "NE", "NE"]), [(4, 5)]);
        assert_eq!(spans(&["ADJA", "ADJA", "NN", "NN"]), [(1, 4)]);
    }

    #[test]
    fn required_fields_shrink_with_level() {
        for w in AutomationLevel::ALL.windows(2) {
            let (lo, hi) = (w[0].required_fields(), w[1].required_fields());
            assert!(hi.len() < lo.len());
            assert!(hi.iter().all(|f| lo.contains(f)));
        }
        assert!(AutomationLevel::try_from(4).is_err());
    }
}
