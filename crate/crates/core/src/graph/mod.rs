//! Argument-structure graphs.
//!
//! A sentence is a sequence of tokens plus phrase nodes connected by labeled
//! primary edges. Primary edges form a forest whose branches may cross the
//! surface order: a phrase does not need to cover a contiguous substring.
//! Secondary links add structure sharing on top of the forest.

mod constituency;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tagset::{TagsetKind, TagsetRegistry, UNLABELED};

pub use constituency::{Constituency, Trace};
pub use validate::{Rule, Severity, Violation};

/// Phrase-node ids start here; token positions live below it.
pub const FIRST_NODE_ID: u32 = 500;

/// Largest sentence the id scheme can hold.
pub const MAX_TOKENS: usize = FIRST_NODE_ID as usize - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(u32);

impl NodeId {
    pub fn new(id: u32) -> Option<Self> {
        (id >= FIRST_NODE_ID).then_some(NodeId(id))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Either a token (by 1-based surface position) or a phrase node.
///
/// On the wire and in files both share one integer id space: tokens are
/// `1..=n`, phrase nodes are `500..`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "u32", try_from = "u32")]
pub enum NodeRef {
    Token(u32),
    Phrase(NodeId),
}

impl NodeRef {
    pub fn id(self) -> u32 {
        match self {
            NodeRef::Token(p) => p,
            NodeRef::Phrase(n) => n.0,
        }
    }

    pub fn from_id(id: u32) -> Option<Self> {
        match id {
            0 => None,
            p if p < FIRST_NODE_ID => Some(NodeRef::Token(p)),
            n => Some(NodeRef::Phrase(NodeId(n))),
        }
    }

    pub fn as_phrase(self) -> Option<NodeId> {
        match self {
            NodeRef::Phrase(n) => Some(n),
            NodeRef::Token(_) => None,
        }
    }
}

impl From<NodeId> for NodeRef {
    fn from(id: NodeId) -> Self {
        NodeRef::Phrase(id)
    }
}

impl From<NodeRef> for u32 {
    fn from(r: NodeRef) -> u32 {
        r.id()
    }
}

impl TryFrom<u32> for NodeRef {
    type Error = String;

    fn try_from(id: u32) -> Result<Self, Self::Error> {
        NodeRef::from_id(id).ok_or_else(|| "0 is not a node id".to_string())
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.id().fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub position: u32,
    pub form: String,
    pub pos: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseNode {
    pub id: NodeId,
    pub category: String,
}

/// Incoming primary edge of a child.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attachment {
    pub parent: NodeId,
    pub function: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimaryEdge {
    pub parent: NodeId,
    pub child: NodeRef,
    pub function: String,
}

/// Directed structure-sharing link, e.g. from an infinitival VP to the
/// controller of its unrealized subject. `function` is [`UNLABELED`] when
/// no label was given.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SecondaryLink {
    pub source: NodeRef,
    pub target: NodeRef,
    pub function: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    InProgress,
    Complete,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::InProgress => "in-progress",
            Status::Complete => "complete",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "in-progress" => Some(Status::InProgress),
            "complete" => Some(Status::Complete),
            _ => None,
        }
    }
}

/// What `relabel` should rename.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelabelTarget {
    /// The category of a phrase node.
    Node(NodeId),
    /// The function of the primary edge entering this child.
    Edge(NodeRef),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkAction {
    Add,
    Remove,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("sentence has no tokens")]
    EmptySentence,
    #[error("sentence has {0} tokens, at most {MAX_TOKENS} are supported")]
    TooManyTokens(usize),
    #[error("token {0} has an empty or unsafe form")]
    InvalidForm(u32),
    #[error("label `{label}` is not in the {kind} tagset")]
    UnknownLabel { kind: TagsetKind, label: String },
    #[error("unknown node {0}")]
    UnknownNode(NodeRef),
    #[error("{0} is a token, a phrase node is required")]
    NotAPhrase(NodeRef),
    #[error("{0} already has a parent")]
    AlreadyAttached(NodeRef),
    #[error("{0} is listed twice")]
    DuplicateChild(NodeRef),
    #[error("a phrase needs at least one child")]
    EmptyGroup,
    #[error("{0} has a parent; ungroup it with force to detach it")]
    HasParent(NodeId),
    #[error("{0} has no incoming edge")]
    NoEdge(NodeRef),
    #[error("attaching {child} below {parent} would create a cycle")]
    WouldCreateCycle { child: NodeRef, parent: NodeId },
    #[error("secondary link from {0} to itself")]
    SelfLink(NodeRef),
    #[error("secondary link {from} -> {target} already exists")]
    DuplicateLink { from: NodeRef, target: NodeRef },
    #[error("no secondary link {from} -> {target} labeled {function}")]
    NoSuchLink {
        from: NodeRef,
        target: NodeRef,
        function: String,
    },
    #[error("link {from} -> {target} duplicates a primary edge")]
    DuplicatesPrimary { from: NodeRef, target: NodeRef },
    #[error("comment contains a line break")]
    InvalidComment,
    #[error("sentence is not complete")]
    NotComplete,
}

/// One annotated sentence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationGraph {
    id: String,
    tokens: Vec<Token>,
    phrases: BTreeMap<NodeId, PhraseNode>,
    edges: BTreeMap<NodeRef, Attachment>,
    secondary: BTreeSet<SecondaryLink>,
    comments: Vec<String>,
    status: Status,
}

fn safe_form(form: &str) -> bool {
    !form.is_empty() && !form.chars().any(|c| c.is_control())
}

fn check(tagsets: &TagsetRegistry, kind: TagsetKind, label: &str) -> Result<(), GraphError> {
    if tagsets.check_label(kind, label).is_valid() {
        Ok(())
    } else {
        Err(GraphError::UnknownLabel {
            kind,
            label: label.to_string(),
        })
    }
}

fn check_function(tagsets: &TagsetRegistry, label: &str) -> Result<(), GraphError> {
    if tagsets.is_edge_function(label) {
        Ok(())
    } else {
        Err(GraphError::UnknownLabel {
            kind: TagsetKind::Edge,
            label: label.to_string(),
        })
    }
}

impl AnnotationGraph {
    /// Creates an unannotated sentence from `(form, pos)` pairs.
    pub fn new<F, P>(
        id: impl Into<String>,
        tokens: impl IntoIterator<Item = (F, P)>,
        tagsets: &TagsetRegistry,
    ) -> Result<Self, GraphError>
    where
        F: Into<String>,
        P: Into<String>,
    {
        let tokens: Vec<Token> = tokens
            .into_iter()
            .enumerate()
            .map(|(i, (form, pos))| Token {
                position: i as u32 + 1,
                form: form.into(),
                pos: pos.into(),
            })
            .collect();
        if tokens.is_empty() {
            return Err(GraphError::EmptySentence);
        }
        if tokens.len() > MAX_TOKENS {
            return Err(GraphError::TooManyTokens(tokens.len()));
        }
        for t in &tokens {
            if !safe_form(&t.form) {
                return Err(GraphError::InvalidForm(t.position));
            }
            check(tagsets, TagsetKind::Pos, &t.pos)?;
        }
        Ok(AnnotationGraph {
            id: id.into(),
            tokens,
            phrases: BTreeMap::new(),
            edges: BTreeMap::new(),
            secondary: BTreeSet::new(),
            comments: Vec::new(),
            status: Status::InProgress,
        })
    }

    /// Assembles a graph from stored parts without any checks. Callers run
    /// [`AnnotationGraph::validate`] afterwards.
    pub(crate) fn from_parts(
        id: String,
        tokens: Vec<Token>,
        phrases: BTreeMap<NodeId, PhraseNode>,
        edges: BTreeMap<NodeRef, Attachment>,
        secondary: BTreeSet<SecondaryLink>,
        comments: Vec<String>,
        status: Status,
    ) -> Self {
        AnnotationGraph {
            id,
            tokens,
            phrases,
            edges,
            secondary,
            comments,
            status,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn token(&self, position: u32) -> Option<&Token> {
        position
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i as usize))
    }

    pub fn phrases(&self) -> impl Iterator<Item = &PhraseNode> {
        self.phrases.values()
    }

    pub fn phrase(&self, id: NodeId) -> Option<&PhraseNode> {
        self.phrases.get(&id)
    }

    pub fn phrase_count(&self) -> usize {
        self.phrases.len()
    }

    pub fn secondary_links(&self) -> impl Iterator<Item = &SecondaryLink> {
        self.secondary.iter()
    }

    pub fn comments(&self) -> &[String] {
        &self.comments
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn contains(&self, node: NodeRef) -> bool {
        match node {
            NodeRef::Token(p) => p >= 1 && (p as usize) <= self.tokens.len(),
            NodeRef::Phrase(id) => self.phrases.contains_key(&id),
        }
    }

    /// All nodes: tokens in surface order followed by phrases in id order.
    pub fn nodes(&self) -> impl Iterator<Item = NodeRef> + '_ {
        self.tokens
            .iter()
            .map(|t| NodeRef::Token(t.position))
            .chain(self.phrases.keys().map(|&id| NodeRef::Phrase(id)))
    }

    pub fn attachment(&self, child: NodeRef) -> Option<&Attachment> {
        self.edges.get(&child)
    }

    pub fn parent(&self, child: NodeRef) -> Option<NodeId> {
        self.edges.get(&child).map(|a| a.parent)
    }

    pub fn primary_edges(&self) -> impl Iterator<Item = PrimaryEdge> + '_ {
        self.edges.iter().map(|(&child, a)| PrimaryEdge {
            parent: a.parent,
            child,
            function: a.function.clone(),
        })
    }

    /// Direct children in id order (tokens first).
    pub fn children(&self, node: NodeId) -> Vec<NodeRef> {
        self.edges
            .iter()
            .filter(|(_, a)| a.parent == node)
            .map(|(&c, _)| c)
            .collect()
    }

    /// Phrase nodes and tokens without a parent.
    pub fn roots(&self) -> Vec<NodeRef> {
        self.nodes().filter(|n| !self.edges.contains_key(n)).collect()
    }

    /// Phrase nodes without a parent.
    pub fn root_phrases(&self) -> Vec<NodeId> {
        self.phrases
            .keys()
            .copied()
            .filter(|id| !self.edges.contains_key(&NodeRef::Phrase(*id)))
            .collect()
    }

    /// Sorted surface positions of all tokens dominated by `node` via
    /// primary edges. A token's yield is itself.
    pub fn yield_of(&self, node: NodeRef) -> Result<Vec<u32>, GraphError> {
        if !self.contains(node) {
            return Err(GraphError::UnknownNode(node));
        }
        let children = self.children_index();
        let mut out = Vec::new();
        let mut stack = vec![node];
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            match n {
                NodeRef::Token(p) => out.push(p),
                NodeRef::Phrase(id) => {
                    if let Some(cs) = children.get(&id) {
                        stack.extend(cs.iter().copied());
                    }
                }
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    /// True iff the yield is an integer interval. Empty yields count as
    /// continuous.
    pub fn is_continuous(&self, node: NodeRef) -> Result<bool, GraphError> {
        Ok(is_interval(&self.yield_of(node)?))
    }

    pub(crate) fn children_index(&self) -> BTreeMap<NodeId, Vec<NodeRef>> {
        let mut index: BTreeMap<NodeId, Vec<NodeRef>> = BTreeMap::new();
        for (&child, a) in &self.edges {
            index.entry(a.parent).or_default().push(child);
        }
        index
    }

    /// True if `ancestor` dominates `node` (reflexively).
    pub fn dominates(&self, ancestor: NodeRef, node: NodeRef) -> bool {
        let mut cur = Some(node);
        let mut steps = 0;
        while let Some(n) = cur {
            if n == ancestor {
                return true;
            }
            steps += 1;
            if steps > self.edges.len() + 1 {
                // cyclic input; only reachable for unvalidated graphs
                return false;
            }
            cur = self.parent(n).map(NodeRef::Phrase);
        }
        false
    }

    fn next_node_id(&self) -> NodeId {
        self.phrases
            .keys()
            .next_back()
            .map(|id| NodeId(id.0 + 1))
            .unwrap_or(NodeId(FIRST_NODE_ID))
    }

    fn require(&self, node: NodeRef) -> Result<(), GraphError> {
        if self.contains(node) {
            Ok(())
        } else {
            Err(GraphError::UnknownNode(node))
        }
    }

    fn require_phrase(&self, node: NodeRef) -> Result<NodeId, GraphError> {
        self.require(node)?;
        node.as_phrase().ok_or(GraphError::NotAPhrase(node))
    }

    /// Groups parentless tokens and/or phrases into a new phrase. Children
    /// need not be adjacent in the surface string. New edges are unlabeled.
    pub fn group(
        &mut self,
        tagsets: &TagsetRegistry,
        children: &[NodeRef],
        category: &str,
    ) -> Result<NodeId, GraphError> {
        if children.is_empty() {
            return Err(GraphError::EmptyGroup);
        }
        check(tagsets, TagsetKind::Node, category)?;
        let mut seen = BTreeSet::new();
        for &c in children {
            self.require(c)?;
            if !seen.insert(c) {
                return Err(GraphError::DuplicateChild(c));
            }
            if self.edges.contains_key(&c) {
                return Err(GraphError::AlreadyAttached(c));
            }
        }
        let id = self.next_node_id();
        self.phrases.insert(
            id,
            PhraseNode {
                id,
                category: category.to_string(),
            },
        );
        for &c in children {
            self.edges.insert(
                c,
                Attachment {
                    parent: id,
                    function: UNLABELED.to_string(),
                },
            );
        }
        Ok(id)
    }

    /// Removes a phrase node. Its children become parentless and secondary
    /// links touching it disappear. A node that still has a parent is only
    /// removed with `force`.
    pub fn ungroup(&mut self, node: NodeId, force: bool) -> Result<(), GraphError> {
        let r = NodeRef::Phrase(node);
        self.require(r)?;
        if self.edges.contains_key(&r) {
            if !force {
                return Err(GraphError::HasParent(node));
            }
            self.edges.remove(&r);
        }
        self.edges.retain(|_, a| a.parent != node);
        self.secondary.retain(|l| l.source != r && l.target != r);
        self.phrases.remove(&node);
        Ok(())
    }

    pub fn relabel(
        &mut self,
        tagsets: &TagsetRegistry,
        target: RelabelTarget,
        label: &str,
    ) -> Result<(), GraphError> {
        match target {
            RelabelTarget::Node(id) => {
                self.require(NodeRef::Phrase(id))?;
                check(tagsets, TagsetKind::Node, label)?;
                self.phrases.get_mut(&id).expect("checked").category = label.to_string();
            }
            RelabelTarget::Edge(child) => {
                self.require(child)?;
                check_function(tagsets, label)?;
                let edge = self.edges.get_mut(&child).ok_or(GraphError::NoEdge(child))?;
                edge.function = label.to_string();
            }
        }
        Ok(())
    }

    /// Moves `node` below `new_parent`, keeping the function of its old
    /// edge (or `--` if it had none).
    pub fn reattach(&mut self, node: NodeRef, new_parent: NodeId) -> Result<(), GraphError> {
        self.require(node)?;
        self.require_phrase(NodeRef::Phrase(new_parent))?;
        if self.dominates(node, NodeRef::Phrase(new_parent)) {
            return Err(GraphError::WouldCreateCycle {
                child: node,
                parent: new_parent,
            });
        }
        let parent_ref = NodeRef::Phrase(new_parent);
        if self
            .secondary
            .iter()
            .any(|l| l.source == parent_ref && l.target == node)
        {
            return Err(GraphError::DuplicatesPrimary {
                from: parent_ref,
                target: node,
            });
        }
        let function = self
            .edges
            .get(&node)
            .map(|a| a.function.clone())
            .unwrap_or_else(|| UNLABELED.to_string());
        self.edges.insert(
            node,
            Attachment {
                parent: new_parent,
                function,
            },
        );
        Ok(())
    }

    /// Removes the incoming primary edge of `node`, making it a root.
    pub fn detach(&mut self, node: NodeRef) -> Result<(), GraphError> {
        self.require(node)?;
        self.edges
            .remove(&node)
            .map(|_| ())
            .ok_or(GraphError::NoEdge(node))
    }

    pub fn set_secondary(
        &mut self,
        tagsets: &TagsetRegistry,
        source: NodeRef,
        target: NodeRef,
        function: &str,
        action: LinkAction,
    ) -> Result<(), GraphError> {
        self.require(source)?;
        self.require(target)?;
        if source == target {
            return Err(GraphError::SelfLink(source));
        }
        match action {
            LinkAction::Add => {
                check_function(tagsets, function)?;
                if self
                    .secondary
                    .iter()
                    .any(|l| l.source == source && l.target == target)
                {
                    return Err(GraphError::DuplicateLink { from: source, target });
                }
                if source.as_phrase().is_some() && self.parent(target) == source.as_phrase() {
                    return Err(GraphError::DuplicatesPrimary { from: source, target });
                }
                self.secondary.insert(SecondaryLink {
                    source,
                    target,
                    function: function.to_string(),
                });
            }
            LinkAction::Remove => {
                let link = SecondaryLink {
                    source,
                    target,
                    function: function.to_string(),
                };
                if !self.secondary.remove(&link) {
                    return Err(GraphError::NoSuchLink {
                        from: source,
                        target,
                        function: function.to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn add_comment(&mut self, text: impl Into<String>) -> Result<(), GraphError> {
        let text = text.into();
        if text.contains(['\n', '\r']) {
            return Err(GraphError::InvalidComment);
        }
        self.comments.push(text);
        Ok(())
    }

    /// Sets the status. Marking a sentence complete succeeds only when it
    /// validates without errors under completion rules.
    pub fn set_status(
        &mut self,
        tagsets: &TagsetRegistry,
        status: Status,
    ) -> Result<(), Vec<Violation>> {
        if status == Status::Complete {
            let errors: Vec<Violation> = self
                .validate_as(tagsets, Status::Complete)
                .into_iter()
                .filter(|v| v.severity == Severity::Error)
                .collect();
            if !errors.is_empty() {
                return Err(errors);
            }
        }
        self.status = status;
        Ok(())
    }

    /// Labels used anywhere in this graph, for tagset usage checks.
    pub fn uses_label(&self, kind: TagsetKind, label: &str) -> bool {
        match kind {
            TagsetKind::Pos => self.tokens.iter().any(|t| t.pos == label),
            TagsetKind::Node => self.phrases.values().any(|p| {
                p.category == label
                    || p.category.strip_prefix(crate::tagset::COORDINATION_PREFIX)
                        == Some(label)
            }),
            TagsetKind::Edge => {
                self.edges.values().any(|a| a.function == label)
                    || self.secondary.iter().any(|l| l.function == label)
            }
        }
    }
}

pub(crate) fn is_interval(sorted: &[u32]) -> bool {
    match (sorted.first(), sorted.last()) {
        (Some(&a), Some(&b)) => (b - a) as usize + 1 == sorted.len(),
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagset::default_tagsets;

    fn tok(p: u32) -> NodeRef {
        NodeRef::Token(p)
    }

    fn example_two(ts: &TagsetRegistry) -> AnnotationGraph {
        AnnotationGraph::new(
            "s2",
            [
                ("schade", "ADJD"),
                ("daß", "KOUS"),
                ("kein", "ART"),
                ("Arzt", "NN"),
                ("anwesend", "ADJD"),
                ("ist", "VAFIN"),
                ("der", "PRELS"),
                ("sich", "PRF"),
                ("auskennt", "VVFIN"),
            ],
            ts,
        )
        .unwrap()
    }

    #[test]
    fn new_sentence() {
        let ts = default_tagsets();
        let g = AnnotationGraph::new("s1", [("er", "PPER"), ("weint", "VVFIN")], &ts).unwrap();
        assert_eq!(g.tokens().len(), 2);
        assert_eq!(g.tokens()[1].position, 2);
        assert_eq!(g.status(), Status::InProgress);
        assert_eq!(g.phrase_count(), 0);

        let empty: [(&str, &str); 0] = [];
        assert_eq!(
            AnnotationGraph::new("s2", empty, &ts).unwrap_err(),
            GraphError::EmptySentence
        );
        let err = AnnotationGraph::new("s3", [("x", "XYZ")], &ts).unwrap_err();
        assert_eq!(
            err,
            GraphError::UnknownLabel {
                kind: TagsetKind::Pos,
                label: "XYZ".into()
            }
        );
        assert!(err.to_string().contains("XYZ") && err.to_string().contains("pos"));
    }

    #[test]
    fn group_and_attach_errors() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let np = g.group(&ts, &[tok(3), tok(4)], "NP").unwrap();
        assert_eq!(np.get(), 500);
        assert_eq!(g.children(np), vec![tok(3), tok(4)]);
        assert!(g.primary_edges().all(|e| e.function == UNLABELED));
        assert_eq!(
            g.group(&ts, &[tok(3)], "NP").unwrap_err(),
            GraphError::AlreadyAttached(tok(3))
        );
        assert_eq!(
            g.group(&ts, &[tok(1), tok(1)], "NP").unwrap_err(),
            GraphError::DuplicateChild(tok(1))
        );
        assert!(matches!(
            g.group(&ts, &[tok(1)], "XP").unwrap_err(),
            GraphError::UnknownLabel { .. }
        ));
        assert_eq!(
            g.group(&ts, &[tok(42)], "NP").unwrap_err(),
            GraphError::UnknownNode(tok(42))
        );
    }

    #[test]
    fn discontinuous_group_is_allowed() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let rc = g.group(&ts, &[tok(7), tok(8), tok(9)], "S").unwrap();
        let np = g
            .group(&ts, &[tok(3), tok(4), NodeRef::Phrase(rc)], "NP")
            .unwrap();
        assert_eq!(g.yield_of(np.into()).unwrap(), vec![3, 4, 7, 8, 9]);
        assert!(!g.is_continuous(np.into()).unwrap());
        assert!(g.is_continuous(rc.into()).unwrap());
    }

    #[test]
    fn ungroup_restores_prior_state() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let before = g.clone();
        let np = g.group(&ts, &[tok(3), tok(4)], "NP").unwrap();
        g.ungroup(np, false).unwrap();
        assert_eq!(g, before);
        assert_eq!(
            g.ungroup(NodeId::new(999).unwrap(), false).unwrap_err(),
            GraphError::UnknownNode(NodeRef::Phrase(NodeId(999)))
        );
    }

    #[test]
    fn ungroup_keeps_phrase_children() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let np = g.group(&ts, &[tok(3), tok(4)], "NP").unwrap();
        let s = g.group(&ts, &[tok(2), np.into()], "S").unwrap();
        assert_eq!(g.ungroup(np, false).unwrap_err(), GraphError::HasParent(np));
        g.ungroup(s, false).unwrap();
        assert!(g.phrase(np).is_some());
        assert_eq!(g.parent(np.into()), None);
        assert_eq!(g.children(np).len(), 2);
    }

    #[test]
    fn relabel_checks_tagsets() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let vp = g.group(&ts, &[tok(5), tok(6)], "VP").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(5)), "SB").unwrap();
        assert_eq!(g.attachment(tok(5)).unwrap().function, "SB");
        g.relabel(&ts, RelabelTarget::Node(vp), "CVP").unwrap();
        assert_eq!(g.phrase(vp).unwrap().category, "CVP");
        assert!(matches!(
            g.relabel(&ts, RelabelTarget::Edge(tok(5)), "XYZ"),
            Err(GraphError::UnknownLabel { .. })
        ));
        assert_eq!(
            g.relabel(&ts, RelabelTarget::Edge(tok(1)), "SB"),
            Err(GraphError::NoEdge(tok(1)))
        );
    }

    #[test]
    fn reattach_keeps_label_and_rejects_cycles() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let vp = g.group(&ts, &[tok(5), tok(6)], "VP").unwrap();
        let s = g.group(&ts, &[tok(2), vp.into()], "S").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(5)), "MO").unwrap();
        g.reattach(tok(5), s).unwrap();
        assert_eq!(g.parent(tok(5)), Some(s));
        assert_eq!(g.attachment(tok(5)).unwrap().function, "MO");
        assert_eq!(
            g.reattach(s.into(), vp).unwrap_err(),
            GraphError::WouldCreateCycle {
                child: s.into(),
                parent: vp
            }
        );
        assert_eq!(
            g.reattach(vp.into(), vp).unwrap_err(),
            GraphError::WouldCreateCycle {
                child: vp.into(),
                parent: vp
            }
        );
    }

    #[test]
    fn secondary_links() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new(
            "s3",
            [
                ("er", "PPER"),
                ("bat", "VVFIN"),
                ("mich", "PPER"),
                ("zu", "PTKZU"),
                ("kommen", "VVINF"),
            ],
            &ts,
        )
        .unwrap();
        let vp = g.group(&ts, &[tok(4), tok(5)], "VP").unwrap();
        g.set_secondary(&ts, vp.into(), tok(3), "SB", LinkAction::Add)
            .unwrap();
        assert_eq!(g.secondary_links().count(), 1);
        assert_eq!(
            g.set_secondary(&ts, vp.into(), tok(3), "SB", LinkAction::Add),
            Err(GraphError::DuplicateLink {
                from: vp.into(),
                target: tok(3)
            })
        );
        assert_eq!(
            g.set_secondary(&ts, vp.into(), vp.into(), "SB", LinkAction::Add),
            Err(GraphError::SelfLink(vp.into()))
        );
        assert_eq!(
            g.set_secondary(&ts, vp.into(), tok(4), "SB", LinkAction::Add),
            Err(GraphError::DuplicatesPrimary {
                from: vp.into(),
                target: tok(4)
            })
        );
        assert!(matches!(
            g.set_secondary(&ts, vp.into(), tok(1), "SB", LinkAction::Remove),
            Err(GraphError::NoSuchLink { .. })
        ));
        // links do not change yields
        assert_eq!(g.yield_of(vp.into()).unwrap(), vec![4, 5]);
        g.set_secondary(&ts, vp.into(), tok(3), "SB", LinkAction::Remove)
            .unwrap();
        assert_eq!(g.secondary_links().count(), 0);
    }

    #[test]
    fn yields_and_childless_nodes() {
        let ts = default_tagsets();
        let mut g = example_two(&ts);
        let np = g.group(&ts, &[tok(3), tok(4)], "NP").unwrap();
        assert_eq!(g.yield_of(np.into()).unwrap(), vec![3, 4]);
        assert!(g.is_continuous(np.into()).unwrap());
        let s = g.group(&ts, &[tok(1)], "S").unwrap();
        g.reattach(tok(1), np).unwrap();
        assert_eq!(g.yield_of(s.into()).unwrap(), Vec::<u32>::new());
        assert!(g.is_continuous(s.into()).unwrap());
        assert_eq!(
            g.yield_of(NodeRef::Phrase(NodeId(999))),
            Err(GraphError::UnknownNode(NodeRef::Phrase(NodeId(999))))
        );
    }

    #[test]
    fn node_ref_ids() {
        assert_eq!(NodeRef::from_id(3), Some(NodeRef::Token(3)));
        assert_eq!(NodeRef::from_id(500), Some(NodeRef::Phrase(NodeId(500))));
        assert_eq!(NodeRef::from_id(0), None);
        assert!(NodeRef::Token(499) < NodeRef::Phrase(NodeId(500)));
    }
}
