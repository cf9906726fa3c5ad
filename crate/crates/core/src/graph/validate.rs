use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AnnotationGraph, NodeRef, Status};
use crate::tagset::{LabelCheck, TagsetKind, TagsetRegistry, UNLABELED};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

/// The closed set of validation rules, in reporting order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    DanglingReference,
    Cycle,
    UnknownLabel,
    MultipleHeads,
    SecondarySelfLink,
    SecondaryDuplicatesPrimary,
    ChildlessPhrase,
    NoSingleRoot,
    UnattachedToken,
    UnlabeledEdge,
    DegenerateCoordination,
}

impl Rule {
    pub const ALL: [Rule; 11] = [
        Rule::DanglingReference,
        Rule::Cycle,
        Rule::UnknownLabel,
        Rule::MultipleHeads,
        Rule::SecondarySelfLink,
        Rule::SecondaryDuplicatesPrimary,
        Rule::ChildlessPhrase,
        Rule::NoSingleRoot,
        Rule::UnattachedToken,
        Rule::UnlabeledEdge,
        Rule::DegenerateCoordination,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::DanglingReference => "dangling-reference",
            Rule::Cycle => "cycle",
            Rule::UnknownLabel => "unknown-label",
            Rule::MultipleHeads => "multiple-heads",
            Rule::SecondarySelfLink => "secondary-self-link",
            Rule::SecondaryDuplicatesPrimary => "secondary-duplicates-primary",
            Rule::ChildlessPhrase => "childless-phrase",
            Rule::NoSingleRoot => "no-single-root",
            Rule::UnattachedToken => "unattached-token",
            Rule::UnlabeledEdge => "unlabeled-edge",
            Rule::DegenerateCoordination => "degenerate-coordination",
        }
    }

    /// Integrity rules that no stored graph may violate, whatever its
    /// status. The remaining rules describe unfinished annotation.
    pub fn is_integrity(self) -> bool {
        matches!(
            self,
            Rule::DanglingReference
                | Rule::Cycle
                | Rule::UnknownLabel
                | Rule::MultipleHeads
                | Rule::SecondarySelfLink
                | Rule::SecondaryDuplicatesPrimary
        )
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub severity: Severity,
    pub rule: Rule,
    pub message: String,
    pub nodes: Vec<NodeRef>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.rule, self.message)
    }
}

impl AnnotationGraph {
    /// Checks the graph against the tagsets and the rules for its current
    /// status. The result is deterministic and ordered by rule, then node.
    pub fn validate(&self, tagsets: &TagsetRegistry) -> Vec<Violation> {
        self.validate_as(tagsets, self.status)
    }

    /// Like [`validate`](Self::validate) but as if the graph had `status`.
    pub fn validate_as(&self, tagsets: &TagsetRegistry, status: Status) -> Vec<Violation> {
        let complete = status == Status::Complete;
        let mut out = Vec::new();
        let mut push = |severity, rule, message: String, nodes: Vec<NodeRef>| {
            out.push(Violation {
                severity,
                rule,
                message,
                nodes,
            })
        };

        // references
        let mut dangling = false;
        for (&child, a) in &self.edges {
            if !self.contains(child) || !self.phrases.contains_key(&a.parent) {
                dangling = true;
                push(
                    Severity::Error,
                    Rule::DanglingReference,
                    format!("edge {} -> {child} refers to a missing node", a.parent),
                    vec![child],
                );
            }
        }
        for l in &self.secondary {
            if !self.contains(l.source) || !self.contains(l.target) {
                dangling = true;
                push(
                    Severity::Error,
                    Rule::DanglingReference,
                    format!("link {} -> {} refers to a missing node", l.source, l.target),
                    vec![l.source, l.target],
                );
            }
        }

        // cycles: walk up from every phrase
        let mut on_cycle = BTreeSet::new();
        for &id in self.phrases.keys() {
            let start = NodeRef::Phrase(id);
            let mut cur = self.parent(start);
            let mut steps = 0;
            while let Some(p) = cur {
                if NodeRef::Phrase(p) == start {
                    on_cycle.insert(start);
                    break;
                }
                steps += 1;
                if steps > self.phrases.len() {
                    break;
                }
                cur = self.parent(NodeRef::Phrase(p));
            }
        }
        if !on_cycle.is_empty() {
            push(
                Severity::Error,
                Rule::Cycle,
                "primary edges form a cycle".to_string(),
                on_cycle.iter().copied().collect(),
            );
        }

        // labels
        for t in &self.tokens {
            if !tagsets.pos().contains(&t.pos) {
                push(
                    Severity::Error,
                    Rule::UnknownLabel,
                    format!("token {} has unknown part of speech `{}`", t.position, t.pos),
                    vec![NodeRef::Token(t.position)],
                );
            }
        }
        for p in self.phrases.values() {
            if tagsets.check_label(TagsetKind::Node, &p.category) == LabelCheck::Invalid {
                push(
                    Severity::Error,
                    Rule::UnknownLabel,
                    format!("node {} has unknown category `{}`", p.id, p.category),
                    vec![NodeRef::Phrase(p.id)],
                );
            }
        }
        for (&child, a) in &self.edges {
            if !tagsets.is_edge_function(&a.function) {
                push(
                    Severity::Error,
                    Rule::UnknownLabel,
                    format!("edge into {child} has unknown function `{}`", a.function),
                    vec![child],
                );
            }
        }
        for l in &self.secondary {
            if !tagsets.is_edge_function(&l.function) {
                push(
                    Severity::Error,
                    Rule::UnknownLabel,
                    format!(
                        "link {} -> {} has unknown function `{}`",
                        l.source, l.target, l.function
                    ),
                    vec![l.source, l.target],
                );
            }
        }

        let children = self.children_index();

        for (&id, cs) in &children {
            let heads: Vec<NodeRef> = cs
                .iter()
                .copied()
                .filter(|c| self.edges[c].function == "HD")
                .collect();
            if heads.len() > 1 {
                push(
                    Severity::Error,
                    Rule::MultipleHeads,
                    format!("node {id} has {} edges labeled HD", heads.len()),
                    std::iter::once(NodeRef::Phrase(id)).chain(heads).collect(),
                );
            }
        }

        for l in &self.secondary {
            if l.source == l.target {
                push(
                    Severity::Error,
                    Rule::SecondarySelfLink,
                    format!("link from {} to itself", l.source),
                    vec![l.source],
                );
            } else if l.source.as_phrase().is_some() && self.parent(l.target) == l.source.as_phrase()
            {
                push(
                    Severity::Error,
                    Rule::SecondaryDuplicatesPrimary,
                    format!("link {} -> {} duplicates a primary edge", l.source, l.target),
                    vec![l.source, l.target],
                );
            }
        }

        for &id in self.phrases.keys() {
            if !children.contains_key(&id) {
                push(
                    Severity::Error,
                    Rule::ChildlessPhrase,
                    format!("node {id} has no children"),
                    vec![NodeRef::Phrase(id)],
                );
            }
        }

        if complete && !dangling && on_cycle.is_empty() {
            let roots = self.root_phrases();
            let spanning = roots.len() == 1
                && self
                    .yield_of(NodeRef::Phrase(roots[0]))
                    .map(|y| y.len() == self.tokens.len())
                    .unwrap_or(false);
            if !spanning {
                push(
                    Severity::Error,
                    Rule::NoSingleRoot,
                    format!(
                        "a complete sentence needs one root covering all tokens, found {} root phrase(s)",
                        roots.len()
                    ),
                    roots.into_iter().map(NodeRef::Phrase).collect(),
                );
            }
        }

        let progress_severity = if complete {
            Severity::Error
        } else {
            Severity::Warning
        };
        for t in &self.tokens {
            let r = NodeRef::Token(t.position);
            if !self.edges.contains_key(&r) {
                push(
                    progress_severity,
                    Rule::UnattachedToken,
                    format!("token {} (`{}`) is not attached", t.position, t.form),
                    vec![r],
                );
            }
        }
        for (&child, a) in &self.edges {
            if a.function == UNLABELED {
                push(
                    progress_severity,
                    Rule::UnlabeledEdge,
                    format!("edge {} -> {child} has no function", a.parent),
                    vec![child],
                );
            }
        }

        for p in self.phrases.values() {
            let coordinated = matches!(
                tagsets.check_label(TagsetKind::Node, &p.category),
                LabelCheck::ValidCoordination(_)
            );
            let n = children.get(&p.id).map_or(0, Vec::len);
            if coordinated && n < 2 {
                push(
                    Severity::Warning,
                    Rule::DegenerateCoordination,
                    format!("coordination {} has {n} conjunct(s)", p.id),
                    vec![NodeRef::Phrase(p.id)],
                );
            }
        }

        out.sort_by(|a, b| (a.rule, &a.nodes).cmp(&(b.rule, &b.nodes)));
        out
    }

    /// Integrity violations only; see [`Rule::is_integrity`].
    pub fn integrity_violations(&self, tagsets: &TagsetRegistry) -> Vec<Violation> {
        self.validate(tagsets)
            .into_iter()
            .filter(|v| v.rule.is_integrity())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{NodeId, RelabelTarget};
    use crate::tagset::default_tagsets;

    fn tok(p: u32) -> NodeRef {
        NodeRef::Token(p)
    }

    #[test]
    fn two_heads_is_an_error() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("x", [("a", "NN"), ("b", "NN")], &ts).unwrap();
        let np = g.group(&ts, &[tok(1), tok(2)], "NP").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(1)), "HD").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(2)), "HD").unwrap();
        let v = g.validate(&ts);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::MultipleHeads);
        assert_eq!(v[0].severity, Severity::Error);
        assert_eq!(v[0].nodes[0], NodeRef::Phrase(np));
    }

    #[test]
    fn degenerate_coordination_warns() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("x", [("a", "VVFIN"), ("b", "NN")], &ts).unwrap();
        let cvp = g.group(&ts, &[tok(1)], "CVP").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(1)), "CJ").unwrap();
        let v: Vec<_> = g
            .validate(&ts)
            .into_iter()
            .filter(|v| v.rule == Rule::DegenerateCoordination)
            .collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].severity, Severity::Warning);
        assert_eq!(v[0].nodes, vec![NodeRef::Phrase(cvp)]);
    }

    #[test]
    fn in_progress_vs_complete() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("x", [("er", "PPER"), ("weint", "VVFIN")], &ts).unwrap();
        let warnings = g.validate(&ts);
        assert!(warnings.iter().all(|v| v.severity == Severity::Warning));
        assert_eq!(warnings.len(), 2);

        let s = g.group(&ts, &[tok(1), tok(2)], "S").unwrap();
        let errs = g.set_status(&ts, Status::Complete).unwrap_err();
        assert!(errs.iter().all(|v| v.rule == Rule::UnlabeledEdge));
        g.relabel(&ts, RelabelTarget::Edge(tok(1)), "SB").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(2)), "HD").unwrap();
        g.set_status(&ts, Status::Complete).unwrap();
        assert!(g.validate(&ts).is_empty());
        let _ = s;
    }

    #[test]
    fn multiple_roots_block_completion() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("x", [("a", "NN"), ("b", "NN")], &ts).unwrap();
        g.group(&ts, &[tok(1)], "NP").unwrap();
        g.group(&ts, &[tok(2)], "NP").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(1)), "NK").unwrap();
        g.relabel(&ts, RelabelTarget::Edge(tok(2)), "NK").unwrap();
        let errs = g.set_status(&ts, Status::Complete).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].rule, Rule::NoSingleRoot);
    }

    #[test]
    fn childless_phrase_is_error() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("x", [("a", "NN"), ("b", "NN")], &ts).unwrap();
        let a = g.group(&ts, &[tok(1)], "NP").unwrap();
        let b = g.group(&ts, &[tok(2)], "NP").unwrap();
        g.reattach(tok(1), b).unwrap();
        let v: Vec<_> = g
            .validate(&ts)
            .into_iter()
            .filter(|v| v.rule == Rule::ChildlessPhrase)
            .collect();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].nodes, vec![NodeRef::Phrase(a)]);
    }

    #[test]
    fn detects_cycles_in_raw_graphs() {
        use std::collections::{BTreeMap, BTreeSet};
        let ts = default_tagsets();
        let g = AnnotationGraph::new("x", [("a", "NN")], &ts).unwrap();
        let n500 = NodeId::new(500).unwrap();
        let n501 = NodeId::new(501).unwrap();
        let mut phrases = BTreeMap::new();
        for id in [n500, n501] {
            phrases.insert(
                id,
                crate::graph::PhraseNode {
                    id,
                    category: "NP".into(),
                },
            );
        }
        let mut edges = BTreeMap::new();
        let att = |p| crate::graph::Attachment {
            parent: p,
            function: "NK".into(),
        };
        edges.insert(NodeRef::Phrase(n500), att(n501));
        edges.insert(NodeRef::Phrase(n501), att(n500));
        edges.insert(tok(1), att(n500));
        let raw = AnnotationGraph::from_parts(
            "x".into(),
            g.tokens().to_vec(),
            phrases,
            edges,
            BTreeSet::new(),
            vec![],
            Status::InProgress,
        );
        let v = raw.validate(&ts);
        assert!(v.iter().any(|v| v.rule == Rule::Cycle));
    }

    #[test]
    fn validate_is_deterministic() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("x", [("a", "NN"), ("b", "NN"), ("c", "NN")], &ts).unwrap();
        g.group(&ts, &[tok(3), tok(1)], "CNP").unwrap();
        assert_eq!(g.validate(&ts), g.clone().validate(&ts));
    }
}
