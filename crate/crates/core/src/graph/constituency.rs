//! Recovery of a context-free backbone from an argument-structure graph.
//!
//! Discontinuous material is lifted to the parent of the node it belongs to
//! until every node covers an interval of the surface string. Each lifting
//! step is recorded as a trace so the original attachment can be restored.

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{is_interval, AnnotationGraph, GraphError, NodeId, NodeRef, Status};

/// One lifting step: `fillers` were children of `original_parent` and now
/// hang below `new_parent`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub fillers: Vec<NodeRef>,
    pub original_parent: NodeId,
    pub new_parent: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constituency {
    /// Projective version of the input. Secondary links are dropped.
    pub tree: AnnotationGraph,
    pub traces: Vec<Trace>,
}

impl AnnotationGraph {
    /// Converts a complete graph into a projective tree plus trace table.
    ///
    /// The lowest discontinuous node (smallest height, then smallest id) is
    /// processed first. Its children are split into maximal blocks that are
    /// adjacent in the surface string. The block holding the `HD` child stays;
    /// without a head the block with the most children stays, leftmost on
    /// ties. All other blocks move to the node's parent. Only the processed
    /// node's yield changes, so every originally discontinuous node is
    /// processed exactly once and yields exactly one trace.
    pub fn to_constituency(&self) -> Result<Constituency, GraphError> {
        if self.status != Status::Complete {
            return Err(GraphError::NotComplete);
        }
        let mut tree = self.clone();
        tree.secondary.clear();
        let mut traces = Vec::new();

        while let Some(node) = lowest_discontinuous(&tree) {
            let parent = tree
                .parent(NodeRef::Phrase(node))
                .expect("the root of a complete graph spans the sentence");

            let mut children: Vec<(NodeRef, u32, u32)> = tree
                .children(node)
                .into_iter()
                .map(|c| {
                    let y = tree.yield_of(c).expect("child exists");
                    (c, y[0], *y.last().unwrap())
                })
                .collect();
            children.sort_by_key(|&(c, start, _)| (start, c));

            let mut blocks: Vec<Vec<NodeRef>> = Vec::new();
            let mut prev_end = None;
            for (c, start, end) in children {
                match (prev_end, blocks.last_mut()) {
                    (Some(e), Some(block)) if start == e + 1 => block.push(c),
                    _ => blocks.push(vec![c]),
                }
                prev_end = Some(end);
            }

            let keep = blocks
                .iter()
                .position(|b| {
                    b.iter()
                        .any(|c| tree.attachment(*c).is_some_and(|a| a.function == "HD"))
                })
                .unwrap_or_else(|| {
                    let most = blocks.iter().map(Vec::len).max().unwrap_or(0);
                    blocks.iter().position(|b| b.len() == most).unwrap_or(0)
                });

            let fillers: Vec<NodeRef> = blocks
                .into_iter()
                .enumerate()
                .filter(|&(i, _)| i != keep)
                .flat_map(|(_, b)| b)
                .collect();
            for &f in &fillers {
                let function = tree.edges[&f].function.clone();
                tree.edges.insert(f, super::Attachment { parent, function });
            }
            traces.push(Trace {
                fillers,
                original_parent: node,
                new_parent: parent,
            });
        }

        Ok(Constituency { tree, traces })
    }
}

fn lowest_discontinuous(g: &AnnotationGraph) -> Option<NodeId> {
    let children = g.children_index();
    let mut heights: BTreeMap<NodeId, usize> = BTreeMap::new();
    fn height(
        id: NodeId,
        children: &BTreeMap<NodeId, Vec<NodeRef>>,
        memo: &mut BTreeMap<NodeId, usize>,
    ) -> usize {
        if let Some(&h) = memo.get(&id) {
            return h;
        }
        let h = 1 + children
            .get(&id)
            .into_iter()
            .flatten()
            .map(|c| match c {
                NodeRef::Token(_) => 0,
                NodeRef::Phrase(p) => height(*p, children, memo),
            })
            .max()
            .unwrap_or(0);
        memo.insert(id, h);
        h
    }
    g.phrases
        .keys()
        .filter(|&&id| {
            let y = g.yield_of(NodeRef::Phrase(id)).expect("phrase exists");
            !is_interval(&y)
        })
        .map(|&id| (height(id, &children, &mut heights), id))
        .min()
        .map(|(_, id)| id)
}

impl Constituency {
    /// Bracketed rendering, children in surface order:
    /// `(S (NP:SB (ART:NK kein) (NN:NK Arzt)) ...)`.
    pub fn to_brackets(&self) -> String {
        let g = &self.tree;
        let mut out = String::new();
        let roots = g.root_phrases();
        for (i, r) in roots.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write_node(g, NodeRef::Phrase(*r), &mut out);
        }
        out
    }
}

fn write_node(g: &AnnotationGraph, node: NodeRef, out: &mut String) {
    let function = g
        .attachment(node)
        .map(|a| format!(":{}", a.function))
        .unwrap_or_default();
    match node {
        NodeRef::Token(p) => {
            let t = g.token(p).expect("token exists");
            let _ = write!(out, "({}{} {})", t.pos, function, t.form);
        }
        NodeRef::Phrase(id) => {
            let _ = write!(out, "({}{}", g.phrases[&id].category, function);
            let mut cs: Vec<(u32, NodeRef)> = g
                .children(id)
                .into_iter()
                .map(|c| (g.yield_of(c).ok().and_then(|y| y.first().copied()).unwrap_or(0), c))
                .collect();
            cs.sort();
            for (_, c) in cs {
                out.push(' ');
                write_node(g, c, out);
            }
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RelabelTarget;
    use crate::tagset::default_tagsets;

    fn tok(p: u32) -> NodeRef {
        NodeRef::Token(p)
    }

    #[test]
    fn requires_complete_graph() {
        let ts = default_tagsets();
        let g = AnnotationGraph::new("x", [("a", "NN")], &ts).unwrap();
        assert_eq!(g.to_constituency().unwrap_err(), GraphError::NotComplete);
    }

    #[test]
    fn projective_graph_is_a_fixpoint() {
        let ts = default_tagsets();
        let mut g =
            AnnotationGraph::new("x", [("der", "ART"), ("Mann", "NN"), ("weint", "VVFIN")], &ts)
                .unwrap();
        let np = g.group(&ts, &[tok(1), tok(2)], "NP").unwrap();
        g.group(&ts, &[np.into(), tok(3)], "S").unwrap();
        for (c, f) in [(tok(1), "NK"), (tok(2), "NK"), (np.into(), "SB"), (tok(3), "HD")] {
            g.relabel(&ts, RelabelTarget::Edge(c), f).unwrap();
        }
        g.set_status(&ts, Status::Complete).unwrap();
        let c = g.to_constituency().unwrap();
        assert!(c.traces.is_empty());
        assert_eq!(c.tree, g);
        assert_eq!(
            c.to_brackets(),
            "(S (NP:SB (ART:NK der) (NN:NK Mann)) (VVFIN:HD weint))"
        );
    }
}
