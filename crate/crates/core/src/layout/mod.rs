//! Geometry of a sentence drawing.
//!
//! Tokens sit on a baseline in surface order, one grid step apart. A phrase
//! node is placed above the midpoint between its leftmost and rightmost
//! direct children, one row per level of depth. Edges are drawn as
//! orthogonal polylines, so discontinuous phrases produce visible
//! crossings. Token order is never changed.

mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{AnnotationGraph, NodeId, NodeRef};

pub use svg::render_svg;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    /// Horizontal distance between neighbouring tokens.
    pub grid: f64,
    /// Vertical distance between depth levels.
    pub row_height: f64,
    pub margin: f64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            grid: 80.0,
            row_height: 60.0,
            margin: 40.0,
        }
    }
}

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAnchor {
    pub position: u32,
    pub x: f64,
    pub y: f64,
    pub form: String,
    pub pos: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAnchor {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
    pub depth: u32,
    pub category: String,
    /// Phrase without children, drawn with a warning marker.
    pub childless: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGeometry {
    pub parent: NodeId,
    pub child: NodeRef,
    pub function: String,
    pub points: Vec<Point>,
    pub label: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub source: NodeRef,
    pub target: NodeRef,
    pub function: String,
    pub points: Vec<Point>,
    pub label: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub width: f64,
    pub height: f64,
    pub baseline: f64,
    pub tokens: Vec<TokenAnchor>,
    pub nodes: Vec<NodeAnchor>,
    pub edges: Vec<EdgeGeometry>,
    /// Secondary links, drawn dashed.
    pub links: Vec<LinkGeometry>,
}

/// Space below the baseline for the form and part-of-speech lines.
const TOKEN_TEXT_HEIGHT: f64 = 40.0;

fn depths(graph: &AnnotationGraph) -> BTreeMap<NodeId, u32> {
    fn depth(
        id: NodeId,
        children: &BTreeMap<NodeId, Vec<NodeRef>>,
        memo: &mut BTreeMap<NodeId, u32>,
    ) -> u32 {
        if let Some(&d) = memo.get(&id) {
            return d;
        }
        // guards against cycles in malformed input
        memo.insert(id, 1);
        let d = 1 + children
            .get(&id)
            .into_iter()
            .flatten()
            .map(|c| match c {
                NodeRef::Token(_) => 0,
                NodeRef::Phrase(p) => depth(*p, children, memo),
            })
            .max()
            .unwrap_or(0);
        memo.insert(id, d);
        d
    }
    let children = graph.children_index();
    let mut memo = BTreeMap::new();
    for p in graph.phrases() {
        depth(p.id, &children, &mut memo);
    }
    memo
}

/// Computes positions for every token, node, edge and secondary link.
pub fn layout(graph: &AnnotationGraph, params: &LayoutParams) -> Geometry {
    let LayoutParams {
        grid,
        row_height,
        margin,
    } = *params;
    let depths = depths(graph);
    let max_depth = depths.values().copied().max().unwrap_or(0);
    let baseline = margin + max_depth as f64 * row_height;
    let children = graph.children_index();

    let tokens: Vec<TokenAnchor> = graph
        .tokens()
        .iter()
        .map(|t| TokenAnchor {
            position: t.position,
            x: margin + (t.position - 1) as f64 * grid,
            y: baseline,
            form: t.form.clone(),
            pos: t.pos.clone(),
        })
        .collect();

    let mut anchors: BTreeMap<NodeRef, Point> = tokens
        .iter()
        .map(|t| (NodeRef::Token(t.position), (t.x, t.y)))
        .collect();
    let mut ordered: Vec<(u32, NodeId)> = depths.iter().map(|(&id, &d)| (d, id)).collect();
    ordered.sort();

    // childless phrases go to the right of the sentence
    let mut spare_x = margin + tokens.len() as f64 * grid;
    let mut nodes = BTreeMap::new();
    for (depth, id) in ordered {
        let kids = children.get(&id).map(Vec::as_slice).unwrap_or(&[]);
        let xs: Vec<f64> = kids
            .iter()
            .filter_map(|c| anchors.get(c).map(|p| p.0))
            .collect();
        let childless = kids.is_empty();
        let x = if xs.is_empty() {
            let x = spare_x;
            spare_x += grid;
            x
        } else {
            let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (lo + hi) / 2.0
        };
        let y = baseline - depth as f64 * row_height;
        anchors.insert(NodeRef::Phrase(id), (x, y));
        nodes.insert(
            id,
            NodeAnchor {
                id,
                x,
                y,
                depth,
                category: graph.phrase(id).expect("phrase").category.clone(),
                childless,
            },
        );
    }

    let edges = graph
        .primary_edges()
        .map(|e| {
            let (cx, cy) = anchors[&e.child];
            let (px, py) = anchors[&NodeRef::Phrase(e.parent)];
            EdgeGeometry {
                parent: e.parent,
                child: e.child,
                function: e.function,
                points: vec![(cx, cy), (cx, py), (px, py)],
                label: (cx, (cy + py) / 2.0),
            }
        })
        .collect();

    let links = graph
        .secondary_links()
        .map(|l| {
            let (sx, sy) = anchors[&l.source];
            let (tx, ty) = anchors[&l.target];
            let top = sy.min(ty) - row_height / 2.0;
            let mid = ((sx + tx) / 2.0, top);
            LinkGeometry {
                source: l.source,
                target: l.target,
                function: l.function.clone(),
                points: vec![(sx, sy), mid, (tx, ty)],
                label: mid,
            }
        })
        .collect();

    let right = tokens
        .last()
        .map(|t| t.x)
        .unwrap_or(margin)
        .max(spare_x - grid);
    Geometry {
        width: right + margin,
        height: baseline + TOKEN_TEXT_HEIGHT + margin,
        baseline,
        tokens,
        nodes: nodes.into_values().collect(),
        edges,
        links,
    }
}

fn orientation(a: Point, b: Point, c: Point) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// True if the segments cross at a single point interior to both.
fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (o1, o2) = (orientation(a, b, c), orientation(a, b, d));
    let (o3, o4) = (orientation(c, d, a), orientation(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn polylines_cross(p: &[Point], q: &[Point]) -> bool {
    p.windows(2)
        .any(|s| q.windows(2).any(|t| segments_cross(s[0], s[1], t[0], t[1])))
}

impl Geometry {
    /// Number of pairs of primary edges whose drawings cross.
    pub fn crossing_count(&self) -> usize {
        self.crossing_pairs().len()
    }

    /// Crossing pairs of primary edges, as `(child, child)` of the two edges.
    pub fn crossing_pairs(&self) -> Vec<(NodeRef, NodeRef)> {
        let mut out = Vec::new();
        for (i, e) in self.edges.iter().enumerate() {
            for f in &self.edges[i + 1..] {
                if polylines_cross(&e.points, &f.points) {
                    out.push((e.child, f.child));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagset::default_tagsets;

    #[test]
    fn two_tokens_one_node() {
        let ts = default_tagsets();
        let mut g = AnnotationGraph::new("s", [("er", "PPER"), ("weint", "VVFIN")], &ts).unwrap();
        g.group(&ts, &[NodeRef::Token(1), NodeRef::Token(2)], "S")
            .unwrap();
        let params = LayoutParams {
            grid: 100.0,
            ..LayoutParams::default()
        };
        let geo = layout(&g, &params);
        assert_eq!(geo.tokens[0].x, params.margin);
        assert_eq!(geo.tokens[1].x, params.margin + 100.0);
        assert_eq!(geo.nodes[0].x, params.margin + 50.0);
        assert_eq!(geo.nodes[0].depth, 1);
        assert_eq!(geo.nodes[0].y, geo.baseline - params.row_height);
        assert_eq!(geo.crossing_count(), 0);
    }

    #[test]
    fn segment_crossing() {
        assert!(segments_cross((0.0, 0.0), (2.0, 0.0), (1.0, -1.0), (1.0, 1.0)));
        // touching at an endpoint is not a crossing
        assert!(!segments_cross((0.0, 0.0), (2.0, 0.0), (2.0, -1.0), (2.0, 1.0)));
        assert!(!segments_cross((0.0, 0.0), (2.0, 0.0), (0.0, 1.0), (2.0, 1.0)));
    }
}
