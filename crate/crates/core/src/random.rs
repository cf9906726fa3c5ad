//! Random sentences, corpora and training data for property tests.
//!
//! All generators are driven by a caller-supplied RNG, so a seed fully
//! determines the output.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::corpus::Corpus;
use crate::graph::{AnnotationGraph, GraphError, LinkAction, NodeId, NodeRef, RelabelTarget, Status};
use crate::tagger::PhraseInstance;
use crate::tagset::{default_tagsets, TagsetEdit, TagsetKind, TagsetRegistry, UNLABELED};

const FORMS: &[&str] = &[
    "der", "Mann", "sieht", "kein", "Arzt", "ist", ",", ".", "#hash", "%pct", "\\back", "a b",
    "über", "ß", "<tag>", "&", "\"q\"", "1887", ":", "--",
];

/// One editing command.
#[derive(Debug, Clone, PartialEq)]
pub enum EditOp {
    Group(Vec<NodeRef>, String),
    Ungroup(NodeId, bool),
    Relabel(RelabelTarget, String),
    Reattach(NodeRef, NodeId),
    Detach(NodeRef),
    Secondary(NodeRef, NodeRef, String, LinkAction),
    Comment(String),
}

pub fn apply_op(
    graph: &mut AnnotationGraph,
    tagsets: &TagsetRegistry,
    op: &EditOp,
) -> Result<(), GraphError> {
    match op {
        EditOp::Group(children, category) => graph.group(tagsets, children, category).map(drop),
        EditOp::Ungroup(node, force) => graph.ungroup(*node, *force),
        EditOp::Relabel(target, label) => graph.relabel(tagsets, *target, label),
        EditOp::Reattach(node, parent) => graph.reattach(*node, *parent),
        EditOp::Detach(node) => graph.detach(*node),
        EditOp::Secondary(s, t, f, a) => graph.set_secondary(tagsets, *s, *t, f, *a),
        EditOp::Comment(text) => graph.add_comment(text.clone()),
    }
}

pub fn random_tokens(rng: &mut impl Rng, tagsets: &TagsetRegistry, n: usize) -> Vec<(String, String)> {
    let pos: Vec<&str> = tagsets.pos().labels().collect();
    (0..n)
        .map(|_| {
            (
                FORMS.choose(rng).unwrap().to_string(),
                pos.choose(rng).unwrap().to_string(),
            )
        })
        .collect()
}

fn random_category(rng: &mut impl Rng, tagsets: &TagsetRegistry, coordination: bool) -> String {
    let base = *tagsets.node().labels().collect::<Vec<_>>().choose(rng).unwrap();
    if coordination {
        format!("C{base}")
    } else {
        base.to_string()
    }
}

fn random_function(rng: &mut impl Rng, tagsets: &TagsetRegistry, allow_unlabeled: bool) -> String {
    let labels: Vec<&str> = tagsets.edge().labels().collect();
    if allow_unlabeled && rng.random_bool(0.1) {
        return UNLABELED.to_string();
    }
    labels.choose(rng).unwrap().to_string()
}

fn random_node(rng: &mut impl Rng, g: &AnnotationGraph) -> NodeRef {
    let nodes: Vec<NodeRef> = g.nodes().collect();
    *nodes.choose(rng).unwrap()
}

/// A command that is plausible for `g`; it may still fail.
pub fn random_op(rng: &mut impl Rng, g: &AnnotationGraph, tagsets: &TagsetRegistry) -> EditOp {
    let phrases: Vec<NodeId> = g.phrases().map(|p| p.id).collect();
    let any_phrase = |rng: &mut _| phrases.choose(rng).copied();
    match rng.random_range(0..10) {
        0..=3 => {
            let mut roots = g.roots();
            roots.shuffle(rng);
            let k = rng.random_range(1..=roots.len().clamp(1, 4));
            roots.truncate(k);
            let coord = roots.len() >= 2 && rng.random_bool(0.15);
            EditOp::Group(roots, random_category(rng, tagsets, coord))
        }
        4 => match any_phrase(rng) {
            Some(p) => EditOp::Ungroup(p, rng.random_bool(0.5)),
            None => EditOp::Comment("empty".into()),
        },
        5 => {
            let target = if rng.random_bool(0.3) {
                match any_phrase(rng) {
                    Some(p) => RelabelTarget::Node(p),
                    None => RelabelTarget::Edge(random_node(rng, g)),
                }
            } else {
                RelabelTarget::Edge(random_node(rng, g))
            };
            let label = match target {
                RelabelTarget::Node(_) => {
                    let coord = rng.random_bool(0.2);
                    random_category(rng, tagsets, coord)
                }
                RelabelTarget::Edge(_) => random_function(rng, tagsets, false),
            };
            EditOp::Relabel(target, label)
        }
        6 => match any_phrase(rng) {
            Some(p) => EditOp::Reattach(random_node(rng, g), p),
            None => EditOp::Detach(random_node(rng, g)),
        },
        7 => EditOp::Detach(random_node(rng, g)),
        8 => {
            let action = if rng.random_bool(0.8) {
                LinkAction::Add
            } else {
                LinkAction::Remove
            };
            EditOp::Secondary(
                random_node(rng, g),
                random_node(rng, g),
                random_function(rng, tagsets, true),
                action,
            )
        }
        _ => EditOp::Comment(
            ["", "check attachment", "  leading", "tab\there", "ünïcode"]
                .choose(rng)
                .unwrap()
                .to_string(),
        ),
    }
}

/// An in-progress sentence after `steps` random commands; failed commands
/// are skipped.
pub fn random_graph(
    rng: &mut impl Rng,
    tagsets: &TagsetRegistry,
    id: &str,
    max_tokens: usize,
    steps: usize,
) -> AnnotationGraph {
    let n = rng.random_range(1..=max_tokens);
    let mut g = AnnotationGraph::new(id, random_tokens(rng, tagsets, n), tagsets)
        .expect("random tokens are valid");
    for _ in 0..steps {
        let op = random_op(rng, &g, tagsets);
        let _ = apply_op(&mut g, tagsets, &op);
    }
    g
}

/// A complete sentence: random groupings of current roots (adjacent or
/// not) until one root is left, random functions with at most one head per
/// phrase, and a few secondary links.
pub fn random_complete_graph(
    rng: &mut impl Rng,
    tagsets: &TagsetRegistry,
    id: &str,
    max_tokens: usize,
) -> AnnotationGraph {
    let n = rng.random_range(1..=max_tokens);
    let mut g = AnnotationGraph::new(id, random_tokens(rng, tagsets, n), tagsets)
        .expect("random tokens are valid");
    loop {
        let mut roots = g.roots();
        if roots.len() == 1 && roots[0].as_phrase().is_some() {
            break;
        }
        roots.shuffle(rng);
        let k = if roots.len() <= 4 {
            roots.len()
        } else {
            rng.random_range(1..=4)
        };
        roots.truncate(k);
        let coord = roots.len() >= 2 && rng.random_bool(0.1);
        let category = random_category(rng, tagsets, coord);
        g.group(tagsets, &roots, &category).expect("roots are free");
    }
    let functions: Vec<&str> = tagsets
        .edge()
        .labels()
        .filter(|&f| f != "HD")
        .collect();
    let phrases: Vec<NodeId> = g.phrases().map(|p| p.id).collect();
    for p in phrases {
        let children = g.children(p);
        let head = if tagsets.edge().contains("HD") && rng.random_bool(0.7) {
            children.choose(rng).copied()
        } else {
            None
        };
        for c in children {
            let f = if Some(c) == head {
                "HD"
            } else {
                functions.choose(rng).unwrap()
            };
            g.relabel(tagsets, RelabelTarget::Edge(c), f)
                .expect("known function");
        }
    }
    for _ in 0..rng.random_range(0..3) {
        let (s, t) = (random_node(rng, &g), random_node(rng, &g));
        let f = random_function(rng, tagsets, true);
        let _ = g.set_secondary(tagsets, s, t, &f, LinkAction::Add);
    }
    if rng.random_bool(0.3) {
        let _ = g.add_comment("random comment");
    }
    g.set_status(tagsets, Status::Complete)
        .expect("fully labeled single-rooted tree is complete");
    g
}

/// Default tagsets with a few random additions, some of them containing
/// characters the corpus format has to handle (`:`, non-ASCII, spaces in
/// descriptions).
pub fn random_tagsets(rng: &mut impl Rng) -> TagsetRegistry {
    let mut ts = default_tagsets();
    let extra = ["X:Y", "ÄÖ", "a-b", "E$", "Z9", "q.q"];
    for label in extra {
        if !rng.random_bool(0.4) {
            continue;
        }
        let kind = *TagsetKind::ALL.choose(rng).unwrap();
        let _ = ts.modify(
            kind,
            TagsetEdit::Add {
                label: label.to_string(),
                description: "added # with %% odd: text".into(),
            },
            false,
            |_| false,
        );
    }
    ts
}

/// A corpus of complete and in-progress sentences over random tagsets.
pub fn random_corpus(rng: &mut impl Rng, max_sentences: usize) -> Corpus {
    let tagsets = random_tagsets(rng);
    let mut c = Corpus::new(
        *["", "corpus", "mit Leerzeichen", "ü#%"].choose(rng).unwrap(),
        tagsets.clone(),
    )
    .expect("valid name");
    if rng.random_bool(0.5) {
        c.set_metadata("annotator", "a b: #c %%").expect("valid metadata");
    }
    for i in 0..rng.random_range(0..=max_sentences) {
        let id = format!("s{i}");
        let g = if rng.random_bool(0.5) {
            random_complete_graph(rng, &tagsets, &id, 10)
        } else {
            random_graph(rng, &tagsets, &id, 10, 15)
        };
        c.push(g).expect("random sentences keep integrity");
    }
    c
}

/// Random training phrases over the given inventories.
pub fn random_instances(
    rng: &mut impl Rng,
    categories: &[&str],
    tags: &[&str],
    functions: &[&str],
    count: usize,
    max_len: usize,
) -> Vec<PhraseInstance> {
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=max_len);
            PhraseInstance::new(
                *categories.choose(rng).unwrap(),
                (0..k).map(|_| (*tags.choose(rng).unwrap(), *functions.choose(rng).unwrap())),
            )
        })
        .collect()
}
