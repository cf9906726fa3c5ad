//! The hand-built example sentences: round trip, structure, constituency
//! conversion and drawings.

use std::fs;
use std::path::PathBuf;

use argbank::corpus::{parse, serialize};
use argbank::graph::{Rule, Severity, Trace};
use argbank::layout::{layout, render_svg, LayoutParams};
use argbank::{AnnotationGraph, Corpus, NodeId, NodeRef};

const FIXTURES: [&str; 4] = ["example1", "example2", "example3", "coordination"];

fn dir(sub: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join(sub)
}

fn text(name: &str) -> String {
    fs::read_to_string(dir("fixtures").join(format!("{name}.asc"))).unwrap()
}

fn corpus(name: &str) -> Corpus {
    parse(&text(name)).unwrap()
}

fn sentence(name: &str) -> (Corpus, AnnotationGraph) {
    let c = corpus(name);
    let g = c.sentences()[0].clone();
    (c, g)
}

fn p(id: u32) -> NodeId {
    NodeId::new(id).unwrap()
}

fn tok(pos: u32) -> NodeRef {
    NodeRef::Token(pos)
}

fn phr(id: u32) -> NodeRef {
    NodeRef::Phrase(p(id))
}

#[test]
fn fixtures_round_trip_byte_for_byte() {
    for name in FIXTURES {
        let original = text(name);
        let c = parse(&original).unwrap();
        assert_eq!(serialize(&c).unwrap(), original, "{name}");
        assert_eq!(serialize(&c).unwrap(), serialize(&c).unwrap());
    }
}

#[test]
fn fixtures_validate_without_errors() {
    for name in FIXTURES {
        let (c, g) = sentence(name);
        let errors: Vec<_> = g
            .validate(c.tagsets())
            .into_iter()
            .filter(|v| v.severity == Severity::Error)
            .collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
}

#[test]
fn extraposed_relative_clause() {
    let (c, g) = sentence("example2");
    // the subject NP spans "kein Arzt" and the relative clause at the end
    assert_eq!(g.yield_of(phr(501)).unwrap(), vec![3, 4, 7, 8, 9]);
    assert!(!g.is_continuous(phr(501)).unwrap());
    for other in [500, 502, 503] {
        assert!(g.is_continuous(phr(other)).unwrap(), "{other}");
    }
    // the root has no head and that is not a violation
    assert!(g.children(p(503)).iter().all(|c| g.attachment(*c).unwrap().function != "HD"));
    assert!(!g
        .validate(c.tagsets())
        .iter()
        .any(|v| v.rule == Rule::MultipleHeads));

    let cons = g.to_constituency().unwrap();
    assert_eq!(
        cons.traces,
        vec![Trace {
            fillers: vec![phr(500)],
            original_parent: p(501),
            new_parent: p(502),
        }]
    );
    assert_eq!(cons.tree.yield_of(phr(501)).unwrap(), vec![3, 4]);
}

#[test]
fn three_non_local_dependencies() {
    let (_, g) = sentence("example1");
    let discontinuous: Vec<u32> = g
        .phrases()
        .filter(|n| !g.is_continuous(NodeRef::Phrase(n.id)).unwrap())
        .map(|n| n.id.get())
        .collect();
    assert_eq!(discontinuous, vec![501, 502, 503]);

    let cons = g.to_constituency().unwrap();
    assert_eq!(
        cons.traces,
        vec![
            Trace {
                fillers: vec![tok(3)],
                original_parent: p(502),
                new_parent: p(503),
            },
            Trace {
                fillers: vec![phr(500)],
                original_parent: p(501),
                new_parent: p(503),
            },
            Trace {
                fillers: vec![phr(501), tok(3), phr(500)],
                original_parent: p(503),
                new_parent: p(504),
            },
        ]
    );
    for n in cons.tree.phrases() {
        assert!(cons.tree.is_continuous(NodeRef::Phrase(n.id)).unwrap());
    }
}

#[test]
fn secondary_subject_link() {
    let (_, g) = sentence("example3");
    let links: Vec<_> = g.secondary_links().collect();
    assert_eq!(links.len(), 1);
    assert_eq!(links[0].source, phr(500));
    assert_eq!(links[0].target, tok(3));
    assert_eq!(links[0].function, "SB");
    // primary: "mich" is the object of the matrix clause
    assert_eq!(g.parent(tok(3)), Some(p(501)));
    assert_eq!(g.attachment(tok(3)).unwrap().function, "OA");
    let text = text("example3");
    assert!(text.contains("mich\tPPER\tOA\t501\n"));
    assert!(text.contains("#500\tVP\tOC\t501\tSB:3\n"));
    // secondary links are dropped by the conversion, which has nothing to do
    let cons = g.to_constituency().unwrap();
    assert!(cons.traces.is_empty());
    assert_eq!(cons.tree.secondary_links().count(), 0);
}

#[test]
fn coordinated_verb_phrases() {
    let (c, g) = sentence("coordination");
    let cvp = g.phrase(p(504)).unwrap();
    assert_eq!(cvp.category, "CVP");
    let functions: Vec<&str> = g
        .children(p(504))
        .iter()
        .map(|c| g.attachment(*c).unwrap().function.as_str())
        .collect();
    let mut sorted = functions.clone();
    sorted.sort();
    assert_eq!(sorted, vec!["CD", "CJ", "CJ"]);
    assert!(!g
        .validate(c.tagsets())
        .iter()
        .any(|v| v.rule == Rule::DegenerateCoordination));
    assert_eq!(
        g.to_constituency().unwrap().to_brackets(),
        "(S (PPER:SB sie) (VAFIN:HD wurde) (CVP:OC (VP:CJ (PP:MO (APPR:HD von) \
         (ADJA:NK preußischen) (NN:NK Truppen)) (VVPP:HD besetzt)) (KON:CD und) \
         (VP:CJ (CARD:MO 1887) (NP:DA (ART:NK dem) (ADJA:NK preußischen) (NN:NK Staat)) \
         (VVPP:HD angegliedert))))"
    );
}

#[test]
fn crossing_edges_are_visible() {
    let (_, g) = sentence("example2");
    let geo = layout(&g, &LayoutParams::default());
    assert!(geo.crossing_count() >= 1);
    let (_, flat) = sentence("coordination");
    assert_eq!(layout(&flat, &LayoutParams::default()).crossing_count(), 0);
}

#[test]
fn secondary_link_drawn_dashed() {
    let (_, g) = sentence("example3");
    let geo = layout(&g, &LayoutParams::default());
    assert_eq!(geo.links.len(), 1);
    let svg = render_svg(&geo);
    assert!(svg.contains("stroke-dasharray=\"4 3\""));
    assert!(svg.contains("<polyline class=\"secondary\" data-source=\"500\" data-target=\"3\""));
    assert!(svg.contains(">SB</text>"));
}

#[test]
fn one_text_element_per_label() {
    for name in FIXTURES {
        let (_, g) = sentence(name);
        let geo = layout(&g, &LayoutParams::default());
        let svg = render_svg(&geo);
        let expected = geo.tokens.len() + geo.nodes.len() + geo.edges.len() + geo.links.len();
        assert_eq!(svg.matches("<text ").count(), expected, "{name}");
    }
}

/// Set `UPDATE_GOLDEN=1` to rewrite the expected drawings.
#[test]
fn drawings_match_goldens() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for name in FIXTURES {
        let (_, g) = sentence(name);
        let svg = render_svg(&layout(&g, &LayoutParams::default()));
        assert_eq!(svg, render_svg(&layout(&g, &LayoutParams::default())));
        let path = dir("golden").join(format!("{name}.svg"));
        if update {
            fs::create_dir_all(dir("golden")).unwrap();
            fs::write(&path, &svg).unwrap();
        }
        let golden = fs::read_to_string(&path)
            .unwrap_or_else(|_| panic!("missing {}; run with UPDATE_GOLDEN=1", path.display()));
        assert_eq!(svg, golden, "{name}");
    }
}
