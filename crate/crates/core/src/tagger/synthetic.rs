//! Corpora drawn from known generating tables, for testing the tagger
//! against an analytically known optimum.
//!
//! [`GroundTruth`] describes flat phrases: a category `Q`, a length `k`,
//! a first-order Markov chain over child tags and a function distribution
//! `P(G|Q,T)` per tag. Because a function depends only on `(Q, T)`, the best
//! possible accuracy of any tagger is computable exactly.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::graph::{AnnotationGraph, NodeRef, RelabelTarget, Status};
use crate::tagset::{default_tagsets, Tagset, TagsetKind, TagsetRegistry};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub categories: usize,
    pub tags: usize,
    pub functions: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Range of the probability of the most likely function for a tag.
    pub peak: (f64, f64),
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            categories: 4,
            tags: 40,
            functions: 8,
            min_len: 2,
            max_len: 6,
            peak: (0.5, 0.95),
            seed: 1,
        }
    }
}

/// Generating tables. Indices refer to `categories`, `tags`, `functions`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub categories: Vec<String>,
    pub tags: Vec<String>,
    pub functions: Vec<String>,
    pub min_len: usize,
    pub max_len: usize,
    /// `initial[q][t]`
    pub initial: Vec<Vec<f64>>,
    /// `transition[q][t][t2]`
    pub transition: Vec<Vec<Vec<f64>>>,
    /// `function[q][t][g]`
    pub function: Vec<Vec<Vec<f64>>>,
}

fn normalized(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

impl GroundTruth {
    pub fn random(config: &GeneratorConfig) -> Self {
        assert!(config.categories >= 1 && config.tags >= 1 && config.functions >= 2);
        assert!(1 <= config.min_len && config.min_len <= config.max_len);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let flat = |n: usize, rng: &mut ChaCha8Rng| {
            normalized((0..n).map(|_| 0.5 + rng.random::<f64>()).collect())
        };
        let (nq, nt, ng) = (config.categories, config.tags, config.functions);
        let initial = (0..nq).map(|_| flat(nt, &mut rng)).collect();
        let transition = (0..nq)
            .map(|_| (0..nt).map(|_| flat(nt, &mut rng)).collect())
            .collect();
        let function = (0..nq)
            .map(|_| {
                (0..nt)
                    .map(|_| {
                        let winner = rng.random_range(0..ng);
                        let peak = rng.random_range(config.peak.0..config.peak.1);
                        let rest: Vec<f64> =
                            (0..ng - 1).map(|_| 0.1 + rng.random::<f64>()).collect();
                        let rest_sum: f64 = rest.iter().sum();
                        let mut rest = rest.into_iter().map(|w| (1.0 - peak) * w / rest_sum);
                        (0..ng)
                            .map(|g| if g == winner { peak } else { rest.next().unwrap() })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        GroundTruth {
            categories: (0..nq).map(|i| format!("Q{i}")).collect(),
            tags: (0..nt).map(|i| format!("T{i:02}")).collect(),
            functions: (0..ng).map(|i| format!("G{i}")).collect(),
            min_len: config.min_len,
            max_len: config.max_len,
            initial,
            transition,
            function,
        }
    }

    /// Tagsets containing exactly the generated labels.
    pub fn tagsets(&self) -> TagsetRegistry {
        let set = |kind, labels: &[String]| {
            Tagset::from_entries(kind, 1, labels.iter().map(|l| (l.clone(), String::new())))
                .expect("generated labels are valid")
        };
        TagsetRegistry::new(
            set(TagsetKind::Pos, &self.tags),
            set(TagsetKind::Node, &self.categories),
            set(TagsetKind::Edge, &self.functions),
        )
    }

    /// Expected accuracy of always choosing the most probable function for
    /// the observed `(Q, T)`, as a ratio of expected correct positions to
    /// expected positions per phrase. Tag occupancy at each position is
    /// propagated exactly through the chain.
    pub fn bayes_accuracy(&self) -> f64 {
        let lengths = self.min_len..=self.max_len;
        let n_len = lengths.clone().count() as f64;
        let expected_len: f64 = lengths.clone().map(|k| k as f64).sum::<f64>() / n_len;
        let mut correct = 0.0;
        for q in 0..self.categories.len() {
            let best: Vec<f64> = self.function[q]
                .iter()
                .map(|row| row.iter().copied().fold(0.0, f64::max))
                .collect();
            let mut occupancy = self.initial[q].clone();
            for i in 1..=self.max_len {
                // share of phrases that reach position i
                let reach = lengths.clone().filter(|&k| k >= i).count() as f64 / n_len;
                let at_i: f64 = occupancy.iter().zip(&best).map(|(p, b)| p * b).sum();
                correct += reach * at_i;
                occupancy = (0..self.tags.len())
                    .map(|t2| {
                        occupancy
                            .iter()
                            .enumerate()
                            .map(|(t, p)| p * self.transition[q][t][t2])
                            .sum()
                    })
                    .collect();
            }
        }
        correct / self.categories.len() as f64 / expected_len
    }

    /// Draws one phrase: category index and `(tag, function)` indices.
    pub fn sample_phrase(&self, rng: &mut impl Rng) -> (usize, Vec<(usize, usize)>) {
        let q = rng.random_range(0..self.categories.len());
        let k = rng.random_range(self.min_len..=self.max_len);
        let pick = |w: &[f64], rng: &mut _| WeightedIndex::new(w).expect("weights").sample(rng);
        let mut children = Vec::with_capacity(k);
        let mut t = pick(&self.initial[q], rng);
        for i in 0..k {
            if i > 0 {
                t = pick(&self.transition[q][t], rng);
            }
            let g = pick(&self.function[q][t], rng);
            children.push((t, g));
        }
        (q, children)
    }

    /// A corpus of `sentences` complete sentences, each one flat phrase.
    pub fn corpus(&self, sentences: usize, seed: u64) -> Corpus {
        let tagsets = self.tagsets();
        let mut corpus = Corpus::new("synthetic", tagsets.clone()).expect("valid name");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for n in 0..sentences {
            let (q, children) = self.sample_phrase(&mut rng);
            let mut g = AnnotationGraph::new(
                format!("s{}", n + 1),
                children
                    .iter()
                    .enumerate()
                    .map(|(i, &(t, _))| (format!("w{}", i + 1), self.tags[t].clone())),
                &tagsets,
            )
            .expect("generated tokens are valid");
            let tokens: Vec<NodeRef> = (1..=children.len() as u32).map(NodeRef::Token).collect();
            g.group(&tagsets, &tokens, &self.categories[q])
                .expect("fresh tokens");
            for (i, &(_, f)) in children.iter().enumerate() {
                g.relabel(
                    &tagsets,
                    RelabelTarget::Edge(tokens[i]),
                    &self.functions[f],
                )
                .expect("known function");
            }
            g.set_status(&tagsets, Status::Complete)
                .expect("flat phrase is complete");
            corpus.push(g).expect("fresh id");
        }
        corpus
    }
}

#[derive(Debug)]
enum Bracket<'a> {
    Token {
        form: &'a str,
        pos: &'a str,
        function: Option<&'a str>,
    },
    Phrase {
        category: &'a str,
        function: Option<&'a str>,
        children: Vec<Bracket<'a>>,
    },
}

fn split_function(s: &str) -> (&str, Option<&str>) {
    match s.split_once(':') {
        Some((a, f)) => (a, Some(f)),
        None => (s, None),
    }
}

fn parse_bracket<'a>(items: &[&'a str], at: &mut usize) -> Result<Bracket<'a>, String> {
    let item = *items.get(*at).ok_or("unexpected end")?;
    *at += 1;
    if item == "(" {
        let head = *items.get(*at).ok_or("missing category")?;
        *at += 1;
        let (category, function) = split_function(head);
        let mut children = Vec::new();
        loop {
            match items.get(*at) {
                Some(&")") => {
                    *at += 1;
                    break;
                }
                Some(_) => children.push(parse_bracket(items, at)?),
                None => return Err("unclosed bracket".into()),
            }
        }
        Ok(Bracket::Phrase {
            category,
            function,
            children,
        })
    } else {
        let (form, tag) = item
            .rsplit_once('/')
            .ok_or_else(|| format!("token `{item}` needs form/POS"))?;
        let (pos, function) = split_function(tag);
        Ok(Bracket::Token {
            form,
            pos,
            function,
        })
    }
}

fn collect_tokens<'a>(b: &Bracket<'a>, out: &mut Vec<(&'a str, &'a str)>) {
    match b {
        Bracket::Token { form, pos, .. } => out.push((form, pos)),
        Bracket::Phrase { children, .. } => children.iter().for_each(|c| collect_tokens(c, out)),
    }
}

fn label_edges(
    b: &Bracket<'_>,
    g: &mut AnnotationGraph,
    ts: &TagsetRegistry,
    nodes: &mut std::slice::Iter<'_, NodeRef>,
) -> Result<(), String> {
    let node = *nodes.next().expect("one node per bracket");
    let function = match b {
        Bracket::Token { function, .. } => *function,
        Bracket::Phrase {
            function, children, ..
        } => {
            for c in children {
                label_edges(c, g, ts, nodes)?;
            }
            *function
        }
    };
    if let Some(f) = function {
        g.relabel(ts, RelabelTarget::Edge(node), f)
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn bracket_nodes(
    b: &Bracket<'_>,
    g: &mut AnnotationGraph,
    ts: &TagsetRegistry,
    next_token: &mut u32,
    out: &mut Vec<NodeRef>,
) -> Result<NodeRef, String> {
    let slot = out.len();
    out.push(NodeRef::Token(0));
    let node = match b {
        Bracket::Token { .. } => {
            *next_token += 1;
            NodeRef::Token(*next_token)
        }
        Bracket::Phrase {
            category, children, ..
        } => {
            let mut kids = Vec::with_capacity(children.len());
            for c in children {
                kids.push(bracket_nodes(c, g, ts, next_token, out)?);
            }
            NodeRef::Phrase(g.group(ts, &kids, category).map_err(|e| e.to_string())?)
        }
    };
    out[slot] = node;
    Ok(node)
}

/// Builds a projective graph from bracket notation, e.g.
/// `(S (NP:SB der/ART:NK Mann/NN:NK) weint/VVFIN:HD)`. Tokens are
/// `form/POS:FUNCTION`; a phrase is `(CATEGORY:FUNCTION children...)`, the
/// root without function. The graph is marked complete if `complete`.
pub fn graph_from_brackets(
    id: &str,
    text: &str,
    tagsets: &TagsetRegistry,
    complete: bool,
) -> Result<AnnotationGraph, String> {
    let spaced = text.replace('(', " ( ").replace(')', " ) ");
    let items: Vec<&str> = spaced.split_whitespace().collect();
    let mut at = 0;
    let mut roots = Vec::new();
    while at < items.len() {
        roots.push(parse_bracket(&items, &mut at)?);
    }
    let mut tokens = Vec::new();
    roots.iter().for_each(|r| collect_tokens(r, &mut tokens));
    let mut g = AnnotationGraph::new(id, tokens, tagsets).map_err(|e| e.to_string())?;
    let mut next_token = 0;
    let mut nodes = Vec::new();
    for r in &roots {
        bracket_nodes(r, &mut g, tagsets, &mut next_token, &mut nodes)?;
    }
    let mut iter = nodes.iter();
    for r in &roots {
        label_edges(r, &mut g, tagsets, &mut iter)?;
    }
    if complete {
        g.set_status(tagsets, Status::Complete).map_err(|v| {
            v.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        })?;
    }
    Ok(g)
}

const GERMAN: [&str; 20] = [
    "(S (NP:SB der/ART:NK Mann/NN:NK) sieht/VVFIN:HD (NP:OA den/ART:NK Hund/NN:NK))",
    "(S (NP:SB kein/ART:NK Arzt/NN:NK) kommt/VVFIN:HD)",
    "(S (NP:SB die/ART:NK alte/ADJA:NK Frau/NN:NK) kennt/VVFIN:HD (NP:OA kein/ART:NK Kind/NN:NK))",
    "(S er/PPER:SB sieht/VVFIN:HD mich/PPER:OA)",
    "(S sie/PPER:SB kennt/VVFIN:HD ihn/PPER:OA)",
    "(S (NP:SB ein/ART:NK kleiner/ADJA:NK Hund/NN:NK) bellt/VVFIN:HD)",
    "(S Anna/NE:SB liest/VVFIN:HD (NP:OA das/ART:NK Buch/NN:NK))",
    "(S (NP:SB kein/ART:NK Arzt/NN:NK) ist/VAFIN:HD anwesend/ADJD:PD)",
    "(S (NP:SB der/ART:NK Lehrer/NN:NK) gibt/VVFIN:HD (NP:DA dem/ART:NK Kind/NN:NK) (NP:OA ein/ART:NK Buch/NN:NK))",
    "(S er/PPER:SB wohnt/VVFIN:HD (PP:MO in/APPR:HD der/ART:NK Stadt/NN:NK))",
    "(S (NP:SB die/ART:NK Kinder/NN:NK) spielen/VVFIN:HD (PP:MO im/APPRART:HD Garten/NN:NK))",
    "(S ich/PPER:SB sehe/VVFIN:HD (NP:OA den/ART:NK großen/ADJA:NK Baum/NN:NK))",
    "(S (NP:SB kein/ART:NK Mensch/NN:NK) weiß/VVFIN:HD es/PPER:OA)",
    "(S wir/PPER:SB kaufen/VVFIN:HD (NP:OA ein/ART:NK neues/ADJA:NK Auto/NN:NK))",
    "(S (NP:SB der/ART:NK Arzt/NN:NK) hilft/VVFIN:HD (NP:DA dem/ART:NK Mann/NN:NK))",
    "(S sie/PPER:SB hat/VAFIN:HD (VP:OC (NP:OA den/ART:NK Brief/NN:NK) geschrieben/VVPP:HD))",
    "(S er/PPER:SB bat/VVFIN:HD mich/PPER:OA (VP:OC zu/PTKZU:PM kommen/VVINF:HD))",
    "(S (NP:SB kein/ART:NK Zug/NN:NK) fährt/VVFIN:HD heute/ADV:MO)",
    "(S Peter/NE:SB trifft/VVFIN:HD (NP:OA die/ART:NK nette/ADJA:NK Nachbarin/NN:NK))",
    "(S (NP:SB das/ART:NK Wetter/NN:NK) ist/VAFIN:HD schön/ADJD:PD)",
];

/// Twenty short annotated German sentences over the default tagsets.
pub fn german_corpus() -> Corpus {
    let tagsets = default_tagsets();
    let mut corpus = Corpus::new("german-sample", tagsets.clone()).expect("valid name");
    for (i, text) in GERMAN.iter().enumerate() {
        let g = graph_from_brackets(&format!("g{}", i + 1), text, &tagsets, true)
            .expect("sample sentences are well-formed");
        corpus.push(g).expect("fresh id");
    }
    corpus
}
