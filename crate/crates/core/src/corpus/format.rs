//! The line-oriented corpus text format.
//!
//! ```text
//! #FORMAT 1
//! #CORPUS <name>
//! #META <key>	<value>
//! #TAGSET pos|node|edge <version>
//! <label>	<description>
//! #END
//! #BOS <sentence-id> in-progress|complete
//! %% <comment>
//! <form>	<pos>	<function>	<parent-id>[	<function>:<target-id>]...
//! #<node-id>	<category>	<function>	<parent-id>[	<function>:<target-id>]...
//! #EOS <sentence-id>
//! ```
//!
//! Token ids are their 1-based positions, phrase ids start at 500 and
//! parent id 0 marks a root. Token forms starting with `#`, `%` or `\` are
//! prefixed with `\`. Output uses LF line endings and is byte-identical for
//! equal corpora.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use super::{valid_sentence_id, Corpus, CorpusError};
use crate::graph::{
    AnnotationGraph, Attachment, NodeId, NodeRef, PhraseNode, Rule, Severity, SecondaryLink,
    Status, Token, FIRST_NODE_ID, MAX_TOKENS,
};
use crate::tagset::{validate_label, Tagset, TagsetKind, TagsetRegistry, UNLABELED};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing #FORMAT header")]
    MissingFormat,
    #[error("unsupported format `{0}`")]
    UnknownFormat(String),
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("label `{label}` is not in the {kind} tagset")]
    UnknownLabel { kind: TagsetKind, label: String },
    #[error("parent {0} is not declared in this sentence")]
    DanglingParent(u32),
    #[error("link target {0} is not declared in this sentence")]
    DanglingTarget(u32),
    #[error("duplicate sentence `{0}`")]
    DuplicateSentence(String),
    #[error("duplicate node {0}")]
    DuplicateNode(u32),
    #[error("node {0} is part of a cycle")]
    Cycle(u32),
    #[error("{0}")]
    Invalid(String),
    #[error("unexpected end of input: {0}")]
    UnexpectedEof(&'static str),
}

/// A parse failure with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

fn err<T>(line: usize, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { line, kind })
}

fn malformed<T>(line: usize, msg: impl Into<String>) -> Result<T, ParseError> {
    err(line, ParseErrorKind::Malformed(msg.into()))
}

fn escape_form(form: &str) -> String {
    if form.starts_with(['#', '%', '\\']) {
        format!("\\{form}")
    } else {
        form.to_string()
    }
}

fn unescape_form(form: &str) -> &str {
    form.strip_prefix('\\').unwrap_or(form)
}

/// Writes the corpus in canonical form. Fails if any sentence violates the
/// integrity rules under the corpus' tagsets.
pub fn serialize(corpus: &Corpus) -> Result<String, CorpusError> {
    corpus.check()?;
    let mut out = String::new();
    let _ = writeln!(out, "#FORMAT {FORMAT_VERSION}");
    let _ = writeln!(out, "#CORPUS {}", corpus.name());
    for (k, v) in corpus.metadata() {
        let _ = writeln!(out, "#META {k}\t{v}");
    }
    for kind in TagsetKind::ALL {
        let set = corpus.tagsets().get(kind);
        let _ = writeln!(out, "#TAGSET {kind} {}", set.version());
        for e in set.entries() {
            let _ = writeln!(out, "{}\t{}", e.label, e.description);
        }
        out.push_str("#END\n");
    }
    for s in corpus.sentences() {
        write_sentence(&mut out, s);
    }
    Ok(out)
}

fn write_links(out: &mut String, g: &AnnotationGraph, source: NodeRef) {
    for l in g.secondary_links().filter(|l| l.source == source) {
        let _ = write!(out, "\t{}:{}", l.function, l.target);
    }
}

fn write_edge(out: &mut String, g: &AnnotationGraph, node: NodeRef) {
    match g.attachment(node) {
        Some(a) => {
            let _ = write!(out, "\t{}\t{}", a.function, a.parent);
        }
        None => {
            let _ = write!(out, "\t{UNLABELED}\t0");
        }
    }
}

fn write_sentence(out: &mut String, g: &AnnotationGraph) {
    let _ = writeln!(out, "#BOS {} {}", g.id(), g.status().as_str());
    for c in g.comments() {
        if c.is_empty() {
            out.push_str("%%\n");
        } else {
            let _ = writeln!(out, "%% {c}");
        }
    }
    for t in g.tokens() {
        let node = NodeRef::Token(t.position);
        let _ = write!(out, "{}\t{}", escape_form(&t.form), t.pos);
        write_edge(out, g, node);
        write_links(out, g, node);
        out.push('\n');
    }
    for p in g.phrases() {
        let node = NodeRef::Phrase(p.id);
        let _ = write!(out, "#{}\t{}", p.id, p.category);
        write_edge(out, g, node);
        write_links(out, g, node);
        out.push('\n');
    }
    let _ = writeln!(out, "#EOS {}", g.id());
}

struct Lines<'a> {
    lines: Vec<&'a str>,
    next: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut lines: Vec<&str> = text.split('\n').collect();
        if lines.last() == Some(&"") {
            lines.pop();
        }
        Lines { lines, next: 0 }
    }

    /// Next line with its 1-based number.
    fn next(&mut self) -> Option<(usize, &'a str)> {
        let line = self.lines.get(self.next).copied()?;
        self.next += 1;
        Some((self.next, line))
    }

    fn peek(&self) -> Option<&'a str> {
        self.lines.get(self.next).copied()
    }

    fn eof_line(&self) -> usize {
        self.lines.len() + 1
    }
}

/// Parses a corpus file. All labels are checked against the embedded
/// tagsets and every sentence is re-validated.
pub fn parse(text: &str) -> Result<Corpus, ParseError> {
    let mut lines = Lines::new(text);
    if let Some(pos) = text.find('\r') {
        let line = text[..pos].matches('\n').count() + 1;
        return malformed(line, "carriage return; files use LF line endings");
    }

    // header
    let (line, format) = loop {
        match lines.next() {
            Some((_, l)) if l.starts_with("%%") => continue,
            Some((n, l)) => break (n, l),
            None => return err(1, ParseErrorKind::MissingFormat),
        }
    };
    match format.strip_prefix("#FORMAT ") {
        Some(v) if v == FORMAT_VERSION.to_string() => {}
        Some(v) => return err(line, ParseErrorKind::UnknownFormat(v.to_string())),
        None => return err(line, ParseErrorKind::MissingFormat),
    }
    let name = match lines.next() {
        Some((_, l)) if l == "#CORPUS" => String::new(),
        Some((n, l)) => match l.strip_prefix("#CORPUS ") {
            Some(name) => {
                if name.chars().any(|c| c.is_control()) {
                    return malformed(n, "control characters in corpus name");
                }
                name.to_string()
            }
            None => return malformed(n, "expected #CORPUS"),
        },
        None => return err(lines.eof_line(), ParseErrorKind::UnexpectedEof("#CORPUS")),
    };

    let mut metadata = Vec::new();
    while let Some(l) = lines.peek() {
        let Some(rest) = l.strip_prefix("#META ") else {
            break;
        };
        let (n, _) = lines.next().expect("peeked");
        let Some((k, v)) = rest.split_once('\t') else {
            return malformed(n, "metadata needs `key<TAB>value`");
        };
        metadata.push((n, k.to_string(), v.to_string()));
    }

    let mut tagsets: BTreeMap<TagsetKind, Tagset> = BTreeMap::new();
    while tagsets.len() < 3 {
        let Some((n, l)) = lines.next() else {
            return err(lines.eof_line(), ParseErrorKind::UnexpectedEof("#TAGSET"));
        };
        let Some(rest) = l.strip_prefix("#TAGSET ") else {
            return malformed(n, "expected #TAGSET section");
        };
        let Some((kind, version)) = rest.split_once(' ') else {
            return malformed(n, "expected `#TAGSET <kind> <version>`");
        };
        let kind: TagsetKind = match kind.parse() {
            Ok(k) => k,
            Err(e) => return malformed(n, format!("{e}")),
        };
        let version: u64 = match version.parse() {
            Ok(v) if v > 0 => v,
            _ => return malformed(n, format!("bad tagset version `{version}`")),
        };
        if tagsets.contains_key(&kind) {
            return malformed(n, format!("second {kind} tagset"));
        }
        let mut set = Tagset::from_entries(kind, version, []).expect("empty tagset");
        let mut entries = Vec::new();
        loop {
            let Some((m, l)) = lines.next() else {
                return err(lines.eof_line(), ParseErrorKind::UnexpectedEof("#END"));
            };
            if l == "#END" {
                break;
            }
            let Some((label, description)) = l.split_once('\t') else {
                return malformed(m, "tagset entry needs `label<TAB>description`");
            };
            if let Err(e) = validate_label(label) {
                return malformed(m, e.to_string());
            }
            if description.contains('\t') {
                return malformed(m, "tab in tagset description");
            }
            if entries.iter().any(|(l, _): &(String, String)| l == label) {
                return malformed(m, format!("duplicate label `{label}`"));
            }
            entries.push((label.to_string(), description.to_string()));
        }
        set = Tagset::from_entries(kind, set.version(), entries).expect("entries checked");
        tagsets.insert(kind, set);
    }
    let registry = TagsetRegistry::new(
        tagsets.remove(&TagsetKind::Pos).expect("three sets"),
        tagsets.remove(&TagsetKind::Node).expect("three sets"),
        tagsets.remove(&TagsetKind::Edge).expect("three sets"),
    );

    let mut corpus = match Corpus::new(name, registry) {
        Ok(c) => c,
        Err(e) => return malformed(2, e.to_string()),
    };
    for (n, k, v) in metadata {
        if corpus.metadata().contains_key(&k) {
            return malformed(n, format!("duplicate metadata key `{k}`"));
        }
        if let Err(e) = corpus.set_metadata(k, v) {
            return malformed(n, e.to_string());
        }
    }

    let mut ids = BTreeSet::new();
    while let Some((n, l)) = lines.next() {
        if l.is_empty() {
            continue;
        }
        let Some(header) = l.strip_prefix("#BOS ") else {
            return malformed(n, "expected #BOS");
        };
        let graph = parse_sentence(&mut lines, n, header, corpus.tagsets())?;
        if !ids.insert(graph.id().to_string()) {
            return err(n, ParseErrorKind::DuplicateSentence(graph.id().to_string()));
        }
        if let Err(e) = corpus.push(graph) {
            return err(n, ParseErrorKind::Invalid(e.to_string()));
        }
    }
    Ok(corpus)
}

struct Row<'a> {
    line: usize,
    node: NodeRef,
    label: &'a str,
    function: &'a str,
    parent: u32,
    links: Vec<(&'a str, u32)>,
}

fn parse_columns<'a>(
    line: usize,
    cols: &[&'a str],
) -> Result<(&'a str, u32, Vec<(&'a str, u32)>), ParseError> {
    let function = cols[0];
    let parent: u32 = match cols[1].parse() {
        Ok(p) => p,
        Err(_) => return malformed(line, format!("bad parent id `{}`", cols[1])),
    };
    let mut links = Vec::new();
    for col in &cols[2..] {
        let Some((f, target)) = col.rsplit_once(':') else {
            return malformed(line, format!("bad secondary link `{col}`"));
        };
        let Ok(target) = target.parse::<u32>() else {
            return malformed(line, format!("bad secondary link `{col}`"));
        };
        if f.is_empty() {
            return malformed(line, format!("bad secondary link `{col}`"));
        }
        links.push((f, target));
    }
    Ok((function, parent, links))
}

fn parse_sentence(
    lines: &mut Lines<'_>,
    bos_line: usize,
    header: &str,
    tagsets: &TagsetRegistry,
) -> Result<AnnotationGraph, ParseError> {
    let Some((id, status)) = header.split_once(' ') else {
        return malformed(bos_line, "expected `#BOS <id> <status>`");
    };
    if !valid_sentence_id(id) {
        return malformed(bos_line, format!("invalid sentence id `{id}`"));
    }
    let Some(status) = Status::parse(status) else {
        return malformed(bos_line, format!("unknown status `{status}`"));
    };

    let mut comments = Vec::new();
    let mut tokens: Vec<(Token, Row)> = Vec::new();
    let mut nodes: Vec<Row> = Vec::new();
    loop {
        let Some((n, l)) = lines.next() else {
            return err(lines.eof_line(), ParseErrorKind::UnexpectedEof("#EOS"));
        };
        if let Some(rest) = l.strip_prefix("%%") {
            comments.push(rest.strip_prefix(' ').unwrap_or(rest).to_string());
            continue;
        }
        if let Some(end) = l.strip_prefix("#EOS") {
            if end != format!(" {id}") {
                return malformed(n, format!("#EOS does not close `{id}`"));
            }
            break;
        }
        let cols: Vec<&str> = l.split('\t').collect();
        if l.starts_with('#') {
            let digits = &cols[0][1..];
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return malformed(n, format!("unexpected directive `{}`", cols[0]));
            }
            if cols.len() < 4 {
                return malformed(n, "node line needs id, category, function and parent");
            }
            let Some(id) = digits.parse().ok().and_then(NodeId::new) else {
                return malformed(n, format!("phrase ids start at {FIRST_NODE_ID}"));
            };
            let (function, parent, links) = parse_columns(n, &cols[2..])?;
            nodes.push(Row {
                line: n,
                node: NodeRef::Phrase(id),
                label: cols[1],
                function,
                parent,
                links,
            });
        } else {
            if cols.len() < 4 {
                return malformed(n, "token line needs form, pos, function and parent");
            }
            let form = unescape_form(cols[0]);
            if form.is_empty() || form.chars().any(|c| c.is_control()) {
                return malformed(n, "empty token form or control characters");
            }
            let position = tokens.len() as u32 + 1;
            let (function, parent, links) = parse_columns(n, &cols[2..])?;
            tokens.push((
                Token {
                    position,
                    form: form.to_string(),
                    pos: cols[1].to_string(),
                },
                Row {
                    line: n,
                    node: NodeRef::Token(position),
                    label: cols[1],
                    function,
                    parent,
                    links,
                },
            ));
        }
    }

    if tokens.is_empty() {
        return err(bos_line, ParseErrorKind::Invalid(format!("sentence `{id}` has no tokens")));
    }
    if tokens.len() > MAX_TOKENS {
        return err(
            bos_line,
            ParseErrorKind::Invalid(format!("more than {MAX_TOKENS} tokens")),
        );
    }

    let mut phrases = BTreeMap::new();
    let mut line_of: BTreeMap<NodeRef, usize> = BTreeMap::new();
    for (_, row) in &tokens {
        line_of.insert(row.node, row.line);
        if !tagsets.pos().contains(row.label) {
            return err(
                row.line,
                ParseErrorKind::UnknownLabel {
                    kind: TagsetKind::Pos,
                    label: row.label.to_string(),
                },
            );
        }
    }
    for row in &nodes {
        let id = row.node.as_phrase().expect("phrase row");
        if phrases.contains_key(&id) {
            return err(row.line, ParseErrorKind::DuplicateNode(id.get()));
        }
        if !tagsets.check_label(TagsetKind::Node, row.label).is_valid() {
            return err(
                row.line,
                ParseErrorKind::UnknownLabel {
                    kind: TagsetKind::Node,
                    label: row.label.to_string(),
                },
            );
        }
        line_of.insert(row.node, row.line);
        phrases.insert(
            id,
            PhraseNode {
                id,
                category: row.label.to_string(),
            },
        );
    }

    let n_tokens = tokens.len() as u32;
    let exists = |id: u32| match NodeRef::from_id(id) {
        Some(NodeRef::Token(p)) => p <= n_tokens,
        Some(NodeRef::Phrase(p)) => phrases.contains_key(&p),
        None => false,
    };
    let mut edges = BTreeMap::new();
    let mut secondary = BTreeSet::new();
    for row in tokens.iter().map(|(_, r)| r).chain(nodes.iter()) {
        let function_ok = |f: &str| tagsets.is_edge_function(f);
        if !function_ok(row.function) {
            return err(
                row.line,
                ParseErrorKind::UnknownLabel {
                    kind: TagsetKind::Edge,
                    label: row.function.to_string(),
                },
            );
        }
        if row.parent == 0 {
            if row.function != UNLABELED {
                return malformed(row.line, "a root carries no function, use `--`");
            }
        } else {
            let parent = match NodeRef::from_id(row.parent) {
                Some(NodeRef::Phrase(p)) if phrases.contains_key(&p) => p,
                Some(NodeRef::Phrase(_)) => {
                    return err(row.line, ParseErrorKind::DanglingParent(row.parent))
                }
                _ => {
                    return malformed(
                        row.line,
                        format!("parent {} is not a phrase node", row.parent),
                    )
                }
            };
            edges.insert(
                row.node,
                Attachment {
                    parent,
                    function: row.function.to_string(),
                },
            );
        }
        for &(f, target) in &row.links {
            if !function_ok(f) {
                return err(
                    row.line,
                    ParseErrorKind::UnknownLabel {
                        kind: TagsetKind::Edge,
                        label: f.to_string(),
                    },
                );
            }
            if !exists(target) {
                return err(row.line, ParseErrorKind::DanglingTarget(target));
            }
            let target = NodeRef::from_id(target).expect("exists");
            if secondary
                .iter()
                .any(|l: &SecondaryLink| l.source == row.node && l.target == target)
            {
                return malformed(row.line, format!("duplicate link to {target}"));
            }
            secondary.insert(SecondaryLink {
                source: row.node,
                target,
                function: f.to_string(),
            });
        }
    }

    let graph = AnnotationGraph::from_parts(
        id.to_string(),
        tokens.into_iter().map(|(t, _)| t).collect(),
        phrases,
        edges,
        secondary,
        comments,
        status,
    );
    for v in graph.validate(tagsets) {
        if v.severity != Severity::Error {
            continue;
        }
        if !(v.rule.is_integrity() || status == Status::Complete) {
            continue;
        }
        let line = v
            .nodes
            .first()
            .and_then(|n| line_of.get(n).copied())
            .unwrap_or(bos_line);
        let kind = match v.rule {
            Rule::Cycle => ParseErrorKind::Cycle(v.nodes[0].id()),
            _ => ParseErrorKind::Invalid(v.to_string()),
        };
        return err(line, kind);
    }
    Ok(graph)
}
