//! Request and response bodies. Every JSON response carries
//! `schema_version`; see [`SCHEMA_VERSION`].

use serde::{Deserialize, Serialize};

use argbank::automation::{
    apply_reliable, AutomationLevel, KernelSpan, PhraseProposal, Selection, SuggestionSet,
};
use argbank::graph::{
    AnnotationGraph, LinkAction, PrimaryEdge, RelabelTarget, SecondaryLink, Token, Violation,
};
use argbank::layout::Geometry;
use argbank::tagger::{EvalReport, Smoothing, Variant};
use argbank::tagset::{TagsetRegistry, UNLABELED};
use argbank::{NodeId, NodeRef, Status};

/// Version of the JSON shapes in this module. Also sent as the
/// `X-Schema-Version` header.
pub const SCHEMA_VERSION: u32 = 1;
pub const SCHEMA_HEADER: &str = "x-schema-version";

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn is_false(b: &bool) -> bool {
    !*b
}

/// One editing command. Parameters mirror the graph operations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    /// Groups parentless nodes. `functions`, if given, labels the new edges
    /// in the order of `children`; `--` leaves an edge unlabeled.
    Group {
        children: Vec<NodeRef>,
        category: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        functions: Option<Vec<String>>,
    },
    Ungroup {
        node: NodeId,
        #[serde(default, skip_serializing_if = "is_false")]
        force: bool,
    },
    Relabel {
        target: RelabelTarget,
        label: String,
    },
    Reattach {
        node: NodeRef,
        parent: NodeId,
    },
    Detach {
        node: NodeRef,
    },
    SetSecondary {
        source: NodeRef,
        target: NodeRef,
        #[serde(default = "unlabeled")]
        function: String,
        action: LinkAction,
    },
    Comment {
        text: String,
    },
    SetStatus {
        status: Status,
    },
    /// Applies all commands or none, as one revision.
    Batch {
        commands: Vec<Command>,
    },
}

fn unlabeled() -> String {
    UNLABELED.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandEnvelope {
    /// Optional; must match the sentence in the path when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_id: Option<String>,
    pub base_revision: u64,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceSummary {
    pub id: String,
    pub status: Status,
    pub revision: u64,
    /// The first few token forms.
    pub preview: String,
    pub tokens: usize,
    pub phrases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceList {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub corpus: String,
    pub sentences: Vec<SentenceSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeView {
    pub id: NodeId,
    pub category: String,
}

/// A sentence with everything a client needs to draw and check it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceView {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub id: String,
    pub revision: u64,
    pub status: Status,
    pub tokens: Vec<Token>,
    pub nodes: Vec<NodeView>,
    pub edges: Vec<PrimaryEdge>,
    pub secondary: Vec<SecondaryLink>,
    pub comments: Vec<String>,
    /// Validator output for this state.
    pub violations: Vec<Violation>,
    pub geometry: Geometry,
}

impl SentenceView {
    pub fn new(
        graph: &AnnotationGraph,
        revision: u64,
        violations: Vec<Violation>,
        geometry: Geometry,
    ) -> Self {
        SentenceView {
            schema_version: SCHEMA_VERSION,
            id: graph.id().to_string(),
            revision,
            status: graph.status(),
            tokens: graph.tokens().to_vec(),
            nodes: graph
                .phrases()
                .map(|p| NodeView {
                    id: p.id,
                    category: p.category.clone(),
                })
                .collect(),
            edges: graph.primary_edges().collect(),
            secondary: graph.secondary_links().cloned().collect(),
            comments: graph.comments().to_vec(),
            violations,
            geometry,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestRequest {
    pub level: u8,
    #[serde(default)]
    pub selection: Selection,
    #[serde(default)]
    pub variant: Option<Variant>,
}

/// Proposals for one sentence. Nothing has been applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionResponse {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub sentence_id: String,
    /// Revision the proposals were computed for.
    pub revision: u64,
    pub level: AutomationLevel,
    pub kernels: Vec<KernelSpan>,
    pub proposals: Vec<PhraseProposal>,
    /// Children whose proposed function needs an explicit decision.
    pub must_confirm: Vec<NodeRef>,
    /// Applies every reliable proposal; send it with `revision` as base.
    pub bulk_apply: Option<Command>,
}

impl SuggestionResponse {
    pub fn new(
        sentence_id: &str,
        revision: u64,
        graph: &AnnotationGraph,
        tagsets: &TagsetRegistry,
        set: SuggestionSet,
    ) -> Self {
        SuggestionResponse {
            schema_version: SCHEMA_VERSION,
            sentence_id: sentence_id.to_string(),
            revision,
            must_confirm: set.must_confirm().map(|f| f.child).collect(),
            bulk_apply: bulk_apply(graph, tagsets, &set),
            level: set.level,
            kernels: set.kernels,
            proposals: set.proposals,
        }
    }
}

/// The command that applies the reliable part of `set`, with the same
/// effect as [`apply_reliable`]: new phrases are grouped with their
/// reliable labels, existing phrases are relabeled. `None` if there is
/// nothing to apply.
pub fn bulk_apply(
    graph: &AnnotationGraph,
    tagsets: &TagsetRegistry,
    set: &SuggestionSet,
) -> Option<Command> {
    let mut after = graph.clone();
    apply_reliable(&mut after, tagsets, set).ok()?;
    let label = |c: NodeRef| {
        after
            .attachment(c)
            .map_or(UNLABELED.to_string(), |a| a.function.clone())
    };
    let mut commands = Vec::new();
    for p in &set.proposals {
        match p.node {
            None => commands.push(Command::Group {
                children: p.children.clone(),
                category: p.category.clone(),
                functions: Some(p.children.iter().map(|&c| label(c)).collect()),
            }),
            Some(_) => {
                for c in &p.children {
                    let before = graph.attachment(*c).map(|a| &a.function);
                    if before != after.attachment(*c).map(|a| &a.function) {
                        commands.push(Command::Relabel {
                            target: RelabelTarget::Edge(*c),
                            label: label(*c),
                        });
                    }
                }
            }
        }
    }
    (!commands.is_empty()).then_some(Command::Batch { commands })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandResponse {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub revision: u64,
    pub sentence: SentenceView,
}

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    /// Machine-readable kind, e.g. `stale_revision`.
    pub error: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub current_revision: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrateRequest {
    pub target: f64,
    /// Share of complete sentences held out for calibration.
    #[serde(default = "default_heldout")]
    pub heldout_fraction: f64,
}

fn default_heldout() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainRequest {
    #[serde(default)]
    pub smoothing: Option<Smoothing>,
    #[serde(default)]
    pub threshold: Option<f64>,
    #[serde(default)]
    pub calibrate: Option<CalibrateRequest>,
    #[serde(default)]
    pub variant: Option<Variant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResponse {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub categories: Vec<String>,
    pub instances: usize,
    /// Sentences left out because they are not complete.
    pub skipped_sentences: usize,
    pub threshold: f64,
    /// Reliable fraction on the calibration sentences, if calibrated.
    pub calibrated_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResponse {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub report: EvalReport,
    /// Tab-separated rows, one per repetition plus the pooled row.
    pub table: String,
    pub summary: String,
}
