use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use thiserror::Error;

use argbank::automation::{suggest, AutomationError, AutomationLevel, PosClassMap, SuggestOptions};
use argbank::corpus::{load, save, LockMode, StoreError};
use argbank::graph::{AnnotationGraph, GraphError, Rule, Severity, Status, Violation};
use argbank::layout::{layout, render_svg, LayoutParams};
use argbank::tagger::{
    calibrate_threshold, evaluate, extract_instances, sentence_instances, train, EvalConfig,
    TaggerError, TaggerModel, Variant,
};
use argbank::tagset::UNLABELED;
use argbank::Corpus;

use crate::wire::{
    Command, CommandEnvelope, CommandResponse, EvalResponse, SentenceList, SentenceSummary,
    SentenceView, SuggestRequest, SuggestionResponse, TrainRequest, TrainResponse,
    SCHEMA_VERSION,
};

const PREVIEW_TOKENS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    /// Corpus file; required for autosave.
    pub corpus_path: Option<PathBuf>,
    /// Where trained models are written and read at startup.
    pub model_path: Option<PathBuf>,
    /// Save the corpus after every accepted command.
    pub autosave: bool,
    pub layout: LayoutParams,
    /// Decoder used when a request does not name one.
    pub variant: Variant,
    pub classes: PosClassMap,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            corpus_path: None,
            model_path: None,
            autosave: false,
            layout: LayoutParams::default(),
            variant: Variant::Positional,
            classes: PosClassMap::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown sentence `{0}`")]
    UnknownSentence(String),
    #[error("sentence `{id}` is at revision {current}, the command was based on {base}")]
    StaleRevision { id: String, current: u64, base: u64 },
    #[error("command refused: {message}")]
    Refused {
        message: String,
        violations: Vec<Violation>,
    },
    #[error("{0}")]
    BadRequest(String),
    #[error("no tagger model is loaded")]
    NoModel,
    #[error(transparent)]
    Automation(AutomationError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{}: {message}", .path.display())]
    Model { path: PathBuf, message: String },
}

impl From<AutomationError> for ServiceError {
    fn from(e: AutomationError) -> Self {
        match e {
            AutomationError::NoModel => ServiceError::NoModel,
            e => ServiceError::Automation(e),
        }
    }
}

fn refused(message: impl Into<String>) -> ServiceError {
    ServiceError::Refused {
        message: message.into(),
        violations: Vec::new(),
    }
}

impl From<GraphError> for ServiceError {
    fn from(e: GraphError) -> Self {
        let violations = match &e {
            GraphError::UnknownLabel { .. } => vec![Violation {
                severity: Severity::Error,
                rule: Rule::UnknownLabel,
                message: e.to_string(),
                nodes: Vec::new(),
            }],
            _ => Vec::new(),
        };
        ServiceError::Refused {
            message: e.to_string(),
            violations,
        }
    }
}

struct Sentences {
    corpus: Corpus,
    /// Parallel to the corpus sentences.
    revisions: Vec<u64>,
}

impl Sentences {
    fn index(&self, id: &str) -> Result<usize, ServiceError> {
        self.corpus
            .sentences()
            .iter()
            .position(|s| s.id() == id)
            .ok_or_else(|| ServiceError::UnknownSentence(id.to_string()))
    }
}

/// Corpus browsing, editing, suggestions and training behind one handle.
///
/// Commands are serialized by a single writer lock and carry the revision
/// they were based on; a command based on an older revision is rejected.
/// Reads see a consistent snapshot. The model slot is swapped atomically
/// and training runs one at a time.
pub struct AnnotationService {
    state: RwLock<Sentences>,
    model: RwLock<Option<Arc<TaggerModel>>>,
    training: Mutex<()>,
    config: ServiceConfig,
}

fn apply(
    graph: &mut AnnotationGraph,
    corpus: &Corpus,
    command: &Command,
) -> Result<(), ServiceError> {
    let ts = corpus.tagsets();
    match command {
        Command::Group {
            children,
            category,
            functions,
        } => {
            if let Some(fs) = functions {
                if fs.len() != children.len() {
                    return Err(refused(format!(
                        "{} functions for {} children",
                        fs.len(),
                        children.len()
                    )));
                }
            }
            graph.group(ts, children, category)?;
            for (c, f) in children.iter().zip(functions.iter().flatten()) {
                if f != UNLABELED {
                    graph.relabel(ts, argbank::graph::RelabelTarget::Edge(*c), f)?;
                }
            }
        }
        Command::Ungroup { node, force } => graph.ungroup(*node, *force)?,
        Command::Relabel { target, label } => graph.relabel(ts, *target, label)?,
        Command::Reattach { node, parent } => graph.reattach(*node, *parent)?,
        Command::Detach { node } => graph.detach(*node)?,
        Command::SetSecondary {
            source,
            target,
            function,
            action,
        } => graph.set_secondary(ts, *source, *target, function, *action)?,
        Command::Comment { text } => graph.add_comment(text.clone())?,
        Command::SetStatus { status } => {
            graph
                .set_status(ts, *status)
                .map_err(|violations| ServiceError::Refused {
                    message: format!("sentence cannot be marked {}", status.as_str()),
                    violations,
                })?
        }
        Command::Batch { commands } => {
            for c in commands {
                apply(graph, corpus, c)?;
            }
        }
    }
    Ok(())
}

fn write_model(path: &Path, model: &TaggerModel) -> Result<(), ServiceError> {
    let err = |e: std::io::Error| ServiceError::Model {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    fs::write(&tmp, model.to_json()).map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

impl AnnotationService {
    pub fn new(corpus: Corpus, config: ServiceConfig) -> Self {
        let revisions = vec![0; corpus.len()];
        AnnotationService {
            state: RwLock::new(Sentences { corpus, revisions }),
            model: RwLock::new(None),
            training: Mutex::new(()),
            config,
        }
    }

    /// Loads the corpus from `config.corpus_path` and, if the file exists,
    /// the model from `config.model_path`.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let path = config
            .corpus_path
            .clone()
            .ok_or_else(|| ServiceError::BadRequest("no corpus path configured".into()))?;
        let corpus = load(&path)?;
        let model = match &config.model_path {
            Some(p) if p.exists() => {
                let text = fs::read_to_string(p).map_err(|e| ServiceError::Model {
                    path: p.clone(),
                    message: e.to_string(),
                })?;
                Some(TaggerModel::from_json(&text).map_err(|e| ServiceError::Model {
                    path: p.clone(),
                    message: e.to_string(),
                })?)
            }
            _ => None,
        };
        let service = AnnotationService::new(corpus, config);
        if let Some(m) = model {
            service.set_model(m);
        }
        Ok(service)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn set_model(&self, model: TaggerModel) {
        *self.model.write().expect("model lock") = Some(Arc::new(model));
    }

    pub fn model(&self) -> Option<Arc<TaggerModel>> {
        self.model.read().expect("model lock").clone()
    }

    pub fn corpus(&self) -> Corpus {
        self.state.read().expect("corpus lock").corpus.clone()
    }

    pub fn list(&self) -> SentenceList {
        let st = self.state.read().expect("corpus lock");
        SentenceList {
            schema_version: SCHEMA_VERSION,
            corpus: st.corpus.name().to_string(),
            sentences: st
                .corpus
                .sentences()
                .iter()
                .zip(&st.revisions)
                .map(|(g, &revision)| SentenceSummary {
                    id: g.id().to_string(),
                    status: g.status(),
                    revision,
                    preview: g
                        .tokens()
                        .iter()
                        .take(PREVIEW_TOKENS)
                        .map(|t| t.form.as_str())
                        .collect::<Vec<_>>()
                        .join(" "),
                    tokens: g.tokens().len(),
                    phrases: g.phrase_count(),
                })
                .collect(),
        }
    }

    /// The sentence and its current revision.
    pub fn graph(&self, id: &str) -> Result<(AnnotationGraph, u64), ServiceError> {
        let st = self.state.read().expect("corpus lock");
        let i = st.index(id)?;
        Ok((st.corpus.sentences()[i].clone(), st.revisions[i]))
    }

    fn view(&self, corpus: &Corpus, graph: &AnnotationGraph, revision: u64) -> SentenceView {
        SentenceView::new(
            graph,
            revision,
            graph.validate(corpus.tagsets()),
            layout(graph, &self.config.layout),
        )
    }

    pub fn sentence(&self, id: &str) -> Result<SentenceView, ServiceError> {
        let st = self.state.read().expect("corpus lock");
        let i = st.index(id)?;
        Ok(self.view(&st.corpus, &st.corpus.sentences()[i], st.revisions[i]))
    }

    /// Applies one command if `base_revision` is current. The command is
    /// all-or-nothing: on any refusal the sentence is unchanged.
    pub fn apply_command(
        &self,
        id: &str,
        envelope: &CommandEnvelope,
    ) -> Result<CommandResponse, ServiceError> {
        if let Some(other) = &envelope.sentence_id {
            if other != id {
                return Err(ServiceError::BadRequest(format!(
                    "envelope names sentence `{other}`, the request `{id}`"
                )));
            }
        }
        let mut st = self.state.write().expect("corpus lock");
        let i = st.index(id)?;
        let current = st.revisions[i];
        if envelope.base_revision != current {
            return Err(ServiceError::StaleRevision {
                id: id.to_string(),
                current,
                base: envelope.base_revision,
            });
        }
        let old = st.corpus.sentences()[i].clone();
        let mut graph = old.clone();
        apply(&mut graph, &st.corpus, &envelope.command)?;
        let integrity = graph.integrity_violations(st.corpus.tagsets());
        if !integrity.is_empty() {
            return Err(ServiceError::Refused {
                message: "the command would break the sentence's integrity".into(),
                violations: integrity,
            });
        }
        st.corpus.replace(graph.clone()).map_err(|e| refused(e.to_string()))?;
        if self.config.autosave {
            if let Some(path) = &self.config.corpus_path {
                if let Err(e) = save(&st.corpus, path, LockMode::Wait) {
                    st.corpus.replace(old).expect("previous state was valid");
                    return Err(e.into());
                }
            }
        }
        st.revisions[i] += 1;
        let revision = st.revisions[i];
        Ok(CommandResponse {
            schema_version: SCHEMA_VERSION,
            revision,
            sentence: self.view(&st.corpus, &graph, revision),
        })
    }

    /// Proposals for a sentence. Never changes anything.
    pub fn suggest(&self, id: &str, req: &SuggestRequest) -> Result<SuggestionResponse, ServiceError> {
        let level = AutomationLevel::try_from(req.level)?;
        let model = self.model();
        let st = self.state.read().expect("corpus lock");
        let i = st.index(id)?;
        let graph = &st.corpus.sentences()[i];
        let options = SuggestOptions {
            variant: req.variant.unwrap_or(self.config.variant),
            classes: self.config.classes.clone(),
        };
        let set = suggest(
            graph,
            st.corpus.tagsets(),
            model.as_deref(),
            level,
            &req.selection,
            &options,
        )?;
        Ok(SuggestionResponse::new(
            id,
            st.revisions[i],
            graph,
            st.corpus.tagsets(),
            set,
        ))
    }

    /// Trains on the complete sentences and swaps the model in. With
    /// calibration, the last part of the complete sentences is held out to
    /// choose the threshold and the model is trained on the rest.
    pub fn train(&self, req: &TrainRequest) -> Result<TrainResponse, ServiceError> {
        let _exclusive = self.training.lock().expect("training lock");
        let corpus = self.corpus();
        let smoothing = req.smoothing.unwrap_or_default();
        let extraction = extract_instances(&corpus);
        let (model, instances, calibrated_fraction, warning) = match req.calibrate {
            None => {
                let m = train(&extraction.instances, smoothing)?;
                let m = match req.threshold {
                    Some(t) => m.with_threshold(t)?,
                    None => m,
                };
                (m, extraction.instances.len(), None, None)
            }
            Some(cal) => {
                if !(cal.heldout_fraction > 0.0 && cal.heldout_fraction < 1.0) {
                    return Err(ServiceError::BadRequest(format!(
                        "held-out fraction {} is outside (0, 1)",
                        cal.heldout_fraction
                    )));
                }
                let complete: Vec<&AnnotationGraph> = corpus
                    .sentences()
                    .iter()
                    .filter(|s| s.status() == Status::Complete)
                    .collect();
                let n_cal = (complete.len() as f64 * cal.heldout_fraction).round() as usize;
                if n_cal == 0 || n_cal >= complete.len() {
                    return Err(ServiceError::BadRequest(
                        "too few complete sentences to hold out calibration data".into(),
                    ));
                }
                let (fit, held) = complete.split_at(complete.len() - n_cal);
                let instances = |gs: &[&AnnotationGraph]| {
                    gs.iter().flat_map(|g| sentence_instances(g)).collect::<Vec<_>>()
                };
                let fit = instances(fit);
                let m = train(&fit, smoothing)?;
                let variant = req.variant.unwrap_or(self.config.variant);
                let (m, c) = calibrate_threshold(&m, &instances(held), cal.target, variant)?;
                (m, fit.len(), Some(c.reliable_fraction), c.warning)
            }
        };
        if let Some(path) = &self.config.model_path {
            write_model(path, &model)?;
        }
        let response = TrainResponse {
            schema_version: SCHEMA_VERSION,
            categories: model.categories().map(str::to_string).collect(),
            instances,
            skipped_sentences: extraction.skipped,
            threshold: model.threshold(),
            calibrated_fraction,
            warning,
        };
        self.set_model(model);
        Ok(response)
    }

    pub fn evaluate(&self, config: &EvalConfig) -> Result<EvalResponse, ServiceError> {
        let report = evaluate(&self.corpus(), config)?;
        Ok(EvalResponse {
            schema_version: SCHEMA_VERSION,
            table: report.to_table(),
            summary: report.summary(),
            report,
        })
    }

    pub fn render(&self, id: &str) -> Result<String, ServiceError> {
        let (graph, _) = self.graph(id)?;
        Ok(render_svg(&layout(&graph, &self.config.layout)))
    }
}
