use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ngram::{Ngram, BOUNDARY, UNKNOWN};
use super::{PhraseInstance, TaggerError};

/// Reliability threshold used until a model is calibrated.
pub const DEFAULT_THRESHOLD: f64 = 0.1;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Smoothing {
    /// Additive constant of the lexical estimates.
    pub delta: f64,
    /// Lower bound for each interpolation weight.
    pub lambda_floor: f64,
}

impl Default for Smoothing {
    fn default() -> Self {
        Smoothing {
            delta: 0.5,
            lambda_floor: 1e-3,
        }
    }
}

/// Counts for one phrase category.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CategoryModel {
    pub(crate) tags: Vec<String>,
    pub(crate) functions: Vec<String>,
    /// `lexical[t][g]` is how often tag `t` carried function `g`.
    pub(crate) lexical: Vec<Vec<u64>>,
    pub(crate) tag_totals: Vec<u64>,
    pub(crate) function_totals: Vec<u64>,
    pub(crate) tag_context: Ngram,
    pub(crate) function_context: Ngram,
    pub(crate) instances: u64,
}

impl CategoryModel {
    pub(crate) fn tag_index(&self, tag: &str) -> Option<u32> {
        self.tags
            .binary_search_by(|t| t.as_str().cmp(tag))
            .ok()
            .map(|i| i as u32)
    }

    pub(crate) fn function_index(&self, function: &str) -> Option<u32> {
        self.functions
            .binary_search_by(|f| f.as_str().cmp(function))
            .ok()
            .map(|i| i as u32)
    }

    /// Tag ids, with tags outside the inventory mapped to [`UNKNOWN`].
    pub(crate) fn tag_ids(&self, tags: &[&str]) -> Vec<u32> {
        tags.iter()
            .map(|t| self.tag_index(t).unwrap_or(UNKNOWN))
            .collect()
    }

    /// `P(G|T)` with additive smoothing over the category's functions.
    pub(crate) fn lexical_prob(&self, t: u32, g: u32, delta: f64) -> f64 {
        let t = t as usize;
        let n = self.functions.len() as f64;
        (self.lexical[t][g as usize] as f64 + delta) / (self.tag_totals[t] as f64 + delta * n)
    }

    /// `P(T|G)` with additive smoothing over the category's tags.
    pub(crate) fn emission_prob(&self, t: u32, g: u32, delta: f64) -> f64 {
        let g = g as usize;
        let n = self.tags.len() as f64;
        (self.lexical[t as usize][g] as f64 + delta) / (self.function_totals[g] as f64 + delta * n)
    }

    fn build(
        tags: Vec<String>,
        functions: Vec<String>,
        lexical: Vec<Vec<u64>>,
        tag_trigrams: BTreeMap<[u32; 3], u64>,
        function_trigrams: BTreeMap<[u32; 3], u64>,
        instances: u64,
    ) -> Self {
        let tag_totals = lexical.iter().map(|row| row.iter().sum()).collect();
        let function_totals = (0..functions.len())
            .map(|g| lexical.iter().map(|row| row[g]).sum())
            .collect();
        CategoryModel {
            tag_context: Ngram::from_trigrams(tags.len(), tag_trigrams),
            function_context: Ngram::from_trigrams(functions.len(), function_trigrams),
            tags,
            functions,
            lexical,
            tag_totals,
            function_totals,
            instances,
        }
    }
}

/// Per-category lexical and contextual tables plus the reliability
/// threshold. Immutable once trained.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub(crate) categories: BTreeMap<String, CategoryModel>,
    pub(crate) smoothing: Smoothing,
    pub(crate) threshold: f64,
}

/// A model with no tables; every decode reports [`TaggerError::NoModel`]
/// or an unknown category.
impl Default for TaggerModel {
    fn default() -> Self {
        TaggerModel {
            categories: BTreeMap::new(),
            smoothing: Smoothing::default(),
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// Trains one table per phrase category. Counts do not depend on the
/// order of `instances`.
pub fn train(instances: &[PhraseInstance], smoothing: Smoothing) -> Result<TaggerModel, TaggerError> {
    if instances.is_empty() {
        return Err(TaggerError::EmptyTraining);
    }
    if !(smoothing.delta >= 0.0 && smoothing.delta.is_finite())
        || !(0.0..1.0 / 3.0).contains(&smoothing.lambda_floor)
    {
        return Err(TaggerError::InvalidSmoothing);
    }
    let mut by_category: BTreeMap<&str, Vec<&PhraseInstance>> = BTreeMap::new();
    for inst in instances {
        if inst.children.is_empty() {
            return Err(TaggerError::EmptyInput);
        }
        by_category.entry(&inst.category).or_default().push(inst);
    }
    let categories = by_category
        .into_iter()
        .map(|(q, insts)| (q.to_string(), train_category(&insts, smoothing)))
        .collect();
    Ok(TaggerModel {
        categories,
        smoothing,
        threshold: DEFAULT_THRESHOLD,
    })
}

fn train_category(instances: &[&PhraseInstance], smoothing: Smoothing) -> CategoryModel {
    let tags: Vec<String> = instances
        .iter()
        .flat_map(|i| i.children.iter().map(|(t, _)| t.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let functions: Vec<String> = instances
        .iter()
        .flat_map(|i| i.children.iter().map(|(_, g)| g.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index = |set: &[String], s: &str| set.binary_search_by(|x| x.as_str().cmp(s)).unwrap() as u32;

    let mut lexical = vec![vec![0u64; functions.len()]; tags.len()];
    let mut tag_seqs = Vec::with_capacity(instances.len());
    let mut fn_seqs = Vec::with_capacity(instances.len());
    for inst in instances {
        let ts: Vec<u32> = inst.children.iter().map(|(t, _)| index(&tags, t)).collect();
        let gs: Vec<u32> = inst.children.iter().map(|(_, g)| index(&functions, g)).collect();
        for (&t, &g) in ts.iter().zip(&gs) {
            lexical[t as usize][g as usize] += 1;
        }
        tag_seqs.push(ts);
        fn_seqs.push(gs);
    }
    let tag_trigrams = Ngram::count(tags.len(), tag_seqs.iter().map(Vec::as_slice));
    let fn_trigrams = Ngram::count(functions.len(), fn_seqs.iter().map(Vec::as_slice));
    let mut m = CategoryModel::build(
        tags,
        functions,
        lexical,
        tag_trigrams,
        fn_trigrams,
        instances.len() as u64,
    );
    m.tag_context.fit_lambdas(smoothing.lambda_floor);
    m.function_context.fit_lambdas(smoothing.lambda_floor);
    m
}

impl TaggerModel {
    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// A copy of the model using `threshold` for reliability decisions.
    pub fn with_threshold(&self, threshold: f64) -> Result<TaggerModel, TaggerError> {
        if !(threshold > 0.0 && threshold <= 1.0) {
            return Err(TaggerError::InvalidThreshold(threshold));
        }
        Ok(TaggerModel {
            threshold,
            ..self.clone()
        })
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.categories.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.categories.is_empty()
    }

    /// Child tags seen under `category`, sorted.
    pub fn tags(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(|m| m.tags.as_slice())
    }

    /// Functions seen under `category`, sorted.
    pub fn functions(&self, category: &str) -> Option<&[String]> {
        self.categories.get(category).map(|m| m.functions.as_slice())
    }

    pub fn instance_count(&self, category: &str) -> u64 {
        self.categories.get(category).map_or(0, |m| m.instances)
    }

    /// `P_Q(G|T)`; `None` if the category, tag or function is unseen.
    pub fn lexical(&self, category: &str, tag: &str, function: &str) -> Option<f64> {
        let m = self.categories.get(category)?;
        Some(m.lexical_prob(m.tag_index(tag)?, m.function_index(function)?, self.smoothing.delta))
    }

    /// `P_Q(T|G)`; `None` if the category, tag or function is unseen.
    pub fn emission(&self, category: &str, tag: &str, function: &str) -> Option<f64> {
        let m = self.categories.get(category)?;
        Some(m.emission_prob(m.tag_index(tag)?, m.function_index(function)?, self.smoothing.delta))
    }

    /// `P_Q(T_i|T_{i-1},T_{i-2})`. `None` in a context position stands for
    /// the sentence-initial boundary.
    pub fn contextual(
        &self,
        category: &str,
        tag: &str,
        prev1: Option<&str>,
        prev2: Option<&str>,
    ) -> Option<f64> {
        let m = self.categories.get(category)?;
        let id = |t: Option<&str>| t.map_or(BOUNDARY, |t| m.tag_index(t).unwrap_or(UNKNOWN));
        Some(m.tag_context.prob(m.tag_index(tag)?, id(prev1), id(prev2)))
    }

    /// `P_Q(G_i|G_{i-1},G_{i-2})` over function sequences.
    pub fn transition(
        &self,
        category: &str,
        function: &str,
        prev1: Option<&str>,
        prev2: Option<&str>,
    ) -> Option<f64> {
        let m = self.categories.get(category)?;
        let id =
            |g: Option<&str>| g.map_or(BOUNDARY, |g| m.function_index(g).unwrap_or(UNKNOWN));
        Some(m.function_context.prob(m.function_index(function)?, id(prev1), id(prev2)))
    }

    /// Interpolation weights (unigram, bigram, trigram) of the tag and the
    /// function models of `category`.
    pub fn lambdas(&self, category: &str) -> Option<([f64; 3], [f64; 3])> {
        let m = self.categories.get(category)?;
        Some((m.tag_context.lambdas(), m.function_context.lambdas()))
    }

    /// Largest deviation from 1 of any conditional distribution in the
    /// model: `P(G|T)` for every seen tag, `P(T|G)` for every function, and
    /// both trigram models for every training context.
    pub fn normalization_error(&self) -> f64 {
        let delta = self.smoothing.delta;
        let mut worst: f64 = 0.0;
        let mut see = |s: f64| worst = worst.max((s - 1.0).abs());
        for m in self.categories.values() {
            let (nt, ng) = (m.tags.len() as u32, m.functions.len() as u32);
            for t in 0..nt {
                see((0..ng).map(|g| m.lexical_prob(t, g, delta)).sum());
            }
            for g in 0..ng {
                see((0..nt).map(|t| m.emission_prob(t, g, delta)).sum());
            }
            for [a, b] in m.tag_context.contexts() {
                see((0..nt).map(|t| m.tag_context.prob(t, b, a)).sum());
            }
            for [a, b] in m.function_context.contexts() {
                see((0..ng).map(|g| m.function_context.prob(g, b, a)).sum());
            }
        }
        worst
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDump {
    format: u32,
    smoothing: Smoothing,
    threshold: f64,
    categories: Vec<CategoryDump>,
}

#[derive(Serialize, Deserialize)]
struct CategoryDump {
    category: String,
    instances: u64,
    tag_lambdas: [f64; 3],
    function_lambdas: [f64; 3],
    /// `(tag, function, count)`
    lexical: Vec<(String, String, u64)>,
    tag_trigrams: Vec<([String; 3], u64)>,
    function_trigrams: Vec<([String; 3], u64)>,
}

const BOUNDARY_LABEL: &str = "--";

fn dump_trigrams(ngram: &Ngram, names: &[String]) -> Vec<([String; 3], u64)> {
    let name = |i: u32| {
        if i == BOUNDARY {
            BOUNDARY_LABEL.to_string()
        } else {
            names[i as usize].clone()
        }
    };
    ngram
        .trigrams()
        .iter()
        .map(|(&[a, b, c], &n)| ([name(a), name(b), name(c)], n))
        .collect()
}

fn load_trigrams(
    entries: &[([String; 3], u64)],
    names: &[String],
) -> Result<BTreeMap<[u32; 3], u64>, TaggerError> {
    let id = |s: &str, allow_boundary: bool| -> Result<u32, TaggerError> {
        if allow_boundary && s == BOUNDARY_LABEL {
            return Ok(BOUNDARY);
        }
        names
            .binary_search_by(|x| x.as_str().cmp(s))
            .map(|i| i as u32)
            .map_err(|_| TaggerError::Dump(format!("trigram symbol `{s}` not in inventory")))
    };
    let mut out = BTreeMap::new();
    for ([a, b, c], n) in entries {
        if *n == 0 {
            return Err(TaggerError::Dump("zero trigram count".into()));
        }
        out.insert([id(a, true)?, id(b, true)?, id(c, false)?], *n);
    }
    Ok(out)
}

fn check_lambdas(l: [f64; 3]) -> Result<[f64; 3], TaggerError> {
    if l.iter().all(|x| (0.0..=1.0).contains(x)) && (l.iter().sum::<f64>() - 1.0).abs() < 1e-9 {
        Ok(l)
    } else {
        Err(TaggerError::Dump("interpolation weights must sum to 1".into()))
    }
}

impl TaggerModel {
    /// Versioned JSON dump of counts, weights, smoothing and threshold.
    pub fn to_json(&self) -> String {
        let categories = self
            .categories
            .iter()
            .map(|(q, m)| {
                let mut lexical = Vec::new();
                for (t, row) in m.lexical.iter().enumerate() {
                    for (g, &n) in row.iter().enumerate() {
                        if n > 0 {
                            lexical.push((m.tags[t].clone(), m.functions[g].clone(), n));
                        }
                    }
                }
                CategoryDump {
                    category: q.clone(),
                    instances: m.instances,
                    tag_lambdas: m.tag_context.lambdas(),
                    function_lambdas: m.function_context.lambdas(),
                    lexical,
                    tag_trigrams: dump_trigrams(&m.tag_context, &m.tags),
                    function_trigrams: dump_trigrams(&m.function_context, &m.functions),
                }
            })
            .collect();
        let dump = ModelDump {
            format: MODEL_FORMAT_VERSION,
            smoothing: self.smoothing,
            threshold: self.threshold,
            categories,
        };
        let mut s = serde_json::to_string_pretty(&dump).expect("model dump serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<TaggerModel, TaggerError> {
        let dump: ModelDump =
            serde_json::from_str(text).map_err(|e| TaggerError::Dump(e.to_string()))?;
        if dump.format != MODEL_FORMAT_VERSION {
            return Err(TaggerError::Dump(format!(
                "unsupported model format {}",
                dump.format
            )));
        }
        let mut categories = BTreeMap::new();
        for c in dump.categories {
            let tags: Vec<String> = c
                .lexical
                .iter()
                .map(|(t, _, _)| t.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let functions: Vec<String> = c
                .lexical
                .iter()
                .map(|(_, g, _)| g.clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut lexical = vec![vec![0u64; functions.len()]; tags.len()];
            for (t, g, n) in &c.lexical {
                let ti = tags.binary_search(t).expect("collected");
                let gi = functions.binary_search(g).expect("collected");
                lexical[ti][gi] = *n;
            }
            let tag_trigrams = load_trigrams(&c.tag_trigrams, &tags)?;
            let function_trigrams = load_trigrams(&c.function_trigrams, &functions)?;
            let mut m = CategoryModel::build(
                tags,
                functions,
                lexical,
                tag_trigrams,
                function_trigrams,
                c.instances,
            );
            m.tag_context.set_lambdas(check_lambdas(c.tag_lambdas)?);
            m.function_context
                .set_lambdas(check_lambdas(c.function_lambdas)?);
            if categories.insert(c.category.clone(), m).is_some() {
                return Err(TaggerError::Dump(format!(
                    "duplicate category `{}`",
                    c.category
                )));
            }
        }
        let model = TaggerModel {
            categories,
            smoothing: dump.smoothing,
            threshold: DEFAULT_THRESHOLD,
        };
        model.with_threshold(dump.threshold)
    }
}
