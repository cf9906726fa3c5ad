use std::collections::BTreeMap;
use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    calibrate_threshold, sentence_instances, train, PhraseInstance, Smoothing, TaggerError,
    Variant, DEFAULT_THRESHOLD,
};
use crate::corpus::Corpus;
use crate::graph::Status;

pub const MIN_EVAL_SENTENCES: usize = 10;

/// Where the reliability threshold of each repetition comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReliabilityPolicy {
    Fixed(f64),
    /// Train on all but the last `heldout_fraction` of each training split
    /// and calibrate on that tail.
    Calibrate { target: f64, heldout_fraction: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub repetitions: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub variant: Variant,
    pub smoothing: Smoothing,
    pub reliability: ReliabilityPolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            repetitions: 10,
            train_fraction: 0.9,
            seed: 0,
            variant: Variant::Positional,
            smoothing: Smoothing::default(),
            reliability: ReliabilityPolicy::Fixed(DEFAULT_THRESHOLD),
        }
    }
}

/// Raw counts of one or more test runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalCounts {
    pub positions: u64,
    pub reliable: u64,
    pub reliable_correct: u64,
    pub unreliable_correct: u64,
}

fn ratio(n: u64, d: u64) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

impl EvalCounts {
    pub fn unreliable(&self) -> u64 {
        self.positions - self.reliable
    }

    pub fn correct(&self) -> u64 {
        self.reliable_correct + self.unreliable_correct
    }

    pub fn fraction_reliable(&self) -> f64 {
        ratio(self.reliable, self.positions)
    }

    pub fn acc_reliable(&self) -> f64 {
        ratio(self.reliable_correct, self.reliable)
    }

    pub fn acc_unreliable(&self) -> f64 {
        ratio(self.unreliable_correct, self.unreliable())
    }

    pub fn acc_overall(&self) -> f64 {
        ratio(self.correct(), self.positions)
    }

    fn add(&mut self, other: &EvalCounts) {
        self.positions += other.positions;
        self.reliable += other.reliable;
        self.reliable_correct += other.reliable_correct;
        self.unreliable_correct += other.unreliable_correct;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub repetition: usize,
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub threshold: f64,
    pub counts: EvalCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionEntry {
    pub gold: String,
    pub predicted: String,
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub sentences: usize,
    pub rows: Vec<EvalRow>,
    /// Counts pooled over all repetitions.
    pub aggregate: EvalCounts,
    /// Gold and predicted function of every test position, pooled.
    pub confusion: Vec<ConfusionEntry>,
}

/// Repeated random train/test evaluation on the complete sentences of
/// `corpus`. Sentences, not phrases, are partitioned, and every test phrase
/// is decoded given its gold category and children.
pub fn evaluate(corpus: &Corpus, config: &EvalConfig) -> Result<EvalReport, TaggerError> {
    if config.repetitions == 0 {
        return Err(TaggerError::InvalidConfig("repetitions must be positive".into()));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(TaggerError::InvalidConfig(format!(
            "train fraction {} is outside (0, 1)",
            config.train_fraction
        )));
    }
    if let ReliabilityPolicy::Calibrate { heldout_fraction, .. } = config.reliability {
        if !(heldout_fraction > 0.0 && heldout_fraction < 1.0) {
            return Err(TaggerError::InvalidConfig(format!(
                "calibration fraction {heldout_fraction} is outside (0, 1)"
            )));
        }
    }
    let sentences: Vec<Vec<PhraseInstance>> = corpus
        .sentences()
        .iter()
        .filter(|s| s.status() == Status::Complete)
        .map(sentence_instances)
        .filter(|i| !i.is_empty())
        .collect();
    let n = sentences.len();
    if n < MIN_EVAL_SENTENCES {
        return Err(TaggerError::CorpusTooSmall {
            needed: MIN_EVAL_SENTENCES,
            found: n,
        });
    }
    let n_train = ((n as f64 * config.train_fraction).round() as usize).clamp(1, n - 1);

    let mut rows = Vec::with_capacity(config.repetitions);
    let mut aggregate = EvalCounts::default();
    let mut confusion: BTreeMap<(String, String), u64> = BTreeMap::new();
    for rep in 0..config.repetitions {
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(rep as u64);
        order.shuffle(&mut rng);
        let (train_idx, test_idx) = order.split_at(n_train);
        let gather = |idx: &[usize]| -> Vec<PhraseInstance> {
            idx.iter().flat_map(|&i| sentences[i].iter().cloned()).collect()
        };
        let model = match config.reliability {
            ReliabilityPolicy::Fixed(theta) => {
                train(&gather(train_idx), config.smoothing)?.with_threshold(theta)?
            }
            ReliabilityPolicy::Calibrate {
                target,
                heldout_fraction,
            } => {
                // the calibrated model itself is tested: retraining on the
                // whole split would shift the quotient distribution away
                // from the one the threshold was fitted to
                let n_cal = ((train_idx.len() as f64 * heldout_fraction).round() as usize).max(1);
                if n_cal >= train_idx.len() {
                    return Err(TaggerError::InvalidConfig(
                        "training split too small to hold out calibration data".into(),
                    ));
                }
                let (fit_idx, cal_idx) = train_idx.split_at(train_idx.len() - n_cal);
                let fit = train(&gather(fit_idx), config.smoothing)?;
                calibrate_threshold(&fit, &gather(cal_idx), target, config.variant)?.0
            }
        };

        let mut counts = EvalCounts::default();
        for inst in gather(test_idx) {
            let d = model.decode_functions(&inst.category, &inst.tags(), config.variant)?;
            for (s, (_, gold)) in d.suggestions.iter().zip(&inst.children) {
                let correct = s.best.function == *gold;
                counts.positions += 1;
                if s.reliable {
                    counts.reliable += 1;
                    counts.reliable_correct += correct as u64;
                } else {
                    counts.unreliable_correct += correct as u64;
                }
                *confusion
                    .entry((gold.clone(), s.best.function.clone()))
                    .or_insert(0) += 1;
            }
        }
        aggregate.add(&counts);
        rows.push(EvalRow {
            repetition: rep + 1,
            train_sentences: train_idx.len(),
            test_sentences: test_idx.len(),
            threshold: model.threshold(),
            counts,
        });
    }
    Ok(EvalReport {
        config: *config,
        sentences: n,
        rows,
        aggregate,
        confusion: confusion
            .into_iter()
            .map(|((gold, predicted), count)| ConfusionEntry {
                gold,
                predicted,
                count,
            })
            .collect(),
    })
}

impl EvalReport {
    /// Tab-separated table: one row per repetition and a final `all` row
    /// over the pooled counts.
    pub fn to_table(&self) -> String {
        let mut out = String::from(
            "repetition\ttrain\ttest\tthreshold\tpositions\treliable\tfraction_reliable\tacc_reliable\tacc_unreliable\tacc_overall\n",
        );
        let mut row = |label: &str, train: &str, test: &str, threshold: &str, c: &EvalCounts| {
            let _ = writeln!(
                out,
                "{label}\t{train}\t{test}\t{threshold}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                c.positions,
                c.reliable,
                c.fraction_reliable(),
                c.acc_reliable(),
                c.acc_unreliable(),
                c.acc_overall()
            );
        };
        for r in &self.rows {
            row(
                &r.repetition.to_string(),
                &r.train_sentences.to_string(),
                &r.test_sentences.to_string(),
                &format!("{:.6}", r.threshold),
                &r.counts,
            );
        }
        row("all", "-", "-", "-", &self.aggregate);
        out
    }

    /// The four headline figures plus the most frequent confusions.
    pub fn summary(&self) -> String {
        let a = &self.aggregate;
        let mut out = format!(
            "{} repetitions over {} sentences, {} test positions\n\
             fraction reliable: {:.2}%\n\
             reliable accuracy: {:.2}%\n\
             unreliable accuracy: {:.2}%\n\
             overall accuracy: {:.2}%\n",
            self.rows.len(),
            self.sentences,
            a.positions,
            100.0 * a.fraction_reliable(),
            100.0 * a.acc_reliable(),
            100.0 * a.acc_unreliable(),
            100.0 * a.acc_overall(),
        );
        let mut errors: Vec<&ConfusionEntry> =
            self.confusion.iter().filter(|e| e.gold != e.predicted).collect();
        errors.sort_by(|a, b| b.count.cmp(&a.count).then(a.gold.cmp(&b.gold)));
        if !errors.is_empty() {
            out.push_str("most frequent confusions (gold -> predicted):\n");
            for e in errors.iter().take(5) {
                let _ = writeln!(out, "  {} -> {}: {}", e.gold, e.predicted, e.count);
            }
        }
        out
    }
}
