use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use argbank::random::random_instances;
use argbank::tagger::synthetic::{german_corpus, GeneratorConfig, GroundTruth};
use argbank::tagger::{
    evaluate, extract_instances, sentence_instances, train, EvalConfig, PhraseInstance,
    ReliabilityPolicy, Smoothing, Suggestion, TaggerError, TaggerModel, Variant,
};

#[path = "support/decode_oracle.rs"]
mod decode_oracle;

use decode_oracle::{brute_force_agreement, random_case, CATEGORIES, FUNCTIONS, TAGS};

#[test]
fn decoders_match_exhaustive_search() {
    brute_force_agreement(7, 300).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn trained_distributions_are_normalized(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(1..200);
        let data = random_instances(&mut rng, &CATEGORIES, &TAGS, &FUNCTIONS, count, 8);
        let delta = rng.random_range(0.0..2.0);
        let m = train(&data, Smoothing { delta, ..Smoothing::default() }).unwrap();
        prop_assert!(m.normalization_error() <= 1e-9, "{}", m.normalization_error());
        for q in m.categories() {
            let (a, b) = m.lambdas(q).unwrap();
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!((b.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn context_scaling_keeps_decisions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng);
        let k = case.tags.len();
        // new left context for the last position scales its scores only
        let mut other = case.tags.clone();
        for t in other.iter_mut().take(k - 1) {
            *t = TAGS.choose(&mut rng).unwrap();
        }
        let a = case.model.decode_functions(case.category, &case.tags, Variant::Positional).unwrap();
        let b = case.model.decode_functions(case.category, &other, Variant::Positional).unwrap();
        let (x, y) = (&a.suggestions[k - 1], &b.suggestions[k - 1]);
        prop_assert_eq!(&x.best.function, &y.best.function);
        prop_assert_eq!(
            x.competitor.as_ref().map(|c| &c.function),
            y.competitor.as_ref().map(|c| &c.function)
        );
        if let (Some(p), Some(q)) = (x.quotient, y.quotient) {
            prop_assert!((p - q).abs() <= 1e-12 * p.max(1e-300));
            let theta = case.model.threshold();
            if (p - theta).abs() > 1e-9 {
                prop_assert_eq!(x.reliable, y.reliable);
            }
        }
    }

    #[test]
    fn raising_threshold_never_loses_reliable_positions(seed in any::<u64>(), a in 0.001f64..1.0, b in 0.001f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let case = random_case(&mut rng);
        let (lo, hi) = (a.min(b), a.max(b));
        for variant in [Variant::Positional, Variant::Hmm] {
            let at = |theta: f64| -> Vec<Suggestion> {
                case.model
                    .with_threshold(theta)
                    .unwrap()
                    .decode_functions(case.category, &case.tags, variant)
                    .unwrap()
                    .suggestions
            };
            let (l, h) = (at(lo), at(hi));
            for (x, y) in l.iter().zip(&h) {
                prop_assert!(!x.reliable || y.reliable);
                // the threshold changes flags only
                prop_assert_eq!(&x.best, &y.best);
                prop_assert_eq!(x.quotient, y.quotient);
            }
        }
    }
}

fn inst(q: &str, children: &[(&str, &str)]) -> PhraseInstance {
    PhraseInstance::new(q, children.iter().copied())
}

#[test]
fn two_noun_phrases() {
    let data = [
        inst("NP", &[("ART", "NK"), ("NN", "NK")]),
        inst("NP", &[("ART", "NK"), ("ADJA", "NK"), ("NN", "NK")]),
    ];
    let exact = train(&data, Smoothing { delta: 0.0, ..Smoothing::default() }).unwrap();
    assert_eq!(exact.lexical("NP", "ART", "NK"), Some(1.0));
    let smoothed = train(&data, Smoothing::default()).unwrap();
    assert_eq!(smoothed.functions("NP").unwrap(), ["NK"]);
    assert_eq!(smoothed.lexical("NP", "ART", "NK"), Some(1.0));
    assert!(smoothed.tags("S").is_none());
    assert_eq!(train(&[], Smoothing::default()).unwrap_err(), TaggerError::EmptyTraining);
}

#[test]
fn category_from_children() {
    let c = german_corpus();
    let m = train(&extract_instances(&c).instances, Smoothing::default()).unwrap();
    let d = m.decode_category(&["NP", "VVFIN", "NP"], Variant::Positional).unwrap();
    assert_eq!(d.category, "S");
    let d = m.decode_category(&["ART", "NN"], Variant::Positional).unwrap();
    assert_eq!(d.category, "NP");
    assert_eq!(d.functions(), ["NK", "NK"]);
    let empty = TaggerModel::default();
    assert_eq!(
        empty.decode_category(&["NN"], Variant::Positional).unwrap_err(),
        TaggerError::NoModel
    );
}

#[test]
fn instances_of_control_sentence() {
    let c = argbank::corpus::parse(
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/example3.asc"))
            .unwrap(),
    )
    .unwrap();
    let got = sentence_instances(&c.sentences()[0]);
    assert_eq!(
        got,
        vec![
            inst("VP", &[("PTKZU", "PM"), ("VVINF", "HD")]),
            inst("S", &[("PPER", "SB"), ("VVFIN", "HD"), ("PPER", "OA"), ("VP", "OC")]),
        ]
    );
}

#[test]
fn model_dump_round_trips() {
    let c = german_corpus();
    let m = train(&extract_instances(&c).instances, Smoothing::default())
        .unwrap()
        .with_threshold(0.25)
        .unwrap();
    let text = m.to_json();
    let back = TaggerModel::from_json(&text).unwrap();
    assert_eq!(back.to_json(), text);
    for tags in [vec!["ART", "NN"], vec!["NP", "VVFIN", "NP"], vec!["PPER", "XX"]] {
        for variant in [Variant::Positional, Variant::Hmm] {
            assert_eq!(
                m.decode_category(&tags, variant).unwrap(),
                back.decode_category(&tags, variant).unwrap()
            );
        }
    }
    assert!(TaggerModel::from_json("{}").is_err());
}

fn synthetic_corpus(sentences: usize) -> argbank::Corpus {
    GroundTruth::random(&GeneratorConfig::default()).corpus(sentences, 3)
}

#[test]
fn evaluation_is_deterministic_and_consistent() {
    let c = synthetic_corpus(300);
    let config = EvalConfig {
        repetitions: 4,
        seed: 11,
        ..EvalConfig::default()
    };
    let a = evaluate(&c, &config).unwrap();
    assert_eq!(a, evaluate(&c, &config).unwrap());
    assert_eq!(a.to_table(), evaluate(&c, &config).unwrap().to_table());
    let other = evaluate(&c, &EvalConfig { seed: 12, ..config }).unwrap();
    assert_ne!(a.rows, other.rows);

    assert_eq!(a.rows.len(), 4);
    assert_eq!(a.to_table().lines().count(), 1 + 4 + 1);
    let mut pooled = argbank::tagger::EvalCounts::default();
    for r in &a.rows {
        assert_eq!(r.train_sentences + r.test_sentences, 300);
        assert_eq!(r.test_sentences, 30);
        pooled.positions += r.counts.positions;
        pooled.reliable += r.counts.reliable;
        pooled.reliable_correct += r.counts.reliable_correct;
        pooled.unreliable_correct += r.counts.unreliable_correct;
    }
    assert_eq!(pooled, a.aggregate);
    let confusion: u64 = a.confusion.iter().map(|e| e.count).sum();
    assert_eq!(confusion, a.aggregate.positions);
    for counts in a.rows.iter().map(|r| &r.counts).chain([&a.aggregate]) {
        let p = counts.fraction_reliable();
        let mix = p * counts.acc_reliable() + (1.0 - p) * counts.acc_unreliable();
        assert!((mix - counts.acc_overall()).abs() <= 1e-12);
    }
}

#[test]
fn evaluation_with_calibrated_threshold() {
    let c = synthetic_corpus(300);
    let config = EvalConfig {
        repetitions: 2,
        reliability: ReliabilityPolicy::Calibrate {
            target: 0.8,
            heldout_fraction: 0.2,
        },
        ..EvalConfig::default()
    };
    let r = evaluate(&c, &config).unwrap();
    assert!(r.rows.iter().all(|row| row.threshold > 0.0 && row.threshold <= 1.0));
    assert!(r.summary().contains("overall accuracy"));
}

#[test]
fn evaluation_needs_enough_sentences() {
    let c = synthetic_corpus(9);
    assert!(matches!(
        evaluate(&c, &EvalConfig::default()),
        Err(TaggerError::CorpusTooSmall { .. })
    ));
}
