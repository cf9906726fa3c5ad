//! Exhaustive-search oracle for the function decoders. Shared by the
//! tagger tests and the acceptance run.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use argbank::random::random_instances;
use argbank::tagger::{train, Smoothing, TaggerModel, Variant};

pub const CATEGORIES: [&str; 2] = ["NP", "S"];
pub const TAGS: [&str; 6] = ["ART", "NN", "ADJA", "VVFIN", "NP", "PP"];
pub const FUNCTIONS: [&str; 8] = ["SB", "OA", "HD", "MO", "NK", "DA", "OC", "PD"];
pub const UNSEEN_TAG: &str = "XY";

/// A random model and a phrase to decode with it.
pub struct Case {
    pub model: TaggerModel,
    pub category: &'static str,
    pub tags: Vec<&'static str>,
}

pub fn random_case(rng: &mut ChaCha8Rng) -> Case {
    let nf = rng.random_range(1..=FUNCTIONS.len());
    let count = rng.random_range(1..40);
    let data = random_instances(rng, &CATEGORIES, &TAGS[..5], &FUNCTIONS[..nf], count, 6);
    let delta = *[0.5, 0.5, 0.1, 0.0].choose(rng).unwrap();
    let smoothing = Smoothing {
        delta,
        ..Smoothing::default()
    };
    let model = train(&data, smoothing).unwrap();
    let category = data[0].category.as_str();
    let category = CATEGORIES.iter().copied().find(|c| *c == category).unwrap();
    let k = rng.random_range(1..=6);
    let tags = (0..k)
        .map(|_| {
            if rng.random_bool(0.1) {
                UNSEEN_TAG
            } else {
                *TAGS.choose(rng).unwrap()
            }
        })
        .collect();
    Case {
        model,
        category,
        tags,
    }
}

/// Best sequence per position and label, found by trying every sequence in
/// lexicographic order. `factor(i, prev2, prev1, g)` is the factor position
/// `i` contributes; scores accumulate left to right.
fn enumerate(
    k: usize,
    n: usize,
    factor: &dyn Fn(usize, Option<usize>, Option<usize>, usize) -> f64,
) -> Vec<Vec<Option<(f64, Vec<usize>)>>> {
    // factor table indexed by (i, prev2, prev1, g), with n for "none"
    let idx = |i: usize, p2: usize, p1: usize, g: usize| ((i * (n + 1) + p2) * (n + 1) + p1) * n + g;
    let some = |p: usize| (p < n).then_some(p);
    let mut table = vec![0.0; k * (n + 1) * (n + 1) * n];
    for i in 0..k {
        for p2 in 0..=n {
            for p1 in 0..=n {
                for g in 0..n {
                    table[idx(i, p2, p1, g)] = factor(i, some(p2), some(p1), g);
                }
            }
        }
    }
    let mut best_at: Vec<Vec<Option<(f64, Vec<usize>)>>> = vec![vec![None; n]; k];
    let mut seq = vec![0usize; k];
    loop {
        let mut s = 1.0;
        for i in 0..k {
            let p1 = if i >= 1 { seq[i - 1] } else { n };
            let p2 = if i >= 2 { seq[i - 2] } else { n };
            s *= table[idx(i, p2, p1, seq[i])];
        }
        for i in 0..k {
            let slot = &mut best_at[i][seq[i]];
            if slot.as_ref().is_none_or(|(b, _)| s > *b) {
                *slot = Some((s, seq.clone()));
            }
        }
        // next sequence in lexicographic order
        let mut i = k;
        loop {
            if i == 0 {
                return best_at;
            }
            i -= 1;
            seq[i] += 1;
            if seq[i] < n {
                break;
            }
            seq[i] = 0;
        }
    }
}

fn better(a: &(f64, Vec<usize>), b: &(f64, Vec<usize>)) -> bool {
    a.0 > b.0 || (a.0 == b.0 && a.1 < b.1)
}

/// Expected (best label, competitor label, competitor/best) per position.
type Expected = Vec<(usize, Option<usize>, Option<f64>)>;

fn oracle(k: usize, n: usize, best_at: &[Vec<Option<(f64, Vec<usize>)>>], positive_only: bool) -> Expected {
    let overall = best_at[0]
        .iter()
        .flatten()
        .fold(None::<&(f64, Vec<usize>)>, |acc, c| match acc {
            Some(a) if !better(c, a) => Some(a),
            _ => Some(c),
        })
        .unwrap()
        .clone();
    (0..k)
        .map(|i| {
            let chosen = overall.1[i];
            let mut comp: Option<&(f64, Vec<usize>)> = None;
            for g in (0..n).filter(|&g| g != chosen) {
                if let Some(c) = &best_at[i][g] {
                    if positive_only && c.0 <= 0.0 {
                        continue;
                    }
                    if comp.is_none_or(|a| better(c, a)) {
                        comp = Some(c);
                    }
                }
            }
            (chosen, comp.map(|c| c.1[i]), comp.map(|c| c.0 / overall.0))
        })
        .collect()
}

fn positional_oracle(case: &Case) -> Expected {
    let m = &case.model;
    let q = case.category;
    let fs = m.functions(q).unwrap();
    let n = fs.len();
    let tags = &case.tags;
    // per-position scores from the public probability tables
    let scores: Vec<Vec<f64>> = (0..tags.len())
        .map(|i| {
            let prev1 = i.checked_sub(1).map(|j| tags[j]);
            let prev2 = i.checked_sub(2).map(|j| tags[j]);
            match m.contextual(q, tags[i], prev1, prev2) {
                None => vec![1.0 / n as f64; n],
                Some(ctx) => fs
                    .iter()
                    .map(|g| ctx * m.lexical(q, tags[i], g).unwrap())
                    .collect(),
            }
        })
        .collect();
    // per position: best and runner-up among positive scores
    (0..tags.len())
        .map(|i| {
            let mut ranked: Vec<(f64, usize)> = scores[i]
                .iter()
                .copied()
                .enumerate()
                .filter(|&(_, s)| s > 0.0)
                .map(|(g, s)| (s, g))
                .collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let (bs, bg) = ranked[0];
            (bg, ranked.get(1).map(|r| r.1), ranked.get(1).map(|r| r.0 / bs))
        })
        .collect()
}

/// The per-position rule agrees with maximizing the full product over all
/// sequences.
fn positional_product_oracle(case: &Case) -> Expected {
    let m = &case.model;
    let q = case.category;
    let fs = m.functions(q).unwrap();
    let tags = &case.tags;
    let n = fs.len();
    let factor = |i: usize, _: Option<usize>, _: Option<usize>, g: usize| {
        let prev1 = i.checked_sub(1).map(|j| tags[j]);
        let prev2 = i.checked_sub(2).map(|j| tags[j]);
        match m.contextual(q, tags[i], prev1, prev2) {
            None => 1.0 / n as f64,
            Some(ctx) => ctx * m.lexical(q, tags[i], &fs[g]).unwrap(),
        }
    };
    let best_at = enumerate(tags.len(), n, &factor);
    oracle(tags.len(), n, &best_at, true)
}

fn hmm_oracle(case: &Case) -> Expected {
    let m = &case.model;
    let q = case.category;
    let fs = m.functions(q).unwrap();
    let tags = &case.tags;
    let n = fs.len();
    let name = |g: Option<usize>| g.map(|g| fs[g].as_str());
    let factor = |i: usize, p2: Option<usize>, p1: Option<usize>, g: usize| {
        let trans = m.transition(q, &fs[g], name(p1), name(p2)).unwrap();
        let emit = m.emission(q, tags[i], &fs[g]).unwrap_or(1.0);
        trans * emit
    };
    let best_at = enumerate(tags.len(), n, &factor);
    oracle(tags.len(), n, &best_at, true)
}

fn check(case: &Case, variant: Variant, expected: &Expected, exact_quotient: bool) -> Result<(), String> {
    let fs = case.model.functions(case.category).unwrap();
    let d = case
        .model
        .decode_functions(case.category, &case.tags, variant)
        .map_err(|e| e.to_string())?;
    for (s, (best, comp, quotient)) in d.suggestions.iter().zip(expected) {
        let ctx = format!("{variant} {:?} {:?} at {}", case.category, case.tags, s.position);
        if s.best.function != fs[*best] {
            return Err(format!("{ctx}: best {} vs {}", s.best.function, fs[*best]));
        }
        let got = s.competitor.as_ref().map(|c| c.function.as_str());
        if got != comp.map(|g| fs[g].as_str()) {
            return Err(format!("{ctx}: competitor {got:?} vs {comp:?}"));
        }
        match (s.quotient, *quotient) {
            (Some(a), Some(b)) if exact_quotient && a != b => {
                return Err(format!("{ctx}: quotient {a} vs {b}"))
            }
            (Some(a), Some(b)) if (a - b).abs() > 1e-9 * b.max(1e-300) => {
                return Err(format!("{ctx}: quotient {a} vs {b}"))
            }
            (a, b) if a.is_some() != b.is_some() => {
                return Err(format!("{ctx}: quotient {a:?} vs {b:?}"))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Runs the decode/enumeration comparison on `cases` seeded cases and
/// returns the first disagreement.
pub fn brute_force_agreement(seed: u64, cases: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..cases {
        let case = random_case(&mut rng);
        check(&case, Variant::Positional, &positional_oracle(&case), true)?;
        check(&case, Variant::Positional, &positional_product_oracle(&case), false)?;
        check(&case, Variant::Hmm, &hmm_oracle(&case), true)?;
    }
    Ok(())
}
