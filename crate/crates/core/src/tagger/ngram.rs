//! Interpolated trigram counts over a small symbol inventory.

use std::collections::BTreeMap;

/// Context symbol for positions before the first element.
pub(crate) const BOUNDARY: u32 = u32::MAX;
/// Context symbol for material outside the inventory.
pub(crate) const UNKNOWN: u32 = u32::MAX - 1;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Ngram {
    symbols: usize,
    trigrams: BTreeMap<[u32; 3], u64>,
    trigram_contexts: BTreeMap<[u32; 2], u64>,
    bigrams: BTreeMap<[u32; 2], u64>,
    bigram_contexts: BTreeMap<u32, u64>,
    unigrams: Vec<u64>,
    total: u64,
    /// Weights of the unigram, bigram and trigram estimates.
    lambdas: [f64; 3],
}

impl Ngram {
    /// Builds the tables from trigram counts. Lower orders are marginals,
    /// since every predicted symbol contributes exactly one trigram.
    pub(crate) fn from_trigrams(symbols: usize, trigrams: BTreeMap<[u32; 3], u64>) -> Self {
        let mut trigram_contexts = BTreeMap::new();
        let mut bigrams = BTreeMap::new();
        let mut bigram_contexts = BTreeMap::new();
        let mut unigrams = vec![0; symbols];
        let mut total = 0;
        for (&[a, b, c], &n) in &trigrams {
            *trigram_contexts.entry([a, b]).or_insert(0) += n;
            *bigrams.entry([b, c]).or_insert(0) += n;
            *bigram_contexts.entry(b).or_insert(0) += n;
            unigrams[c as usize] += n;
            total += n;
        }
        Ngram {
            symbols,
            trigrams,
            trigram_contexts,
            bigrams,
            bigram_contexts,
            unigrams,
            total,
            lambdas: [1.0 / 3.0; 3],
        }
    }

    /// Counts the trigrams of each sequence, padded on the left with two
    /// boundary symbols.
    pub(crate) fn count<'a>(
        symbols: usize,
        sequences: impl IntoIterator<Item = &'a [u32]>,
    ) -> BTreeMap<[u32; 3], u64> {
        let mut trigrams = BTreeMap::new();
        for seq in sequences {
            let (mut a, mut b) = (BOUNDARY, BOUNDARY);
            for &c in seq {
                debug_assert!((c as usize) < symbols);
                *trigrams.entry([a, b, c]).or_insert(0) += 1;
                (a, b) = (b, c);
            }
        }
        trigrams
    }

    pub(crate) fn trigrams(&self) -> &BTreeMap<[u32; 3], u64> {
        &self.trigrams
    }

    pub(crate) fn lambdas(&self) -> [f64; 3] {
        self.lambdas
    }

    pub(crate) fn set_lambdas(&mut self, lambdas: [f64; 3]) {
        self.lambdas = lambdas;
    }

    /// Fits the weights by deleted interpolation: each trigram votes with
    /// its count for the order whose estimate, with that trigram removed,
    /// is highest. Tied votes are split evenly. Weights below `floor` are
    /// raised to it so no order is switched off entirely.
    pub(crate) fn fit_lambdas(&mut self, floor: f64) {
        // votes in sixths so two- and three-way splits stay integral
        let mut votes = [0u64; 3];
        let ratio = |n: u64, d: u64| {
            if d > 1 {
                (n - 1) as f64 / (d - 1) as f64
            } else {
                0.0
            }
        };
        for (&[a, b, c], &n) in &self.trigrams {
            let est = [
                ratio(self.unigrams[c as usize], self.total),
                ratio(self.bigrams[&[b, c]], self.bigram_contexts[&b]),
                ratio(n, self.trigram_contexts[&[a, b]]),
            ];
            let best = est.iter().copied().fold(f64::MIN, f64::max);
            let winners: Vec<usize> = (0..3).filter(|&i| est[i] == best).collect();
            let share = 6 / winners.len() as u64;
            for i in winners {
                votes[i] += n * share;
            }
        }
        let sum: u64 = votes.iter().sum();
        let mut lambdas = if sum == 0 {
            [1.0 / 3.0; 3]
        } else {
            votes.map(|v| v as f64 / sum as f64)
        };
        for l in &mut lambdas {
            *l = l.max(floor);
        }
        let norm: f64 = lambdas.iter().sum();
        self.lambdas = lambdas.map(|l| l / norm);
    }

    /// Interpolated probability of `c` after `prev2 prev1`. An unseen
    /// context falls back to the next lower order, which keeps the
    /// distribution normalized.
    pub(crate) fn prob(&self, c: u32, prev1: u32, prev2: u32) -> f64 {
        if c as usize >= self.symbols || self.total == 0 {
            return 0.0;
        }
        let ml1 = self.unigrams[c as usize] as f64 / self.total as f64;
        let ml2 = match self.bigram_contexts.get(&prev1) {
            Some(&d) => self.bigrams.get(&[prev1, c]).copied().unwrap_or(0) as f64 / d as f64,
            None => ml1,
        };
        let ml3 = match self.trigram_contexts.get(&[prev2, prev1]) {
            Some(&d) => {
                self.trigrams.get(&[prev2, prev1, c]).copied().unwrap_or(0) as f64 / d as f64
            }
            None => ml2,
        };
        let [l1, l2, l3] = self.lambdas;
        l1 * ml1 + l2 * ml2 + l3 * ml3
    }

    /// Every context that occurs in training, plus the all-boundary start.
    pub(crate) fn contexts(&self) -> Vec<[u32; 2]> {
        let mut out: Vec<[u32; 2]> = self.trigram_contexts.keys().copied().collect();
        if !self.trigram_contexts.contains_key(&[BOUNDARY, BOUNDARY]) {
            out.push([BOUNDARY, BOUNDARY]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distributions_are_normalized() {
        let seqs: Vec<Vec<u32>> = vec![vec![0, 1, 2], vec![0, 2], vec![1, 1, 1, 0]];
        let mut m = Ngram::from_trigrams(3, Ngram::count(3, seqs.iter().map(Vec::as_slice)));
        m.fit_lambdas(1e-3);
        assert!((m.lambdas().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut contexts = m.contexts();
        contexts.push([UNKNOWN, 0]);
        contexts.push([2, UNKNOWN]);
        for [a, b] in contexts {
            let s: f64 = (0..3).map(|c| m.prob(c, b, a)).sum();
            assert!((s - 1.0).abs() < 1e-12, "context {a} {b}: {s}");
        }
    }
}
