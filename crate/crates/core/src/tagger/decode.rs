use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::model::{CategoryModel, TaggerModel};
use super::ngram::{BOUNDARY, UNKNOWN};
use super::TaggerError;
use crate::tagset::UNLABELED;

/// Which objective [`TaggerModel::decode_functions`] maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// `∏ P_Q(T_i|T_{i-1},T_{i-2}) · P_Q(G_i|T_i)`. The contextual factor
    /// does not depend on the functions, so each position is decided on
    /// its own.
    #[default]
    #[serde(alias = "paper")]
    Positional,
    /// `∏ P_Q(T_i|G_i) · P_Q(G_i|G_{i-1},G_{i-2})`, decoded jointly.
    Hmm,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Positional => "positional",
            Variant::Hmm => "hmm",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = TaggerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positional" | "paper" => Ok(Variant::Positional),
            "hmm" => Ok(Variant::Hmm),
            _ => Err(TaggerError::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub function: String,
    pub score: f64,
}

/// The tagger's choice for one child.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    /// 1-based index among the phrase's children.
    pub position: usize,
    pub best: Scored,
    /// Strongest alternative with a positive score, if any.
    pub competitor: Option<Scored>,
    /// `competitor.score / best.score`.
    pub quotient: Option<f64>,
    /// The child's tag or the category was not seen in training. Such
    /// positions are never reliable.
    pub novel: bool,
    pub reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    pub category: String,
    /// False if the category has no table; all labels are then `--`.
    pub known_category: bool,
    pub suggestions: Vec<Suggestion>,
}

impl Decoded {
    pub fn functions(&self) -> Vec<&str> {
        self.suggestions
            .iter()
            .map(|s| s.best.function.as_str())
            .collect()
    }
}

/// Sorts by score descending, then label ascending.
fn by_rank(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

fn suggestion(
    m: &CategoryModel,
    position: usize,
    best: (f64, u32),
    competitor: Option<(f64, u32)>,
    novel: bool,
    threshold: f64,
) -> Suggestion {
    let name = |g: u32| m.functions[g as usize].clone();
    let quotient = competitor.map(|(s, _)| s / best.0);
    Suggestion {
        position,
        best: Scored {
            function: name(best.1),
            score: best.0,
        },
        competitor: competitor.map(|(score, g)| Scored {
            function: name(g),
            score,
        }),
        quotient,
        novel,
        reliable: !novel && quotient.is_none_or(|q| q <= threshold),
    }
}

impl TaggerModel {
    /// Assigns functions to the children of a phrase of category
    /// `category` whose children carry `tags`.
    pub fn decode_functions(
        &self,
        category: &str,
        tags: &[&str],
        variant: Variant,
    ) -> Result<Decoded, TaggerError> {
        if tags.is_empty() {
            return Err(TaggerError::EmptyInput);
        }
        let Some(m) = self.categories.get(category) else {
            return Ok(Decoded {
                category: category.to_string(),
                known_category: false,
                suggestions: (1..=tags.len())
                    .map(|position| Suggestion {
                        position,
                        best: Scored {
                            function: UNLABELED.to_string(),
                            score: 0.0,
                        },
                        competitor: None,
                        quotient: None,
                        novel: true,
                        reliable: false,
                    })
                    .collect(),
            });
        };
        let ids = m.tag_ids(tags);
        let suggestions = match variant {
            Variant::Positional => self.decode_positional(m, &ids),
            Variant::Hmm => self.decode_hmm(m, &ids),
        };
        Ok(Decoded {
            category: category.to_string(),
            known_category: true,
            suggestions,
        })
    }

    /// Per-position scores `P(T_i|T_{i-1},T_{i-2}) · P(G|T_i)` for every
    /// function of the category. An unseen tag gets a uniform lexical
    /// distribution and no contextual factor.
    pub(crate) fn position_scores(&self, m: &CategoryModel, ids: &[u32], i: usize) -> Vec<f64> {
        let n = m.functions.len();
        let t = ids[i];
        if t == UNKNOWN {
            return vec![1.0 / n as f64; n];
        }
        let prev1 = if i >= 1 { ids[i - 1] } else { BOUNDARY };
        let prev2 = if i >= 2 { ids[i - 2] } else { BOUNDARY };
        let ctx = m.tag_context.prob(t, prev1, prev2);
        (0..n as u32)
            .map(|g| ctx * m.lexical_prob(t, g, self.smoothing.delta))
            .collect()
    }

    fn decode_positional(&self, m: &CategoryModel, ids: &[u32]) -> Vec<Suggestion> {
        (0..ids.len())
            .map(|i| {
                let mut ranked: Vec<(f64, u32)> = self
                    .position_scores(m, ids, i)
                    .into_iter()
                    .zip(0..)
                    .filter(|&(s, _)| s > 0.0)
                    .collect();
                ranked.sort_by(by_rank);
                suggestion(
                    m,
                    i + 1,
                    ranked[0],
                    ranked.get(1).copied(),
                    ids[i] == UNKNOWN,
                    self.threshold,
                )
            })
            .collect()
    }

    fn decode_hmm(&self, m: &CategoryModel, ids: &[u32]) -> Vec<Suggestion> {
        let n = m.functions.len();
        let all = vec![vec![true; n]; ids.len()];
        let (score, path) = viterbi(self, m, ids, &all).expect("an unconstrained path exists");
        (0..ids.len())
            .map(|i| {
                let mut allowed = all.clone();
                allowed[i][path[i] as usize] = false;
                let competitor = viterbi(self, m, ids, &allowed)
                    .filter(|(s, _)| *s > 0.0)
                    .map(|(s, p)| (s, p[i]));
                suggestion(
                    m,
                    i + 1,
                    (score, path[i]),
                    competitor,
                    ids[i] == UNKNOWN,
                    self.threshold,
                )
            })
            .collect()
    }

    /// Chooses the category for a new phrase, then its functions.
    ///
    /// Categories are ranked by how many of the tags they have seen, then by
    /// `∏ P_Q(T_i|T_{i-1},T_{i-2}) · max_G P_Q(G|T_i)`, then by name.
    pub fn decode_category(&self, tags: &[&str], variant: Variant) -> Result<Decoded, TaggerError> {
        if tags.is_empty() {
            return Err(TaggerError::EmptyInput);
        }
        let ranked = self.category_scores(tags)?;
        self.decode_functions(&ranked[0].category, tags, variant)
    }

    /// All trained categories in decreasing preference for `tags`.
    pub fn category_scores(&self, tags: &[&str]) -> Result<Vec<CategoryScore>, TaggerError> {
        if self.categories.is_empty() {
            return Err(TaggerError::NoModel);
        }
        let mut out: Vec<CategoryScore> = self
            .categories
            .iter()
            .map(|(q, m)| {
                let ids = m.tag_ids(tags);
                let mut score = 1.0;
                for i in 0..ids.len() {
                    let best = self
                        .position_scores(m, &ids, i)
                        .into_iter()
                        .fold(0.0, f64::max);
                    score *= best;
                }
                CategoryScore {
                    category: q.clone(),
                    unseen_tags: ids.iter().filter(|&&t| t == UNKNOWN).count(),
                    score,
                }
            })
            .collect();
        out.sort_by(|a, b| {
            a.unseen_tags
                .cmp(&b.unseen_tags)
                .then(b.score.total_cmp(&a.score))
                .then(a.category.cmp(&b.category))
        });
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryScore {
    pub category: String,
    pub unseen_tags: usize,
    pub score: f64,
}

/// Emission factor of the joint objective; an unseen tag contributes 1.
pub(crate) fn emission(model: &TaggerModel, m: &CategoryModel, t: u32, g: u32) -> f64 {
    if t == UNKNOWN {
        1.0
    } else {
        m.emission_prob(t, g, model.smoothing.delta)
    }
}

/// Best path over function sequences restricted to `allowed[i][g]`. Paths
/// with equal score are ordered lexicographically. Returns `None` if some
/// position allows nothing.
fn viterbi(
    model: &TaggerModel,
    m: &CategoryModel,
    ids: &[u32],
    allowed: &[Vec<bool>],
) -> Option<(f64, Vec<u32>)> {
    let n = m.functions.len();
    // state (previous, current) with previous == n for the boundary
    let state = |prev: usize, cur: usize| prev * n + cur;
    let ctx = |g: usize| if g == n { BOUNDARY } else { g as u32 };
    let mut cells: Vec<Option<(f64, Vec<u32>)>> = vec![None; (n + 1) * n];

    for g in (0..n).filter(|&g| allowed[0][g]) {
        let s = m.function_context.prob(g as u32, BOUNDARY, BOUNDARY)
            * emission(model, m, ids[0], g as u32);
        cells[state(n, g)] = Some((s, vec![g as u32]));
    }
    for i in 1..ids.len() {
        let mut next: Vec<Option<(f64, Vec<u32>)>> = vec![None; (n + 1) * n];
        for prev in 0..=n {
            for cur in 0..n {
                let Some((s, path)) = &cells[state(prev, cur)] else {
                    continue;
                };
                for g in (0..n).filter(|&g| allowed[i][g]) {
                    let step = m.function_context.prob(g as u32, cur as u32, ctx(prev))
                        * emission(model, m, ids[i], g as u32);
                    let cand = s * step;
                    let slot = &mut next[state(cur, g)];
                    let better = match slot {
                        None => true,
                        Some((best, best_path)) => {
                            cand > *best
                                || (cand == *best && path[..] < best_path[..best_path.len() - 1])
                        }
                    };
                    if better {
                        let mut p = path.clone();
                        p.push(g as u32);
                        *slot = Some((cand, p));
                    }
                }
            }
        }
        cells = next;
    }
    cells
        .into_iter()
        .flatten()
        .min_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)))
}
