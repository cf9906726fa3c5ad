use serde::{Deserialize, Serialize};

use super::{PhraseInstance, Suggestion, TaggerError, TaggerModel, Variant};

/// How a decoded position takes part in threshold selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeldoutPosition {
    /// Has a competitor with this score quotient.
    Contested(f64),
    /// Has no competitor and is reliable at any threshold.
    Uncontested,
    /// Unseen tag or category; never reliable.
    Novel,
}

impl HeldoutPosition {
    pub fn of(s: &Suggestion) -> HeldoutPosition {
        match (s.novel, s.quotient) {
            (true, _) => HeldoutPosition::Novel,
            (false, Some(q)) => HeldoutPosition::Contested(q),
            (false, None) => HeldoutPosition::Uncontested,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    /// Fraction of held-out positions reliable at `threshold`.
    pub reliable_fraction: f64,
    pub positions: usize,
    pub warning: Option<String>,
}

/// Picks the threshold whose reliable fraction is the largest achievable
/// value not above `target`. Positions with a quotient equal to the
/// threshold count as reliable.
pub fn choose_threshold(positions: &[HeldoutPosition], target: f64) -> Result<Calibration, TaggerError> {
    if !(target > 0.0 && target < 1.0) {
        return Err(TaggerError::InvalidTarget(target));
    }
    if positions.is_empty() {
        return Err(TaggerError::EmptyHeldout);
    }
    let total = positions.len();
    let uncontested = positions
        .iter()
        .filter(|p| matches!(p, HeldoutPosition::Uncontested))
        .count();
    let mut quotients: Vec<f64> = positions
        .iter()
        .filter_map(|p| match p {
            HeldoutPosition::Contested(q) => Some(*q),
            _ => None,
        })
        .collect();
    quotients.sort_by(f64::total_cmp);
    let fraction = |reliable: usize| reliable as f64 / total as f64;

    if quotients.is_empty() {
        return Ok(Calibration {
            threshold: 1.0,
            reliable_fraction: fraction(uncontested),
            positions: total,
            warning: Some("no held-out position has a competitor".into()),
        });
    }
    let mut chosen = None;
    let mut i = 0;
    while i < quotients.len() {
        let q = quotients[i];
        while i < quotients.len() && quotients[i] == q {
            i += 1;
        }
        let f = fraction(uncontested + i);
        if f <= target {
            chosen = Some((q, f));
        } else {
            break;
        }
    }
    Ok(match chosen {
        Some((threshold, reliable_fraction)) => Calibration {
            threshold: threshold.min(1.0),
            reliable_fraction,
            positions: total,
            warning: None,
        },
        None => Calibration {
            threshold: quotients[0] / 2.0,
            reliable_fraction: fraction(uncontested),
            positions: total,
            warning: Some(format!(
                "uncontested positions alone exceed the target; reliable fraction is {:.4}",
                fraction(uncontested)
            )),
        },
    })
}

/// Decodes every held-out phrase under its own category and returns a copy
/// of `model` with the chosen threshold.
pub fn calibrate_threshold(
    model: &TaggerModel,
    heldout: &[PhraseInstance],
    target: f64,
    variant: Variant,
) -> Result<(TaggerModel, Calibration), TaggerError> {
    let mut positions = Vec::new();
    for inst in heldout {
        let d = model.decode_functions(&inst.category, &inst.tags(), variant)?;
        positions.extend(d.suggestions.iter().map(HeldoutPosition::of));
    }
    let c = choose_threshold(&positions, target)?;
    Ok((model.with_threshold(c.threshold)?, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contested(qs: &[f64]) -> Vec<HeldoutPosition> {
        qs.iter().map(|&q| HeldoutPosition::Contested(q)).collect()
    }

    #[test]
    fn step_function() {
        let ps = contested(&[0.43, 0.01, 0.05]);
        let c = choose_threshold(&ps, 0.67).unwrap();
        assert_eq!(c.threshold, 0.05);
        assert!((c.reliable_fraction - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(choose_threshold(&ps, 0.99).unwrap().threshold, 0.05);
        let c = choose_threshold(&ps, 0.2).unwrap();
        assert_eq!(c.threshold, 0.005);
        assert!(c.warning.is_some());
    }

    #[test]
    fn ties_are_included() {
        let ps = contested(&[0.2, 0.2, 0.5, 0.1]);
        let c = choose_threshold(&ps, 0.8).unwrap();
        assert_eq!(c.threshold, 0.2);
        assert_eq!(c.reliable_fraction, 0.75);
    }

    #[test]
    fn degenerate_heldout() {
        let c = choose_threshold(&[HeldoutPosition::Uncontested, HeldoutPosition::Novel], 0.9).unwrap();
        assert_eq!(c.threshold, 1.0);
        assert!(c.warning.is_some());
        assert_eq!(
            choose_threshold(&[], 0.9).unwrap_err(),
            TaggerError::EmptyHeldout
        );
        assert!(choose_threshold(&[HeldoutPosition::Novel], 1.0).is_err());
    }
}
