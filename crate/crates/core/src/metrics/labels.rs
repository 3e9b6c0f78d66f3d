use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::types::{BinaryLabel, Verdict};

/// Sentence verdict from atomic verdicts: contradiction dominates, then
/// inconclusive, then supported. Empty or all-`NoneVerifiable` input is
/// `NoneVerifiable`.
pub fn aggregate_sentence(atomic: &[Verdict]) -> Verdict {
    let has = |v: Verdict| atomic.contains(&v);
    if has(Verdict::Contradictory) {
        Verdict::Contradictory
    } else if has(Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else if has(Verdict::Supported) {
        Verdict::Supported
    } else {
        Verdict::NoneVerifiable
    }
}

/// Label vocabulary of an external verifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelScheme {
    /// supported / inconclusive / contradictory / none_verifiable.
    Canonical,
    /// true / not-enough-evidence / false.
    FireOrFactcheckGpt,
    /// supported / not-supported / irrelevant.
    Safe,
}

/// Outcome of mapping an external sentence prediction to the scoring space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappedLabel {
    Binary(BinaryLabel),
    /// Counted wrong whatever the gold label is.
    ForcedIncorrect,
    /// Not scored.
    Excluded,
}

/// Maps one atomic label of `scheme` onto the four-way verdict.
/// SAFE labels have no four-way counterpart and are rejected here.
pub fn map_label(scheme: LabelScheme, label: &str) -> Result<Verdict, MetricsError> {
    let norm = label.trim().to_ascii_lowercase().replace(['_', ' '], "-");
    let invalid = || MetricsError::InvalidLabel {
        scheme,
        label: label.to_owned(),
    };
    match scheme {
        LabelScheme::Canonical => match norm.as_str() {
            "supported" => Ok(Verdict::Supported),
            "inconclusive" => Ok(Verdict::Inconclusive),
            "contradictory" => Ok(Verdict::Contradictory),
            "none-verifiable" | "none" => Ok(Verdict::NoneVerifiable),
            _ => Err(invalid()),
        },
        LabelScheme::FireOrFactcheckGpt => match norm.as_str() {
            "true" => Ok(Verdict::Supported),
            "not-enough-evidence" => Ok(Verdict::Inconclusive),
            "false" => Ok(Verdict::Contradictory),
            _ => Err(invalid()),
        },
        LabelScheme::Safe => Err(invalid()),
    }
}

/// Maps the atomic labels of one sentence to a scoring label.
///
/// Canonical and FIRE/FactCheck-GPT labels are aggregated with
/// [`aggregate_sentence`] and collapsed. SAFE sentences are `Unsupported` if
/// any atomic is not supported, `ForcedIncorrect` if every atomic (vacuously,
/// including none) is irrelevant, and `Supported` otherwise.
pub fn map_and_collapse(scheme: LabelScheme, atomics: &[&str]) -> Result<MappedLabel, MetricsError> {
    if scheme == LabelScheme::Safe {
        let mut any_relevant = false;
        let mut any_unsupported = false;
        for raw in atomics {
            match raw.trim().to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
                "supported" => any_relevant = true,
                "not-supported" | "unsupported" => {
                    any_relevant = true;
                    any_unsupported = true;
                }
                "irrelevant" => {}
                _ => {
                    return Err(MetricsError::InvalidLabel {
                        scheme,
                        label: (*raw).to_owned(),
                    })
                }
            }
        }
        return Ok(if any_unsupported {
            MappedLabel::Binary(BinaryLabel::Unsupported)
        } else if any_relevant {
            MappedLabel::Binary(BinaryLabel::Supported)
        } else {
            MappedLabel::ForcedIncorrect
        });
    }
    let verdicts = atomics
        .iter()
        .map(|l| map_label(scheme, l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(collapse_verdict(aggregate_sentence(&verdicts)))
}

pub fn collapse_verdict(v: Verdict) -> MappedLabel {
    match v.collapse() {
        Some(b) => MappedLabel::Binary(b),
        None => MappedLabel::Excluded,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Verdict::*;

    /// Literal transcription of the sentence aggregation rules, used as an
    /// oracle: (i) any contradictory -> contradictory, (ii) else any
    /// inconclusive -> inconclusive, (iii) otherwise supported; sentences
    /// with no verifiable atomics are none.
    fn oracle(atomic: &[Verdict]) -> Verdict {
        let verifiable: Vec<_> = atomic.iter().filter(|v| **v != NoneVerifiable).collect();
        if verifiable.is_empty() {
            return NoneVerifiable;
        }
        let mut contradictory = 0;
        let mut inconclusive = 0;
        for v in &verifiable {
            match v {
                Contradictory => contradictory += 1,
                Inconclusive => inconclusive += 1,
                _ => {}
            }
        }
        if contradictory > 0 {
            Contradictory
        } else if inconclusive > 0 {
            Inconclusive
        } else {
            Supported
        }
    }

    #[test]
    fn aggregation_examples() {
        assert_eq!(aggregate_sentence(&[Supported, Inconclusive]), Inconclusive);
        assert_eq!(aggregate_sentence(&[Supported, Supported]), Supported);
        assert_eq!(
            aggregate_sentence(&[Contradictory, Supported, Inconclusive]),
            Contradictory
        );
        assert_eq!(aggregate_sentence(&[]), NoneVerifiable);
        assert_eq!(aggregate_sentence(&[NoneVerifiable, Supported]), Supported);
    }

    #[test]
    fn aggregation_is_permutation_invariant_up_to_three() {
        let mut lists: Vec<Vec<Verdict>> = vec![vec![]];
        for len in 1..=3 {
            let mut idx = vec![0usize; len];
            loop {
                lists.push(idx.iter().map(|&i| Verdict::ALL[i]).collect());
                let mut k = 0;
                while k < len {
                    idx[k] += 1;
                    if idx[k] < 4 {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == len {
                    break;
                }
            }
        }
        assert_eq!(lists.len(), 85);
        for l in &lists {
            assert_eq!(aggregate_sentence(l), oracle(l), "{l:?}");
            let mut rev = l.clone();
            rev.reverse();
            assert_eq!(aggregate_sentence(&rev), aggregate_sentence(l));
        }
    }

    #[test]
    fn external_scheme_mapping() {
        assert_eq!(
            map_and_collapse(LabelScheme::FireOrFactcheckGpt, &["not-enough-evidence"]).unwrap(),
            MappedLabel::Binary(BinaryLabel::Unsupported)
        );
        assert_eq!(
            map_and_collapse(LabelScheme::FireOrFactcheckGpt, &["true", "true"]).unwrap(),
            MappedLabel::Binary(BinaryLabel::Supported)
        );
        assert_eq!(
            map_and_collapse(LabelScheme::Safe, &["irrelevant", "irrelevant"]).unwrap(),
            MappedLabel::ForcedIncorrect
        );
        assert_eq!(
            map_and_collapse(LabelScheme::Safe, &["supported", "not supported", "irrelevant"])
                .unwrap(),
            MappedLabel::Binary(BinaryLabel::Unsupported)
        );
        assert_eq!(
            map_and_collapse(LabelScheme::Safe, &["supported", "irrelevant"]).unwrap(),
            MappedLabel::Binary(BinaryLabel::Supported)
        );
        assert_eq!(
            map_and_collapse(LabelScheme::Canonical, &["none_verifiable"]).unwrap(),
            MappedLabel::Excluded
        );
        assert!(matches!(
            map_and_collapse(LabelScheme::FireOrFactcheckGpt, &["supported"]),
            Err(MetricsError::InvalidLabel { .. })
        ));
        assert!(map_and_collapse(LabelScheme::Safe, &["maybe"]).is_err());
    }

    #[test]
    fn collapse_is_idempotent() {
        for v in Verdict::ALL {
            let once = collapse_verdict(v);
            let again = match once {
                MappedLabel::Binary(BinaryLabel::Supported) => {
                    map_and_collapse(LabelScheme::Canonical, &["supported"]).unwrap()
                }
                MappedLabel::Binary(BinaryLabel::Unsupported) => {
                    // any unsupported representative collapses the same way
                    map_and_collapse(LabelScheme::Canonical, &["inconclusive"]).unwrap()
                }
                other => other,
            };
            assert_eq!(once, again);
        }
    }
}
