use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::MetricsError;
use crate::types::{BinaryLabel, ClaimId};

/// A prediction in the binary scoring space. On the wire it is one of
/// `supported`, `unsupported` or `forced_incorrect`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Prediction {
    Label(BinaryLabel),
    ForcedIncorrect,
}

impl Serialize for Prediction {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Prediction::Label(l) => l.serialize(s),
            Prediction::ForcedIncorrect => s.serialize_str("forced_incorrect"),
        }
    }
}

impl<'de> Deserialize<'de> for Prediction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match String::deserialize(d)?.as_str() {
            "supported" => Ok(Prediction::Label(BinaryLabel::Supported)),
            "unsupported" => Ok(Prediction::Label(BinaryLabel::Unsupported)),
            "forced_incorrect" => Ok(Prediction::ForcedIncorrect),
            other => Err(serde::de::Error::custom(format!("unknown prediction `{other}`"))),
        }
    }
}

impl From<BinaryLabel> for Prediction {
    fn from(l: BinaryLabel) -> Self {
        Prediction::Label(l)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Precision, recall and F1 are for the supported class.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub predicted_supported: usize,
    pub gold_supported: usize,
}

/// Accuracy plus supported-class precision/recall/F1 over the claims present
/// in both maps.
pub fn compute_metrics(
    predictions: &BTreeMap<ClaimId, Prediction>,
    gold: &BTreeMap<ClaimId, BinaryLabel>,
) -> Result<Metrics, MetricsError> {
    let mut n = 0;
    let mut correct = 0;
    let mut tp = 0;
    let mut predicted_supported = 0;
    let mut gold_supported = 0;
    for (id, g) in gold {
        let Some(p) = predictions.get(id) else {
            continue;
        };
        n += 1;
        let gold_pos = *g == BinaryLabel::Supported;
        let pred_pos = *p == Prediction::Label(BinaryLabel::Supported);
        gold_supported += gold_pos as usize;
        predicted_supported += pred_pos as usize;
        if *p == Prediction::Label(*g) {
            correct += 1;
            tp += (gold_pos && pred_pos) as usize;
        }
    }
    if n == 0 {
        return Err(MetricsError::InvalidInput(
            "predictions and gold labels share no claims".into(),
        ));
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let precision = ratio(tp, predicted_supported);
    let recall = ratio(tp, gold_supported);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Metrics {
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        precision,
        recall,
        f1,
        true_positives: tp,
        predicted_supported,
        gold_supported,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use BinaryLabel::*;

    #[test]
    fn prediction_wire_form() {
        let p = vec![Prediction::Label(Supported), Prediction::Label(Unsupported), Prediction::ForcedIncorrect];
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"["supported","unsupported","forced_incorrect"]"#);
        assert_eq!(serde_json::from_str::<Vec<Prediction>>(&json).unwrap(), p);
        assert!(serde_json::from_str::<Prediction>(r#""abstain""#).is_err());
    }

    fn maps(preds: &[Prediction], gold: &[BinaryLabel]) -> (BTreeMap<ClaimId, Prediction>, BTreeMap<ClaimId, BinaryLabel>) {
        let p = preds
            .iter()
            .enumerate()
            .map(|(i, &l)| (ClaimId::new(format!("c{i}")), l))
            .collect();
        let g = gold
            .iter()
            .enumerate()
            .map(|(i, &l)| (ClaimId::new(format!("c{i}")), l))
            .collect();
        (p, g)
    }

    #[test]
    fn hand_enumerated_confusion_matrix() {
        // preds S,S,U vs gold S,U,U: TP=1, FP=1, TN=1, FN=0
        let (p, g) = maps(
            &[Supported.into(), Supported.into(), Unsupported.into()],
            &[Supported, Unsupported, Unsupported],
        );
        let m = compute_metrics(&p, &g).unwrap();
        assert!((m.accuracy - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.precision - 0.5).abs() < 1e-12);
        assert!((m.recall - 1.0).abs() < 1e-12);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn identity_scores_one() {
        let (p, g) = maps(
            &[Supported.into(), Unsupported.into()],
            &[Supported, Unsupported],
        );
        let m = compute_metrics(&p, &g).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn all_forced_incorrect() {
        let (p, g) = maps(
            &[Prediction::ForcedIncorrect, Prediction::ForcedIncorrect],
            &[Supported, Unsupported],
        );
        let m = compute_metrics(&p, &g).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn empty_intersection_is_an_error() {
        let (p, _) = maps(&[Supported.into()], &[]);
        let g = BTreeMap::from([(ClaimId::new("other"), Supported)]);
        assert!(matches!(compute_metrics(&p, &g), Err(MetricsError::InvalidInput(_))));
    }

    fn arb_pred() -> impl Strategy<Value = Prediction> {
        prop_oneof![
            Just(Prediction::Label(Supported)),
            Just(Prediction::Label(Unsupported)),
            Just(Prediction::ForcedIncorrect),
        ]
    }

    proptest! {
        #[test]
        fn metric_identities(pairs in prop::collection::vec((arb_pred(), prop::bool::ANY), 1..60)) {
            let preds: Vec<_> = pairs.iter().map(|p| p.0).collect();
            let gold: Vec<_> = pairs.iter().map(|p| if p.1 { Supported } else { Unsupported }).collect();
            let (p, g) = maps(&preds, &gold);
            let m = compute_metrics(&p, &g).unwrap();
            // brute-force confusion matrix
            let tp = pairs.iter().filter(|(p, g)| *p == Prediction::Label(Supported) && *g).count();
            let pp = pairs.iter().filter(|(p, _)| *p == Prediction::Label(Supported)).count();
            let gp = pairs.iter().filter(|(_, g)| *g).count();
            prop_assert_eq!(m.true_positives, tp);
            prop_assert!((m.precision * pp as f64 - tp as f64).abs() < 1e-9);
            prop_assert!((m.recall * gp as f64 - tp as f64).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&m.f1));
        }
    }
}
