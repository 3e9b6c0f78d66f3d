use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SamplingError;
use crate::types::{ClaimId, Construction, Verdict};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityScore {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
}

impl ReliabilityScore {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as usize;
        self.accuracy = self.correct as f64 / self.total as f64;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityReport {
    pub overall: ReliabilityScore,
    /// Calibration items with no response; each counts as incorrect.
    pub missing: usize,
    pub by_construction: BTreeMap<Construction, ReliabilityScore>,
}

impl ReliabilityReport {
    pub fn accuracy(&self) -> f64 {
        self.overall.accuracy
    }
}

/// Accuracy of `responses` on hidden calibration items under the binary
/// collapse. The construction type of each item follows from its gold label.
pub fn score_annotator(
    responses: &BTreeMap<ClaimId, Verdict>,
    calibration: &BTreeMap<ClaimId, Verdict>,
) -> Result<ReliabilityReport, SamplingError> {
    if calibration.is_empty() {
        return Err(SamplingError::InvalidInput("calibration set is empty".into()));
    }
    let mut report = ReliabilityReport {
        overall: ReliabilityScore::default(),
        missing: 0,
        by_construction: BTreeMap::new(),
    };
    for (id, gold) in calibration {
        let gold_bin = gold.collapse().ok_or_else(|| {
            SamplingError::InvalidInput(format!("calibration label for {id} is not verifiable"))
        })?;
        let construction = match gold {
            Verdict::Supported => Construction::ValidatedSupported,
            _ => Construction::AdversarialUnsupported,
        };
        let correct = match responses.get(id) {
            Some(r) => r.collapse() == Some(gold_bin),
            None => {
                report.missing += 1;
                false
            }
        };
        report.overall.add(correct);
        report.by_construction.entry(construction).or_default().add(correct);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize, prefix: &str) -> Vec<ClaimId> {
        (0..n).map(|i| ClaimId::new(format!("{prefix}{i}"))).collect()
    }

    #[test]
    fn eighty_seven_of_143() {
        let cal: BTreeMap<_, _> = ids(143, "g").into_iter().map(|id| (id, Verdict::Contradictory)).collect();
        let resp: BTreeMap<_, _> = cal
            .keys()
            .enumerate()
            .map(|(i, id)| (id.clone(), if i < 87 { Verdict::Inconclusive } else { Verdict::Supported }))
            .collect();
        let r = score_annotator(&resp, &cal).unwrap();
        assert_eq!(r.overall.correct, 87);
        assert!((r.accuracy() - 87.0 / 143.0).abs() < 1e-12);
        assert_eq!(format!("{:.3}", r.accuracy()), "0.608");
    }

    #[test]
    fn identity_and_breakdown() {
        let mut cal: BTreeMap<_, _> = ids(2, "s").into_iter().map(|id| (id, Verdict::Supported)).collect();
        cal.extend(ids(8, "u").into_iter().map(|id| (id, Verdict::Inconclusive)));
        let r = score_annotator(&cal, &cal).unwrap();
        assert_eq!(r.accuracy(), 1.0);
        assert_eq!(r.by_construction[&Construction::ValidatedSupported].total, 2);
        assert_eq!(r.by_construction[&Construction::AdversarialUnsupported].total, 8);
    }

    #[test]
    fn missing_and_abstaining_responses_fail() {
        let cal = BTreeMap::from([(ClaimId::new("a"), Verdict::Contradictory), (ClaimId::new("b"), Verdict::Supported)]);
        let resp = BTreeMap::from([(ClaimId::new("a"), Verdict::NoneVerifiable)]);
        let r = score_annotator(&resp, &cal).unwrap();
        assert_eq!((r.overall.correct, r.missing), (0, 1));
    }

    #[test]
    fn empty_calibration_rejected() {
        assert!(score_annotator(&BTreeMap::new(), &BTreeMap::new()).is_err());
    }
}
