use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SamplingError;
use crate::store::ClaimRecord;
use crate::types::{round_half_up, ClaimId, Construction};

pub const DEFAULT_MICROGOLD_SHARE: f64 = 0.25;
pub const DEFAULT_SUPPORTED_TO_UNSUPPORTED: (u32, u32) = (1, 4);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub position: usize,
    pub claim_id: ClaimId,
    pub is_microgold: bool,
}

/// Internal injection plan. Never hand this to an annotator; use
/// [`InjectionPlan::annotator_view`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectionPlan {
    pub batch_size: usize,
    pub microgold_share: f64,
    pub supported_to_unsupported: (u32, u32),
    pub assignments: Vec<Assignment>,
}

/// Annotator-facing export: positions and claim ids only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorBatch {
    pub items: Vec<AnnotatorItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatorItem {
    pub position: usize,
    pub claim_id: ClaimId,
}

impl InjectionPlan {
    pub fn microgold_count(&self) -> usize {
        self.assignments.iter().filter(|a| a.is_microgold).count()
    }

    pub fn annotator_view(&self) -> AnnotatorBatch {
        AnnotatorBatch {
            items: self
                .assignments
                .iter()
                .map(|a| AnnotatorItem {
                    position: a.position,
                    claim_id: a.claim_id.clone(),
                })
                .collect(),
        }
    }
}

/// Number of micro-golds to add to `real` claims so that they make up `share`
/// of the final batch: the smallest `m` with `m = round_half_up((real + m) · share)`.
pub fn microgold_count_for(real: usize, share: f64) -> usize {
    (0..)
        .find(|&m| round_half_up((real + m) as f64 * share) == m)
        .expect("share < 1 guarantees a fixed point")
}

/// Splits `m` by `ratio` with floors and a largest-remainder top-up; a tie
/// goes to the unsupported side.
pub fn split_by_ratio(m: usize, ratio: (u32, u32)) -> (usize, usize) {
    let total = (ratio.0 + ratio.1) as usize;
    let s = m * ratio.0 as usize;
    let (mut sup, sup_rem) = (s / total, s % total);
    let u = m * ratio.1 as usize;
    let (mut uns, uns_rem) = (u / total, u % total);
    if sup + uns < m {
        if sup_rem > uns_rem {
            sup += 1;
        } else {
            uns += 1;
        }
    }
    (sup, uns)
}

/// Mixes micro-golds from `pool` into `batch` at seeded positions.
///
/// Real claims keep their relative order. Which micro-golds are used, and
/// where they go, depends only on the inputs and `seed`.
pub fn plan_microgold_injection(
    batch: &[ClaimId],
    pool: &[ClaimRecord],
    share: f64,
    ratio: (u32, u32),
    seed: u64,
) -> Result<InjectionPlan, SamplingError> {
    if !(0.0..1.0).contains(&share) {
        return Err(SamplingError::InvalidPlan(format!(
            "micro-gold share must be in [0, 1), got {share}"
        )));
    }
    if ratio.0 + ratio.1 == 0 {
        return Err(SamplingError::InvalidPlan("ratio must be non-zero".into()));
    }
    let mut supported = Vec::new();
    let mut unsupported = Vec::new();
    for c in pool {
        let mg = c.microgold.as_ref().ok_or_else(|| {
            SamplingError::InvalidInput(format!("pool claim {} carries no micro-gold data", c.claim_id))
        })?;
        if batch.contains(&c.claim_id) {
            continue;
        }
        match mg.construction {
            Construction::ValidatedSupported => supported.push(&c.claim_id),
            Construction::AdversarialUnsupported => unsupported.push(&c.claim_id),
        }
    }

    let m = microgold_count_for(batch.len(), share);
    let (need_sup, need_uns) = split_by_ratio(m, ratio);
    if supported.len() < need_sup || unsupported.len() < need_uns {
        return Err(SamplingError::InsufficientPool {
            supported: need_sup.saturating_sub(supported.len()),
            unsupported: need_uns.saturating_sub(unsupported.len()),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    supported.sort();
    unsupported.sort();
    supported.shuffle(&mut rng);
    unsupported.shuffle(&mut rng);
    let mut chosen: Vec<&ClaimId> = supported[..need_sup]
        .iter()
        .chain(&unsupported[..need_uns])
        .copied()
        .collect();
    chosen.shuffle(&mut rng);

    let total = batch.len() + m;
    let mut gold_at = vec![false; total];
    for p in index::sample(&mut rng, total, m) {
        gold_at[p] = true;
    }
    let mut real = batch.iter();
    let mut gold = chosen.into_iter();
    let assignments = gold_at
        .into_iter()
        .enumerate()
        .map(|(position, is_microgold)| {
            let next = if is_microgold { gold.next() } else { real.next() };
            Assignment {
                position,
                claim_id: next.expect("counts match").clone(),
                is_microgold,
            }
        })
        .collect();
    Ok(InjectionPlan {
        batch_size: total,
        microgold_share: share,
        supported_to_unsupported: ratio,
        assignments,
    })
}
