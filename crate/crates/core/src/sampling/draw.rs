use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quotas::allocate_quotas;
use super::{SamplingError, SamplingPlan};
use crate::store::ClaimRecord;
use crate::types::{ClaimId, Importance, RiskTag};

fn weight(tag: RiskTag, rho: f64) -> f64 {
    match tag {
        RiskTag::SupportedByEvaluator => 1.0,
        RiskTag::FlaggedByEvaluator => rho,
    }
}

/// Draws `quotas[level]` claims from each bucket without replacement.
///
/// Each draw picks item `j` with probability `w_j / Σ w_k` over the items
/// still in the bucket. Buckets are visited from the highest level down and
/// each uses its own ChaCha stream, so adding a bucket does not perturb the
/// others. Output is in draw order.
pub fn sample_claims(
    buckets: &BTreeMap<Importance, Vec<(ClaimId, RiskTag)>>,
    quotas: &BTreeMap<Importance, usize>,
    rho: f64,
    seed: u64,
) -> Result<Vec<ClaimId>, SamplingError> {
    if !(rho > 1.0) || !rho.is_finite() {
        return Err(SamplingError::InvalidPlan(format!(
            "risk multiplier must exceed 1, got {rho}"
        )));
    }
    let mut out = Vec::with_capacity(quotas.values().sum());
    for (&level, &quota) in quotas.iter().rev() {
        if quota == 0 {
            continue;
        }
        let bucket = buckets.get(&level).map(Vec::as_slice).unwrap_or(&[]);
        if quota > bucket.len() {
            return Err(SamplingError::ImpossibleQuota {
                level: level.level(),
                quota,
                available: bucket.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(level.level() as u64);
        let mut remaining: Vec<(&ClaimId, f64)> =
            bucket.iter().map(|(id, tag)| (id, weight(*tag, rho))).collect();
        for _ in 0..quota {
            let total: f64 = remaining.iter().map(|(_, w)| w).sum();
            let mut u = rng.gen::<f64>() * total;
            let mut pick = remaining.len() - 1;
            for (i, (_, w)) in remaining.iter().enumerate() {
                if u < *w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            out.push(remaining.remove(pick).0.clone());
        }
    }
    Ok(out)
}

/// Quotas and draws for one annotation batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledBatch {
    pub quotas: BTreeMap<Importance, usize>,
    pub claim_ids: Vec<ClaimId>,
}

/// Buckets real (non-micro-gold) claims by importance, allocates quotas and
/// draws. Bucket order follows claim id so the result depends only on the
/// claim set and the seed.
pub fn sample_batch<'a>(
    plan: &SamplingPlan,
    claims: impl IntoIterator<Item = &'a ClaimRecord>,
) -> Result<SampledBatch, SamplingError> {
    plan.validate()?;
    let mut buckets: BTreeMap<Importance, Vec<(ClaimId, RiskTag)>> = BTreeMap::new();
    for c in claims.into_iter().filter(|c| !c.is_microgold()) {
        buckets
            .entry(c.importance)
            .or_default()
            .push((c.claim_id.clone(), c.risk_tag));
    }
    for b in buckets.values_mut() {
        b.sort();
        b.dedup_by(|a, b| a.0 == b.0);
    }
    let available = buckets.iter().map(|(l, b)| (*l, b.len())).collect();
    let quotas = allocate_quotas(plan.n, &plan.proportions, &available);
    let claim_ids = sample_claims(&buckets, &quotas, plan.rho, plan.seed)?;
    Ok(SampledBatch { quotas, claim_ids })
}
