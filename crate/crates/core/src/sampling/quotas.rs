use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SamplingError;
use crate::types::Importance;

/// Batch-level sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Target batch size.
    pub n: usize,
    /// Fraction of the batch per importance level.
    pub proportions: BTreeMap<Importance, f64>,
    /// Weight multiplier (> 1) for claims flagged by the pre-screening evaluator.
    pub rho: f64,
    pub seed: u64,
}

impl SamplingPlan {
    pub fn validate(&self) -> Result<(), SamplingError> {
        if self.n == 0 {
            return Err(SamplingError::InvalidPlan("batch size must be at least 1".into()));
        }
        if !(self.rho > 1.0) || !self.rho.is_finite() {
            return Err(SamplingError::InvalidPlan(format!(
                "risk multiplier must exceed 1, got {}",
                self.rho
            )));
        }
        validate_proportions(&self.proportions)
    }
}

pub(crate) fn validate_proportions(p: &BTreeMap<Importance, f64>) -> Result<(), SamplingError> {
    if p.values().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(SamplingError::InvalidPlan("proportions must be non-negative".into()));
    }
    let sum: f64 = p.values().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(SamplingError::InvalidPlan(format!(
            "proportions sum to {sum}, expected 1"
        )));
    }
    Ok(())
}

/// Distributes `amount` units proportionally to `weights` with floors and a
/// largest-remainder top-up; ties go to the higher importance level.
/// Callers guarantee `amount <= sum(weights)` when weights are capacities.
fn largest_remainder(amount: usize, weights: &[(Importance, f64)]) -> BTreeMap<Importance, usize> {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let mut out = BTreeMap::new();
    if total <= 0.0 {
        return out;
    }
    let mut remainders = Vec::with_capacity(weights.len());
    let mut assigned = 0usize;
    for &(level, w) in weights {
        let exact = amount as f64 * w / total;
        // tolerate representation error such as 40 * 0.35 = 13.999...
        let floor = (exact + 1e-9).floor();
        let q = floor as usize;
        assigned += q;
        out.insert(level, q);
        remainders.push((level, (exact - floor).max(0.0)));
    }
    remainders.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    for (level, _) in remainders.into_iter().take(amount.saturating_sub(assigned)) {
        *out.get_mut(&level).expect("inserted above") += 1;
    }
    out
}

/// Per-level quotas summing to `min(n, Σ available)`.
///
/// Floors of `n · p_i` are topped up by largest remainder, capped at
/// availability, and any deficit is redistributed in proportion to remaining
/// surplus capacity. Levels with a positive proportion absorb the deficit
/// first; zero-proportion levels are only used if those run out.
pub fn allocate_quotas(
    n: usize,
    proportions: &BTreeMap<Importance, f64>,
    available: &BTreeMap<Importance, usize>,
) -> BTreeMap<Importance, usize> {
    let mut levels: Vec<Importance> = proportions.keys().chain(available.keys()).copied().collect();
    levels.sort();
    levels.dedup();
    let prop = |l: &Importance| proportions.get(l).copied().unwrap_or(0.0);
    let avail = |l: &Importance| available.get(l).copied().unwrap_or(0);

    let weights: Vec<_> = levels.iter().map(|l| (*l, prop(l))).collect();
    let mut quotas = largest_remainder(n, &weights);
    for l in &levels {
        quotas.entry(*l).or_insert(0);
    }

    let mut deficit = 0usize;
    for l in &levels {
        let q = quotas.get_mut(l).expect("every level present");
        let cap = avail(l);
        if *q > cap {
            deficit += *q - cap;
            *q = cap;
        }
    }

    for tier_positive in [true, false] {
        while deficit > 0 {
            let surplus: Vec<(Importance, f64)> = levels
                .iter()
                .filter(|l| (prop(l) > 0.0) == tier_positive)
                .map(|l| (*l, (avail(l) - quotas[l]) as f64))
                .filter(|(_, s)| *s > 0.0)
                .collect();
            let capacity: usize = surplus.iter().map(|(_, s)| *s as usize).sum();
            if capacity == 0 {
                break;
            }
            let give = deficit.min(capacity);
            let shares = if give == capacity {
                surplus.iter().map(|(l, s)| (*l, *s as usize)).collect()
            } else {
                largest_remainder(give, &surplus)
            };
            for (l, extra) in shares {
                *quotas.get_mut(&l).expect("level present") += extra;
            }
            deficit -= give;
        }
    }
    quotas
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lvl(i: u8) -> Importance {
        Importance::new(i).unwrap()
    }

    fn default_props() -> BTreeMap<Importance, f64> {
        BTreeMap::from([
            (lvl(5), 0.40),
            (lvl(4), 0.35),
            (lvl(3), 0.20),
            (lvl(2), 0.05),
            (lvl(1), 0.0),
        ])
    }

    fn ample() -> BTreeMap<Importance, usize> {
        Importance::LEVELS.iter().map(|l| (*l, 1_000)).collect()
    }

    fn as_vec(q: &BTreeMap<Importance, usize>) -> Vec<usize> {
        (1..=5).rev().map(|i| q[&lvl(i)]).collect()
    }

    #[test]
    fn exact_proportions() {
        let q = allocate_quotas(40, &default_props(), &ample());
        assert_eq!(as_vec(&q), vec![16, 14, 8, 2, 0]);
    }

    #[test]
    fn largest_remainder_top_up() {
        // 41: exact 16.4, 14.35, 8.2, 2.05, 0 -> floors sum 40, +1 to level 5
        let q = allocate_quotas(41, &default_props(), &ample());
        assert_eq!(as_vec(&q), vec![17, 14, 8, 2, 0]);
    }

    #[test]
    fn sparse_bucket_redistribution() {
        // level 5 capped at 10 -> deficit 6 shared by surplus 86/92/98 (levels 4/3/2):
        // 6*86/276 = 1.87, 6*92/276 = 2.0, 6*98/276 = 2.13 -> floors 1,2,2; +1 to level 4
        let avail = BTreeMap::from([(lvl(5), 10), (lvl(4), 100), (lvl(3), 100), (lvl(2), 100), (lvl(1), 50)]);
        let q = allocate_quotas(40, &default_props(), &avail);
        assert_eq!(as_vec(&q), vec![10, 16, 10, 4, 0]);
    }

    #[test]
    fn zero_proportion_levels_are_last_resort() {
        let avail = BTreeMap::from([(lvl(5), 10), (lvl(4), 5), (lvl(3), 0), (lvl(2), 0), (lvl(1), 50)]);
        let q = allocate_quotas(40, &default_props(), &avail);
        assert_eq!(as_vec(&q), vec![10, 5, 0, 0, 25]);
    }

    #[test]
    fn degenerate_inputs() {
        let q = allocate_quotas(40, &default_props(), &BTreeMap::new());
        assert!(q.values().all(|v| *v == 0));
        let q = allocate_quotas(0, &default_props(), &ample());
        assert!(q.values().all(|v| *v == 0));
    }

    proptest! {
        #[test]
        fn quota_conservation(
            n in 1usize..200,
            avail in prop::collection::vec(0usize..80, 5),
            raw in prop::collection::vec(0u32..100, 5),
        ) {
            let total: u32 = raw.iter().sum();
            prop_assume!(total > 0);
            let props: BTreeMap<_, _> = raw.iter().enumerate()
                .map(|(i, r)| (lvl(i as u8 + 1), *r as f64 / total as f64)).collect();
            let available: BTreeMap<_, _> = avail.iter().enumerate()
                .map(|(i, a)| (lvl(i as u8 + 1), *a)).collect();
            let q = allocate_quotas(n, &props, &available);
            let sum: usize = q.values().sum();
            prop_assert_eq!(sum, n.min(avail.iter().sum()));
            for (l, v) in &q {
                prop_assert!(*v <= available[l]);
            }
        }
    }
}
