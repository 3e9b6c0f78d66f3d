//! Stratified batch sampling, hidden calibration items and annotator scoring.

use std::collections::BTreeMap;

use evobench::ats::sim::{SyntheticBenchmark, SyntheticConfig};
use evobench::sampling::{
    allocate_quotas, plan_microgold_injection, sample_batch, score_annotator, SamplingPlan,
    DEFAULT_MICROGOLD_SHARE, DEFAULT_SUPPORTED_TO_UNSUPPORTED,
};
use evobench::types::Importance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let lvl = |i| Importance::new(i).unwrap();
    let proportions: BTreeMap<_, _> =
        [(5, 0.40), (4, 0.35), (3, 0.20), (2, 0.05), (1, 0.0)].into_iter().map(|(l, p)| (lvl(l), p)).collect();

    let ample: BTreeMap<_, _> = (1..=5).map(|l| (lvl(l), 100)).collect();
    println!("quotas for N=40: {:?}", allocate_quotas(40, &proportions, &ample));
    let sparse = BTreeMap::from([(lvl(5), 3), (lvl(4), 20), (lvl(3), 20), (lvl(2), 20), (lvl(1), 20)]);
    println!("with only 3 level-5 claims: {:?}", allocate_quotas(40, &proportions, &sparse));

    let bench = SyntheticBenchmark::build(SyntheticConfig { reports: 10, microgolds: 20, supported_microgolds: 4, ..Default::default() });
    let claims: Vec<_> = bench.store.claims().values().cloned().collect();
    let plan = SamplingPlan { n: 24, proportions, rho: 3.0, seed: 11 };
    let batch = sample_batch(&plan, &claims)?;
    println!("sampled {} claims, quotas {:?}", batch.claim_ids.len(), batch.quotas);

    let pool: Vec<_> = claims.iter().filter(|c| c.is_microgold()).cloned().collect();
    let injection = plan_microgold_injection(&batch.claim_ids, &pool, DEFAULT_MICROGOLD_SHARE, DEFAULT_SUPPORTED_TO_UNSUPPORTED, 5)?;
    println!(
        "annotator sees {} items, {} of them hidden calibration claims",
        injection.annotator_view().items.len(),
        injection.microgold_count()
    );

    let responses = bench.store.head().unwrap().labels();
    let report = score_annotator(&responses, &bench.store.calibration_labels())?;
    println!("seed annotator accuracy on calibration items: {:.2}", report.accuracy());
    Ok(())
}
