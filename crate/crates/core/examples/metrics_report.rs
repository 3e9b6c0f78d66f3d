//! Label mapping, sentence aggregation, scores, decision flows, a paired
//! bootstrap and per-claim cost.

use std::collections::BTreeMap;

use evobench::metrics::{
    aggregate_sentence, compute_metrics, cost_estimate, flow_marginals, map_and_collapse, map_label,
    paired_cluster_bootstrap, Flow, FlowTable, LabelScheme, PairedCluster, Prediction, PriceTable, TokenLedger,
};
use evobench::types::{BinaryLabel, ClaimId, Verdict};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let atoms: Vec<Verdict> = ["true", "not enough evidence", "true"]
        .iter()
        .map(|l| map_label(LabelScheme::FireOrFactcheckGpt, l))
        .collect::<Result<_, _>>()?;
    println!("atoms {atoms:?} aggregate to {:?}", aggregate_sentence(&atoms));
    println!("SAFE all-irrelevant: {:?}", map_and_collapse(LabelScheme::Safe, &["irrelevant", "irrelevant"])?);

    use BinaryLabel::*;
    let gold: BTreeMap<ClaimId, BinaryLabel> =
        [("a", Supported), ("b", Unsupported), ("c", Supported), ("d", Unsupported)].into_iter().map(|(k, v)| (k.into(), v)).collect();
    let predictions: BTreeMap<ClaimId, Prediction> = [
        ("a", Prediction::Label(Supported)),
        ("b", Prediction::Label(Supported)),
        ("c", Prediction::ForcedIncorrect),
        ("d", Prediction::Label(Unsupported)),
    ]
    .into_iter()
    .map(|(k, v)| (k.into(), v))
    .collect();
    println!("{:?}", compute_metrics(&predictions, &gold)?);

    let flows = FlowTable::new([
        (Flow::new(false, true, true), 0.25),
        (Flow::new(true, true, true), 0.45),
        (Flow::new(true, false, true), 0.10),
        (Flow::new(false, false, false), 0.15),
        (Flow::new(true, false, false), 0.05),
    ])?;
    println!("{:?}", flow_marginals(&flows));

    let clusters: Vec<PairedCluster> = (0..8)
        .map(|r| PairedCluster {
            report_id: format!("report-{r}").into(),
            a: (0..6).map(|k| (r + k) % 4 != 0).collect(),
            b: (0..6).map(|k| (r + k) % 3 != 0).collect(),
        })
        .collect();
    println!("{:?}", paired_cluster_bootstrap(&clusters, 20_000, 7)?);

    let mut ledger = TokenLedger::new();
    ledger.record_text("gpt-4.1", "verify", 180_000, 6_000);
    ledger.record_text("gpt-4.1-mini", "summarize", 400_000, 20_000);
    ledger.record_search("web", "search");
    let est = cost_estimate(&ledger, &PriceTable::gpt41_list_prices(), "gpt-4.1", 1)?;
    println!("per claim {} ({:.0} normalized input tokens)", est.per_claim, est.normalized_input_tokens);
    Ok(())
}
