//! Audit rounds over a synthetic benchmark: a challenger proposes, an oracle
//! auditor adjudicates, and the benchmark evolves before scoring.

use evobench::ats::sim::{OracleAuditor, ScriptedAuditor, ScriptedChallenger, SyntheticBenchmark, SyntheticConfig};
use evobench::ats::{
    maintenance_check, run_round, AuditFraction, AuditorKind, Decision, ProtocolHistory, RoundConfig,
    StoppingCriteria,
};
use std::collections::BTreeMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut bench = SyntheticBenchmark::build(SyntheticConfig::default());
    let oracle = OracleAuditor::new("oracle", AuditorKind::Agent, bench.store.calibration_labels());
    let mut history = ProtocolHistory::new(bench.store.claims().len());
    let stopping = StoppingCriteria { microgold_target: Some(0.9), ..Default::default() };

    for (round, fixes) in [1usize, 3, 4, 4].into_iter().enumerate() {
        let labels = bench.store.head().unwrap().labels();
        let challenger = ScriptedChallenger::coverage(
            format!("challenger-{round}"),
            &bench.truth,
            labels,
            &bench.wrong_microgolds[..fixes],
            &[],
        );
        let config = RoundConfig { stopping, ..Default::default() };
        let report = run_round(&mut bench.store, &mut history, &challenger, &[&oracle], config)?
            .committed()
            .expect("the oracle decides synchronously");
        println!(
            "round {}: {} conflicts, {} accepted, score {:.2}, micro-gold {:.2}",
            report.round,
            report.conflicts,
            report.accepted,
            report.score.unwrap(),
            report.microgold_accuracy.unwrap()
        );
        println!("  maintenance: {:?}", maintenance_check(&history, &stopping));
    }

    // strict mode needs a human and an agent to both accept
    let labels = bench.store.head().unwrap().labels();
    let noisy: Vec<_> = labels.keys().take(4).cloned().collect();
    let challenger = ScriptedChallenger::coverage("noisy", &bench.truth, labels, &[], &noisy);
    let human = ScriptedAuditor { id: "expert".into(), kind: AuditorKind::Human, decisions: BTreeMap::new(), default: Some(Decision::Accept) };
    let config = RoundConfig { strict_mode: true, audit_fraction: AuditFraction::new(0.5)?, seed: 3, ..Default::default() };
    let report = run_round(&mut bench.store, &mut history, &challenger, &[&human, &oracle], config)?
        .committed()
        .unwrap();
    println!(
        "strict round: {} conflicts, {} audited, {} accepted",
        report.conflicts, report.audited, report.accepted
    );
    Ok(())
}
