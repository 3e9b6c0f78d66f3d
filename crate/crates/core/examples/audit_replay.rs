//! How fast micro-gold accuracy would have risen had only a share of each
//! round's conflicts been audited.

use evobench::ats::sim::{OracleAuditor, ScriptedChallenger, SyntheticBenchmark, SyntheticConfig};
use evobench::ats::{replay_counterfactual, run_round, AuditFraction, AuditorKind, ProtocolHistory, ReplayInput, RoundConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut bench = SyntheticBenchmark::build(SyntheticConfig { wrong_microgolds: 6, ..Default::default() });
    let oracle = OracleAuditor::new("oracle", AuditorKind::Agent, bench.store.calibration_labels());
    let mut history = ProtocolHistory::new(50);
    for fixes in [2, 4, 6] {
        let labels = bench.store.head().unwrap().labels();
        let ch = ScriptedChallenger::coverage(format!("cov-{fixes}"), &bench.truth, labels, &bench.wrong_microgolds[..fixes], &[]);
        run_round(&mut bench.store, &mut history, &ch, &[&oracle], RoundConfig::default())?;
    }

    let input = ReplayInput::from_store(&bench.store, &history)?;
    println!("initial {:.2}, recorded {:?}", input.initial_accuracy().unwrap(), input.recorded_trajectory());
    let seeds = 2_000;
    for p in [0.25, 0.5, 0.75, 1.0] {
        let fraction = AuditFraction::new(p)?;
        let mut mean = vec![0.0; input.rounds.len()];
        for s in 0..seeds {
            for (m, a) in mean.iter_mut().zip(replay_counterfactual(&input, fraction, s)?) {
                *m += a / seeds as f64;
            }
        }
        println!("p = {p:.2}: {mean:.3?}");
    }
    Ok(())
}
