use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use evobench::ats::sim::{OracleAuditor, ScriptedAuditor};
use evobench::ats::{
    replay_counterfactual, AuditFraction, Auditor, AuditorKind, Decision, MaintenanceAction,
    ProtocolHistory, ReplayInput, RoundConfig,
};
use evobench::harness::{verify_group, ChallengerSpec, FixtureScript, PipelineBudget, Providers};
use evobench::metrics::{
    compute_metrics, cost_estimate, paired_cluster_bootstrap, PairedCluster, PriceTable, TokenLedger,
    DEFAULT_REPLICATES,
};
use evobench::sampling::{
    plan_microgold_injection, sample_batch, SampledBatch, SamplingPlan, DEFAULT_MICROGOLD_SHARE,
    DEFAULT_SUPPORTED_TO_UNSUPPORTED,
};
use evobench::store::{ingest_report, read_report_file, BenchmarkStore, ClaimRecord, SeedEntry};
use evobench::types::{ActorId, BinaryLabel, ClaimId};
use evobench_service::{
    Caller, CreateRound, DecisionSubmission, Role, RoundState, ServiceConfig, Workspace,
};

#[derive(Parser)]
#[command(name = "evobench", version, about = "Versioned claim-level factuality benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a report body into sentences and print the report document.
    Ingest {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long, default_value = "general")]
        domain: String,
    },
    /// Create a benchmark from report documents and seed annotations.
    Import {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, num_args = 1.., required = true)]
        reports: Vec<PathBuf>,
        /// JSONL of {claim, verdict, rationale}.
        #[arg(long)]
        seed: PathBuf,
    },
    /// Draw an annotation batch by importance quota and risk weight.
    Sample {
        #[arg(long)]
        plan: PathBuf,
        /// JSONL of claim records.
        #[arg(long)]
        claims: PathBuf,
        /// Overrides the seed in the plan.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Plan hidden calibration items for a sampled batch.
    Inject {
        /// A sampled batch or a JSON list of claim ids.
        #[arg(long)]
        batch: PathBuf,
        /// JSONL of claim records carrying calibration data.
        #[arg(long)]
        pool: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MICROGOLD_SHARE)]
        share: f64,
    },
    /// Run or replay audit rounds.
    Round {
        #[command(subcommand)]
        command: RoundCommand,
    },
    /// Record an expert recalibration when maintenance asks for one.
    Calibrate {
        #[command(flatten)]
        bench: BenchArgs,
        #[arg(long, value_enum)]
        respond_to: Trigger,
        #[arg(long, default_value = "expert")]
        actor: String,
    },
    /// Score predictions against gold labels, or export benchmark scores.
    Score(ScoreArgs),
    /// Paired cluster bootstrap over per-report correctness.
    Bootstrap {
        /// JSON list of {report_id, a, b}.
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long, default_value_t = DEFAULT_REPLICATES)]
        replicates: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-claim cost of a token ledger.
    Cost {
        #[arg(long)]
        ledger: PathBuf,
        /// Defaults to the built-in list prices.
        #[arg(long)]
        prices: Option<PathBuf>,
        #[arg(long, default_value = "gpt-4.1")]
        normalize_to: String,
        #[arg(long)]
        claims: u64,
    },
    /// Run the verification pipeline over scripted providers.
    Verify {
        /// JSONL of claim records from the report.
        #[arg(long)]
        claims: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, default_value_t = 1)]
        group: usize,
        #[arg(long)]
        budget: Option<PathBuf>,
        #[arg(long)]
        providers: PathBuf,
        /// Writes the verification traces here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, env = "EVOBENCH_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "EVOBENCH_DATA")]
        data: PathBuf,
        #[arg(long, env = "EVOBENCH_TOKENS")]
        tokens: PathBuf,
        #[arg(long, env = "EVOBENCH_PRICES")]
        prices: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, env = "EVOBENCH_DATA")]
    data: PathBuf,
    #[arg(long)]
    benchmark: String,
}

#[derive(Subcommand)]
enum RoundCommand {
    /// Evaluate a challenger on the head and queue its disputes.
    Run {
        #[command(flatten)]
        bench: BenchArgs,
        /// `echo`, `flip-all`, or a challenger spec JSON file.
        #[arg(long)]
        challenger: String,
        #[arg(long, default_value_t = 1.0)]
        audit_fraction: f64,
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Synchronous auditors as KIND:POLICY, e.g. agent:oracle or human:accept.
        #[arg(long = "auditor")]
        auditors: Vec<String>,
        /// Writes the round report here once committed.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the disputes of a round.
    Disputes {
        #[arg(long, env = "EVOBENCH_DATA")]
        data: PathBuf,
        #[arg(long)]
        round: String,
        #[arg(long)]
        actor: Option<String>,
    },
    /// Submit one auditor decision in the HTTP wire format.
    Decide {
        #[arg(long, env = "EVOBENCH_DATA")]
        data: PathBuf,
        #[arg(long)]
        dispute: String,
        #[arg(long)]
        actor: String,
        #[arg(long, value_enum, default_value_t = Kind::Human)]
        kind: Kind,
        #[arg(long)]
        submission: PathBuf,
    },
    /// Micro-gold trajectory had only a share of each round been audited.
    Replay {
        /// A benchmark directory or a replay input JSON file.
        #[arg(long)]
        history: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Averages over this many consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
    },
}

#[derive(Args)]
struct ScoreArgs {
    /// JSON map of claim id to prediction.
    #[arg(long, requires = "gold", conflicts_with = "benchmark")]
    predictions: Option<PathBuf>,
    /// JSON map of claim id to supported/unsupported.
    #[arg(long)]
    gold: Option<PathBuf>,
    #[arg(long, env = "EVOBENCH_DATA", requires = "benchmark")]
    data: Option<PathBuf>,
    #[arg(long)]
    benchmark: Option<String>,
    /// Defaults to the head.
    #[arg(long)]
    version: Option<u64>,
    #[arg(long)]
    microgold: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Trigger {
    Maintenance,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Human,
    Agent,
}

impl From<Kind> for AuditorKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Human => AuditorKind::Human,
            Kind::Agent => AuditorKind::Agent,
        }
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?);
    }
    Ok(out)
}

fn print(value: &impl Serialize) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn challenger_spec(arg: &str) -> Result<ChallengerSpec> {
    Ok(match arg {
        "echo" => ChallengerSpec::Echo { id: None },
        "flip-all" | "flip_all" => ChallengerSpec::FlipAll { id: None },
        path => read_json(Path::new(path))?,
    })
}

fn auditor(arg: &str, store: &BenchmarkStore) -> Result<Box<dyn Auditor>> {
    let (kind, policy) = arg.split_once(':').context("auditor must be KIND:POLICY")?;
    let kind = match kind {
        "human" => AuditorKind::Human,
        "agent" => AuditorKind::Agent,
        other => bail!("unknown auditor kind `{other}`"),
    };
    let id = ActorId::new(format!("{policy}-{kind:?}").to_lowercase());
    Ok(match policy {
        "oracle" => Box::new(OracleAuditor::new(id, kind, store.calibration_labels())),
        "accept" | "reject" => Box::new(ScriptedAuditor {
            id,
            kind,
            decisions: BTreeMap::new(),
            default: Some(if policy == "accept" { Decision::Accept } else { Decision::Reject }),
        }),
        other => bail!("unknown auditor policy `{other}`"),
    })
}

fn round(command: RoundCommand) -> Result<()> {
    match command {
        RoundCommand::Run { bench, challenger, audit_fraction, strict, seed, auditors, out } => {
            let mut ws = Workspace::open(&bench.data)?;
            let b = ws.get_mut(&bench.benchmark)?;
            let panel: Vec<Box<dyn Auditor>> =
                auditors.iter().map(|a| auditor(a, b.store())).collect::<Result<_>>()?;
            let req = CreateRound {
                challenger: challenger_spec(&challenger)?,
                config: RoundConfig {
                    audit_fraction: AuditFraction::new(audit_fraction)?,
                    strict_mode: strict,
                    seed,
                    ..Default::default()
                },
                assignees: None,
            };
            let created = b.create_round(&req, None)?;
            if !panel.is_empty() {
                let refs: Vec<&dyn Auditor> = panel.iter().map(|a| a.as_ref()).collect();
                b.apply_auditors(&refs)?;
            }
            if b.round_state(created.round) == Some(RoundState::Committed) {
                let report = b.round_report(created.round)?;
                if let Some(path) = out {
                    fs::write(&path, serde_json::to_vec_pretty(report)?)?;
                }
                print(report)
            } else {
                print(&b.dispute_queue(created.round, None)?)
            }
        }
        RoundCommand::Disputes { data, round, actor } => {
            let ws = Workspace::open(&data)?;
            let (b, r) = ws.by_round(&round)?;
            print(&b.dispute_queue(r, actor.map(ActorId::new).as_ref())?)
        }
        RoundCommand::Decide { data, dispute, actor, kind, submission } => {
            let mut ws = Workspace::open(&data)?;
            let sub: DecisionSubmission = read_json(&submission)?;
            let caller = Caller { actor: ActorId::new(actor), role: Role::Auditor, kind: kind.into() };
            let ack = ws.by_dispute_mut(&dispute)?.submit(&dispute, &caller, sub)?;
            print(&ack)
        }
        RoundCommand::Replay { history, p, seed, seeds } => {
            let input: ReplayInput = if history.is_dir() {
                let store = BenchmarkStore::open(&history.join("store"))?;
                let h: ProtocolHistory = read_json(&history.join("history.json"))?;
                ReplayInput::from_store(&store, &h)?
            } else {
                read_json(&history)?
            };
            let fraction = AuditFraction::new(p)?;
            let mut mean = vec![0.0; input.rounds.len()];
            for s in seed..seed + seeds.max(1) {
                for (m, a) in mean.iter_mut().zip(replay_counterfactual(&input, fraction, s)?) {
                    *m += a / seeds.max(1) as f64;
                }
            }
            print(&serde_json::json!({
                "p": p,
                "seeds": seeds.max(1),
                "initial": input.initial_accuracy(),
                "recorded": input.recorded_trajectory(),
                "trajectory": mean,
            }))
        }
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { report, id, domain } => {
            let body = fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            print(&ingest_report(&body, id, domain)?)
        }
        Command::Import { bench, reports, seed } => {
            let mut store = BenchmarkStore::new();
            for path in &reports {
                store.add_report(read_report_file(File::open(path)?)?)?;
            }
            store.init_benchmark(read_jsonl::<SeedEntry>(&seed)?)?;
            let mut ws = Workspace::open(&bench.data)?;
            let b = ws.create(&bench.benchmark, store)?;
            let head = b.store().head().context("benchmark has no version")?;
            print(&serde_json::json!({
                "benchmark_id": b.id(),
                "version": head.version(),
                "entries": head.len(),
                "snapshot_digest": head.snapshot_digest(),
            }))
        }
        Command::Sample { plan, claims, seed } => {
            let mut plan: SamplingPlan = read_json(&plan)?;
            if let Some(s) = seed {
                plan.seed = s;
            }
            let claims: Vec<ClaimRecord> = read_jsonl(&claims)?;
            print(&sample_batch(&plan, &claims)?)
        }
        Command::Inject { batch, pool, seed, share } => {
            let ids: Vec<ClaimId> = match read_json::<serde_json::Value>(&batch)? {
                v @ serde_json::Value::Array(_) => serde_json::from_value(v)?,
                v => serde_json::from_value::<SampledBatch>(v)?.claim_ids,
            };
            let pool: Vec<ClaimRecord> = read_jsonl(&pool)?;
            print(&plan_microgold_injection(&ids, &pool, share, DEFAULT_SUPPORTED_TO_UNSUPPORTED, seed)?)
        }
        Command::Round { command } => round(command),
        Command::Calibrate { bench, respond_to: Trigger::Maintenance, actor } => {
            let mut ws = Workspace::open(&bench.data)?;
            let b = ws.get_mut(&bench.benchmark)?;
            let action = b.maintenance(&RoundConfig::default());
            let recorded = matches!(action, MaintenanceAction::ExpertRecalibrationRequired { .. });
            if recorded {
                b.record_calibration(actor)?;
            }
            print(&serde_json::json!({
                "action": action,
                "calibration_recorded": recorded,
                "changes_since_calibration": b.history().changes_since_calibration(),
            }))
        }
        Command::Score(args) => match (args.predictions, args.gold, args.data, args.benchmark) {
            (Some(p), Some(g), _, _) => {
                let predictions: BTreeMap<ClaimId, evobench::metrics::Prediction> = read_json(&p)?;
                let gold: BTreeMap<ClaimId, BinaryLabel> = read_json(&g)?;
                print(&compute_metrics(&predictions, &gold)?)
            }
            (_, _, Some(data), Some(id)) => {
                let ws = Workspace::open(&data)?;
                let b = ws.get(&id)?;
                let t = args.version.or_else(|| b.store().head().map(|h| h.version())).unwrap_or(0);
                print(&b.export_scores(t, args.microgold)?)
            }
            _ => bail!("give --predictions and --gold, or --data and --benchmark"),
        },
        Command::Bootstrap { clusters, replicates, seed } => {
            let clusters: Vec<PairedCluster> = read_json(&clusters)?;
            print(&paired_cluster_bootstrap(&clusters, replicates, seed)?)
        }
        Command::Cost { ledger, prices, normalize_to, claims } => {
            let ledger: TokenLedger = read_json(&ledger)?;
            let prices = match prices {
                Some(p) => read_json(&p)?,
                None => PriceTable::gpt41_list_prices(),
            };
            let est = cost_estimate(&ledger, &prices, &normalize_to, claims)?;
            print(&serde_json::json!({
                "estimate": est,
                "per_claim": est.per_claim.to_string(),
            }))
        }
        Command::Verify { claims, report, group, budget, providers, trace } => {
            let claims: Vec<ClaimRecord> = read_jsonl(&claims)?;
            let report = read_report_file(File::open(&report)?)?;
            let budget: PipelineBudget = match budget {
                Some(b) => read_json(&b)?,
                None => PipelineBudget::default(),
            };
            let script: FixtureScript = read_json(&providers)?;
            let (verifier, summarizer, search) = (script.verifier(), script.summarizer(), script.search_engine());
            let out = verify_group(
                &claims,
                &report,
                group,
                &budget,
                Providers { verifier: &verifier, summarizer: &summarizer, search: &search },
            )?;
            if let Some(path) = trace {
                fs::write(&path, serde_json::to_vec_pretty(&out.traces)?)?;
            }
            print(&serde_json::json!({ "verdicts": out.verdicts, "ledger": out.ledger() }))
        }
        Command::Serve { listen, data, tokens, prices } => {
            let config = ServiceConfig { listen, data_dir: data, token_file: tokens, price_table: prices };
            tokio::runtime::Runtime::new()?.block_on(evobench_service::serve(config))?;
            Ok(())
        }
    }
}
