//! Label algebra, scoring, significance testing, decision-flow marginals and
//! cost estimation. Everything here is a pure function of its inputs.

mod bootstrap;
mod cost;
mod flow;
mod labels;
mod scoring;

pub use bootstrap::{
    bootstrap_differences, nearest_rank, paired_cluster_bootstrap, BootstrapResult,
    PairedCluster, DEFAULT_REPLICATES,
};
pub use cost::{
    cost_estimate, CallKind, CallRecord, CostEstimate, ModelPrice, PicoUsd, PriceTable,
    TokenLedger, TokenTotals,
};
pub use flow::{flow_marginals, Flow, FlowMarginals, FlowTable};
pub use labels::{aggregate_sentence, collapse_verdict, map_and_collapse, map_label, LabelScheme, MappedLabel};
pub use scoring::{compute_metrics, Metrics, Prediction};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("label `{label}` is not valid for scheme {scheme:?}")]
    InvalidLabel { scheme: LabelScheme, label: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("bootstrap needs at least 2 reports, got {0}")]
    TooFewClusters(usize),
    #[error("no price for model `{0}`")]
    MissingPrice(String),
}
