//! HTTP service over a directory of benchmarks: versions, audit rounds, the
//! dispute queue for human auditors, and score exports.
//!
//! Every route takes `Authorization: Bearer <token>`; tokens map to an actor
//! and one of the roles auditor, calibration or admin. Only the calibration
//! role ever receives micro-gold results.

mod auth;
mod error;
mod routes;
mod views;
pub mod workspace;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use auth::{Caller, Role, TokenEntry, Tokens};
pub use error::{ErrorBody, ServiceError};
pub use routes::{router, AppState, CALIBRATION_KEY};
pub use views::{
    error_codes, label_definitions, DisputeQueue, DisputeView, ErrorCodeInfo, Excerpt,
    LabelDefinition, QueuePosition, RoundState, Side, Span,
};
pub use workspace::{
    Acknowledgment, Benchmark, CreateRound, DecisionSubmission, RoundCreated, ScoreExport,
    SkipRequest, VersionView, Workspace,
};

use evobench::metrics::PriceTable;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub listen: SocketAddr,
    pub data_dir: PathBuf,
    pub token_file: PathBuf,
    pub price_table: Option<PathBuf>,
}

impl ServiceConfig {
    pub fn state(&self) -> Result<AppState, ServiceError> {
        let workspace = Workspace::open(&self.data_dir)?;
        let tokens = Tokens::load(&self.token_file)?;
        let prices = match &self.price_table {
            Some(p) => Some(serde_json::from_slice::<PriceTable>(&std::fs::read(p)?)?),
            None => None,
        };
        Ok(AppState::new(workspace, tokens, prices))
    }
}

/// Loads the workspace and serves until the task is cancelled.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let app = router(Arc::new(config.state()?));
    let listener = tokio::net::TcpListener::bind(config.listen).await?;
    axum::serve(listener, app).await?;
    Ok(())
}
