use std::collections::HashMap;
use std::path::Path;

use axum::http::header::AUTHORIZATION;
use axum::http::HeaderMap;
use serde::{Deserialize, Serialize};

use evobench::ats::AuditorKind;
use evobench::types::ActorId;

use crate::ServiceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// Reviews disputes assigned to its actor.
    Auditor,
    /// Sees micro-gold calibration results.
    Calibration,
    /// Opens rounds and may act on any dispute.
    Admin,
}

/// An authenticated actor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caller {
    pub actor: ActorId,
    pub role: Role,
    /// How this actor's votes count in strict mode.
    #[serde(default = "human")]
    pub kind: AuditorKind,
}

fn human() -> AuditorKind {
    AuditorKind::Human
}

impl Caller {
    pub fn can_audit(&self) -> bool {
        matches!(self.role, Role::Auditor | Role::Admin)
    }

    pub fn sees_calibration(&self) -> bool {
        self.role == Role::Calibration
    }
}

/// One line of the token file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenEntry {
    pub token: String,
    #[serde(flatten)]
    pub caller: Caller,
}

#[derive(Debug, Clone, Default)]
pub struct Tokens(HashMap<String, Caller>);

impl Tokens {
    pub fn new(entries: impl IntoIterator<Item = TokenEntry>) -> Self {
        Self(entries.into_iter().map(|e| (e.token, e.caller)).collect())
    }

    /// Reads a JSON array of [`TokenEntry`].
    pub fn load(path: &Path) -> Result<Self, ServiceError> {
        let entries: Vec<TokenEntry> = serde_json::from_slice(&std::fs::read(path)?)?;
        Ok(Self::new(entries))
    }

    pub fn authenticate(&self, headers: &HeaderMap) -> Result<Caller, ServiceError> {
        let value = headers
            .get(AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .ok_or(ServiceError::Unauthorized)?;
        let token = value.strip_prefix("Bearer ").ok_or(ServiceError::Unauthorized)?;
        self.0.get(token.trim()).cloned().ok_or(ServiceError::Unauthorized)
    }
}
