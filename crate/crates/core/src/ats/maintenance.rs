use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{RoundReport, StoppingCriteria};
use crate::types::ActorId;

/// Drift guard: recalibrate once accepted changes exceed this percentage of
/// benchmark entries.
pub const DRIFT_GUARD_PERCENT: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibrationMark {
    /// Number of rounds committed when the calibration happened.
    pub after_round: u64,
    pub actor: ActorId,
    pub at: DateTime<Utc>,
}

/// Committed rounds and expert calibrations of one benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolHistory {
    pub benchmark_size: usize,
    #[serde(default)]
    pub rounds: Vec<RoundReport>,
    #[serde(default)]
    pub calibrations: Vec<CalibrationMark>,
}

impl ProtocolHistory {
    pub fn new(benchmark_size: usize) -> Self {
        Self {
            benchmark_size,
            rounds: Vec::new(),
            calibrations: Vec::new(),
        }
    }

    pub(crate) fn push_round(&mut self, report: RoundReport) {
        self.benchmark_size = self.benchmark_size.max(report.predictions.len());
        self.rounds.push(report);
    }

    fn calibrated_after(&self) -> u64 {
        self.calibrations.last().map(|c| c.after_round).unwrap_or(0)
    }

    /// Accepted changes committed since the most recent expert calibration.
    pub fn changes_since_calibration(&self) -> usize {
        let after = self.calibrated_after();
        self.rounds
            .iter()
            .filter(|r| r.round > after)
            .map(|r| r.accepted)
            .sum()
    }

    pub fn audits_used(&self) -> usize {
        self.rounds.iter().map(|r| r.audited).sum()
    }

    /// Marks an expert recalibration, resetting the drift counter.
    pub fn record_calibration(&mut self, actor: impl Into<ActorId>) -> &CalibrationMark {
        self.calibrations.push(CalibrationMark {
            after_round: self.rounds.last().map(|r| r.round).unwrap_or(0),
            actor: actor.into(),
            at: Utc::now(),
        });
        self.calibrations.last().expect("just pushed")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    AuditBudget,
    MicrogoldTarget,
    MaxRounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum MaintenanceAction {
    Continue,
    Stop { reason: StopReason },
    ExpertRecalibrationRequired { changes: usize, entries: usize },
}

/// True when `changes` is strictly more than the drift-guard share of `entries`.
pub fn drift_exceeded(changes: usize, entries: usize) -> bool {
    changes * 100 > entries * DRIFT_GUARD_PERCENT
}

/// Decides what happens after the latest round. The drift guard takes
/// precedence over stopping, since a drifting benchmark must be recalibrated
/// before its numbers are reported.
pub fn maintenance_check(history: &ProtocolHistory, stopping: &StoppingCriteria) -> MaintenanceAction {
    let changes = history.changes_since_calibration();
    if drift_exceeded(changes, history.benchmark_size) {
        return MaintenanceAction::ExpertRecalibrationRequired {
            changes,
            entries: history.benchmark_size,
        };
    }
    if let Some(budget) = stopping.audit_budget {
        if history.audits_used() >= budget {
            return MaintenanceAction::Stop {
                reason: StopReason::AuditBudget,
            };
        }
    }
    if let Some(target) = stopping.microgold_target {
        let recent: Vec<_> = history.rounds.iter().rev().take(2).collect();
        let stable = recent.len() == 2
            && recent
                .iter()
                .all(|r| r.microgold_accuracy.is_some_and(|a| a >= target));
        if stable {
            return MaintenanceAction::Stop {
                reason: StopReason::MicrogoldTarget,
            };
        }
    }
    if let Some(max) = stopping.max_rounds {
        if history.rounds.len() as u64 >= max {
            return MaintenanceAction::Stop {
                reason: StopReason::MaxRounds,
            };
        }
    }
    MaintenanceAction::Continue
}
