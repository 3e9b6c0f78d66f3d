//! Human → agent → post-audit human correctness flows on calibration claims.

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Correctness of the initial human label, the agent proposal, and the
/// post-audit human label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Flow {
    pub human: bool,
    pub agent: bool,
    pub human_after: bool,
}

impl Flow {
    pub const fn new(human: bool, agent: bool, human_after: bool) -> Self {
        Self {
            human,
            agent,
            human_after,
        }
    }

    fn index(self) -> usize {
        (self.human as usize) << 2 | (self.agent as usize) << 1 | self.human_after as usize
    }

    fn from_index(i: usize) -> Self {
        Self::new(i & 4 != 0, i & 2 != 0, i & 1 != 0)
    }
}

/// Proportions over all eight flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowTable {
    proportions: [f64; 8],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowMarginals {
    pub acc_h: f64,
    pub acc_a: f64,
    pub acc_h_prime: f64,
}

pub const SUM_TOLERANCE: f64 = 1e-6;

impl FlowTable {
    /// Proportions as fractions; they must sum to 1 within [`SUM_TOLERANCE`].
    pub fn new(entries: impl IntoIterator<Item = (Flow, f64)>) -> Result<Self, MetricsError> {
        let table = Self::collect(entries)?;
        let sum = table.sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(MetricsError::InvalidInput(format!(
                "flow proportions sum to {sum}, expected 1"
            )));
        }
        Ok(table)
    }

    /// Percentages as printed with `decimals` decimal places. Each printed
    /// value may be off by half a unit in the last place, so the sum may
    /// deviate from 100 by up to eight half-units. Values are kept as printed.
    pub fn from_rounded_percentages(
        entries: impl IntoIterator<Item = (Flow, f64)>,
        decimals: u32,
    ) -> Result<Self, MetricsError> {
        let table = Self::collect(entries.into_iter().map(|(f, p)| (f, p / 100.0)))?;
        let half_unit = 0.5 * 10f64.powi(-(decimals as i32)) / 100.0;
        let slack = 8.0 * half_unit + SUM_TOLERANCE;
        let sum = table.sum();
        if (sum - 1.0).abs() > slack {
            return Err(MetricsError::InvalidInput(format!(
                "rounded flow percentages sum to {}, beyond rounding slack",
                sum * 100.0
            )));
        }
        Ok(table)
    }

    fn collect(entries: impl IntoIterator<Item = (Flow, f64)>) -> Result<Self, MetricsError> {
        let mut proportions = [0.0; 8];
        let mut seen = [false; 8];
        for (flow, p) in entries {
            if !(p >= 0.0) {
                return Err(MetricsError::InvalidInput(format!(
                    "negative or NaN proportion for {flow:?}"
                )));
            }
            let i = flow.index();
            if seen[i] {
                return Err(MetricsError::InvalidInput(format!("duplicate flow {flow:?}")));
            }
            seen[i] = true;
            proportions[i] = p;
        }
        Ok(Self { proportions })
    }

    pub fn get(&self, flow: Flow) -> f64 {
        self.proportions[flow.index()]
    }

    pub fn sum(&self) -> f64 {
        self.proportions.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Flow, f64)> + '_ {
        self.proportions
            .iter()
            .enumerate()
            .map(|(i, &p)| (Flow::from_index(i), p))
    }
}

/// Marginal accuracies of the three stages, each summed over the four flows
/// where that stage is correct.
pub fn flow_marginals(table: &FlowTable) -> FlowMarginals {
    let sum_where = |pick: fn(Flow) -> bool| -> f64 {
        table.iter().filter(|(f, _)| pick(*f)).map(|(_, p)| p).sum()
    };
    FlowMarginals {
        acc_h: sum_where(|f| f.human),
        acc_a: sum_where(|f| f.agent),
        acc_h_prime: sum_where(|f| f.human_after),
    }
}
