//! Report-level paired cluster bootstrap for comparing two methods scored on
//! the same claims.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::types::ReportId;

pub const DEFAULT_REPLICATES: usize = 20_000;

/// Per-claim correctness of methods A and B within one report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairedCluster {
    pub report_id: ReportId,
    pub a: Vec<bool>,
    pub b: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub replicates: usize,
    pub mean_diff: f64,
    pub ci95_low: f64,
    pub ci95_high: f64,
    /// The 95% interval excludes zero.
    pub significant: bool,
}

#[derive(Clone, Copy)]
struct ClusterTotals {
    n: u64,
    a: u64,
    b: u64,
}

fn totals(clusters: &[PairedCluster]) -> Result<Vec<ClusterTotals>, MetricsError> {
    if clusters.len() < 2 {
        return Err(MetricsError::TooFewClusters(clusters.len()));
    }
    clusters
        .iter()
        .map(|c| {
            if c.a.len() != c.b.len() {
                return Err(MetricsError::InvalidInput(format!(
                    "report {} has {} claims for A but {} for B",
                    c.report_id,
                    c.a.len(),
                    c.b.len()
                )));
            }
            if c.a.is_empty() {
                return Err(MetricsError::InvalidInput(format!(
                    "report {} has no claims",
                    c.report_id
                )));
            }
            Ok(ClusterTotals {
                n: c.a.len() as u64,
                a: c.a.iter().filter(|x| **x).count() as u64,
                b: c.b.iter().filter(|x| **x).count() as u64,
            })
        })
        .collect()
}

/// The paired difference `acc(A) - acc(B)` of every replicate, in replicate
/// order. Replicate `i` draws from its own ChaCha stream `i` under `seed`, so
/// the output does not depend on how many threads run it.
pub fn bootstrap_differences(
    clusters: &[PairedCluster],
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>, MetricsError> {
    let totals = totals(clusters)?;
    let k = totals.len();
    Ok((0..replicates)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let (mut n, mut a, mut b) = (0u64, 0u64, 0u64);
            for _ in 0..k {
                let c = totals[rng.gen_range(0..k)];
                n += c.n;
                a += c.a;
                b += c.b;
            }
            (a as f64 - b as f64) / n as f64
        })
        .collect())
}

/// Nearest-rank percentile of sorted data, `p` in (0, 100].
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

pub fn paired_cluster_bootstrap(
    clusters: &[PairedCluster],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapResult, MetricsError> {
    if replicates == 0 {
        return Err(MetricsError::InvalidInput("replicates must be positive".into()));
    }
    let mut diffs = bootstrap_differences(clusters, replicates, seed)?;
    let mean_diff = diffs.iter().sum::<f64>() / replicates as f64;
    diffs.sort_by(f64::total_cmp);
    let ci95_low = nearest_rank(&diffs, 2.5);
    let ci95_high = nearest_rank(&diffs, 97.5);
    Ok(BootstrapResult {
        replicates,
        mean_diff,
        ci95_low,
        ci95_high,
        significant: ci95_low > 0.0 || ci95_high < 0.0,
    })
}
