//! Latency statistics and the empirical CDF of a trace.

use std::fmt::Write as _;

use super::trace::SimTrace;
use crate::time::Time;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyStats {
    pub count: usize,
    pub max: Time,
    /// Floored to the picosecond.
    pub mean: Time,
    pub p50: Time,
    pub p99: Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// `None` for an empty trace.
    pub stats: Option<LatencyStats>,
    /// `(latency, fraction of samples <= latency)` at every distinct latency.
    pub cdf: Vec<(Time, f64)>,
}

/// Nearest-rank percentile of sorted values.
fn percentile(sorted: &[Time], p: u32) -> Time {
    let rank = (sorted.len() * p as usize).div_ceil(100).max(1);
    sorted[rank - 1]
}

pub fn summarize(trace: &SimTrace) -> Summary {
    let mut lat: Vec<Time> = trace.samples.iter().map(|s| s.latency()).collect();
    lat.sort_unstable();
    let n = lat.len();
    let mut cdf: Vec<(Time, f64)> = Vec::new();
    for (i, &l) in lat.iter().enumerate() {
        if lat.get(i + 1) != Some(&l) {
            cdf.push((l, (i + 1) as f64 / n as f64));
        }
    }
    let stats = (n > 0).then(|| {
        let total: i128 = lat.iter().map(|t| t.as_ps() as i128).sum();
        LatencyStats {
            count: n,
            max: lat[n - 1],
            mean: Time::from_ps((total / n as i128) as i64),
            p50: percentile(&lat, 50),
            p99: percentile(&lat, 99),
        }
    });
    Summary { stats, cdf }
}

pub const CDF_HEADER: &str = "latency_ns,cum_fraction";

pub fn cdf_csv(summary: &Summary) -> String {
    let mut out = String::from(CDF_HEADER);
    out.push('\n');
    for (l, f) in &summary.cdf {
        let _ = writeln!(out, "{},{f}", l.display_ns());
    }
    out
}
