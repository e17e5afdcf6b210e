//! Simulation output and its CSV renderings.

use std::fmt::Write as _;

use super::event::{EventKind, SimEvent, AP_SUBJECT};
use crate::time::Time;

/// One delivered MPDU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sample {
    pub hmd_id: u32,
    pub mpdu_id: u64,
    pub generated_at: Time,
    pub delivered_at: Time,
}

impl Sample {
    pub fn latency(&self) -> Time {
        self.delivered_at - self.generated_at
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimTrace {
    pub samples: Vec<Sample>,
    /// MPDUs still queued or in flight when the run ended.
    pub dropped: u64,
    pub generated: u64,
    pub schedule_log: Vec<SimEvent>,
}

impl SimTrace {
    pub fn max_latency(&self) -> Option<Time> {
        self.samples.iter().map(Sample::latency).max()
    }

    /// Samples later than `bound`.
    pub fn violations(&self, bound: Time) -> usize {
        self.samples.iter().filter(|s| s.latency() > bound).count()
    }
}

pub const TRACE_HEADER: &str = "hmd_id,mpdu_id,generated_ns,delivered_ns,latency_ns";
pub const SCHEDULE_HEADER: &str = "at_ns,kind,subject,detail";

pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(48 * (trace.samples.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.hmd_id,
            s.mpdu_id,
            s.generated_at.display_ns(),
            s.delivered_at.display_ns(),
            s.latency().display_ns()
        );
    }
    out
}

pub fn schedule_csv(log: &[SimEvent]) -> String {
    let mut out = String::from(SCHEDULE_HEADER);
    out.push('\n');
    for ev in log {
        let subject = if ev.subject == AP_SUBJECT {
            "ap".to_string()
        } else {
            ev.subject.to_string()
        };
        let detail = if ev.mpdus.is_empty() {
            String::new()
        } else {
            format!("mpdus {}..{}", ev.mpdus.start, ev.mpdus.end)
        };
        let _ = writeln!(out, "{},{},{subject},{detail}", ev.at.display_ns(), ev.kind);
    }
    out
}

/// Checks that BHIs, Grants and A-MPDU exchanges never overlap in the log.
/// Returns a description of the first overlap found.
pub fn verify_medium_exclusive(log: &[SimEvent], grant_airtime: Time) -> Result<(), String> {
    let mut busy: Vec<(Time, Time, String)> = Vec::new();
    let mut open_bhi = None;
    let mut open_tx: Option<&SimEvent> = None;
    for ev in log {
        match ev.kind {
            EventKind::BhiStart => open_bhi = Some(ev.at),
            EventKind::BhiEnd => {
                if let Some(start) = open_bhi.take() {
                    busy.push((start, ev.at, "BHI".into()));
                }
            }
            EventKind::GrantTx => busy.push((
                ev.at,
                ev.at + grant_airtime,
                format!("Grant to {}", ev.subject),
            )),
            EventKind::AmpduTxStart => {
                if let Some(prev) = open_tx {
                    return Err(format!(
                        "A-MPDU at {} starts before the exchange at {} ends",
                        ev.at, prev.at
                    ));
                }
                open_tx = Some(ev);
            }
            EventKind::BlockAckDone => {
                let start = open_tx
                    .take()
                    .ok_or_else(|| format!("Block ACK at {} without an A-MPDU", ev.at))?;
                busy.push((
                    start.at,
                    ev.at,
                    format!("A-MPDU to {} {:?}", ev.subject, ev.mpdus),
                ));
            }
            _ => {}
        }
    }
    if let Some(start) = open_bhi {
        busy.push((start, Time::MAX, "BHI".into()));
    }
    if let Some(tx) = open_tx {
        busy.push((tx.at, Time::MAX, "A-MPDU".into()));
    }
    busy.sort_by_key(|b| (b.0, b.1));
    for pair in busy.windows(2) {
        if pair[1].0 < pair[0].1 {
            return Err(format!(
                "{} [{}, {}) overlaps {} [{}, {})",
                pair[0].2, pair[0].0, pair[0].1, pair[1].2, pair[1].0, pair[1].1
            ));
        }
    }
    Ok(())
}
