//! Simulation events and the time-ordered queue that delivers them.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::ops::Range;

use crate::time::Time;

/// Kinds of events, declared in tie-break order: at equal times a BHI
/// boundary goes first, then allocation boundaries, then traffic, then
/// transmissions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    BhiStart,
    BhiEnd,
    AllocEnd,
    AllocStart,
    VfGenerated,
    BlockAckDone,
    BackoffExpired,
    GrantTx,
    AmpduTxStart,
    /// Internal re-evaluation point of the AP; never logged.
    Wake,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::VfGenerated => "VF_GENERATED",
            EventKind::BhiStart => "BHI_START",
            EventKind::BhiEnd => "BHI_END",
            EventKind::AllocStart => "ALLOC_START",
            EventKind::AllocEnd => "ALLOC_END",
            EventKind::GrantTx => "GRANT_TX",
            EventKind::AmpduTxStart => "AMPDU_TX_START",
            EventKind::BlockAckDone => "BLOCK_ACK_DONE",
            EventKind::BackoffExpired => "BACKOFF_EXPIRED",
            EventKind::Wake => "WAKE",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Subject id used for events that belong to no HMD (BHIs, shared allocations).
pub const AP_SUBJECT: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimEvent {
    pub at: Time,
    pub kind: EventKind,
    /// HMD id, or [`AP_SUBJECT`].
    pub subject: u32,
    /// MPDU ids of the subject carried by a transmission.
    pub mpdus: Range<u64>,
}

impl SimEvent {
    pub fn new(at: Time, kind: EventKind, subject: u32) -> Self {
        Self {
            at,
            kind,
            subject,
            mpdus: 0..0,
        }
    }

    pub fn with_mpdus(mut self, mpdus: Range<u64>) -> Self {
        self.mpdus = mpdus;
        self
    }

    fn key(&self) -> (Time, EventKind, u32) {
        (self.at, self.kind, self.subject)
    }
}

#[derive(Debug, PartialEq, Eq)]
struct Entry {
    event: SimEvent,
    seq: u64,
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.event
            .key()
            .cmp(&other.event.key())
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Min-queue on `(at, kind, subject)`, FIFO among identical keys.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Entry>>,
    seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: SimEvent) {
        self.seq += 1;
        self.heap.push(Reverse(Entry {
            event,
            seq: self.seq,
        }));
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop().map(|Reverse(e)| e.event)
    }

    pub fn peek_time(&self) -> Option<Time> {
        self.heap.peek().map(|Reverse(e)| e.event.at)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
