//! Deterministic discrete-event replay of the BI timeline.
//!
//! A single AP serves every HMD over one medium. BHIs, allocations and
//! guards come from [`schedule`]; the [`engine`] applies the channel-access
//! rules of the scenario's method and aggregates MPDUs greedily, and the
//! resulting [`SimTrace`] records one latency sample per MPDU.
//!
//! A sample's delivery time is the end of the A-MPDU data carrying it.

pub mod engine;
pub mod event;
pub mod schedule;
pub mod summary;
pub mod trace;

pub use engine::{prepare, run, run_prepared, BackoffPolicy, SimConfig, SimSetup, VideoLoad};
pub use event::{EventKind, SimEvent};
pub use schedule::{build_bi_schedule, BiSchedule, ScheduleItem, Window};
pub use summary::{cdf_csv, summarize, LatencyStats, Summary};
pub use trace::{schedule_csv, trace_csv, Sample, SimTrace};
