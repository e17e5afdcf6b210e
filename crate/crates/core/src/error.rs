use thiserror::Error;

use crate::time::Time;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid BHI configuration: {0}")]
    InvalidBhi(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("A-MPDU of {k} MPDUs is outside 1..={max}")]
    MpduCountOutOfRange { k: u32, max: u32 },

    #[error("infeasible: {budget}")]
    Infeasible { budget: String },

    #[error("schedule overflow: {needed} of allocations and guards exceed the {bi_length} beacon interval")]
    ScheduleOverflow { needed: Time, bi_length: Time },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),

    #[error("overload: HMD {hmd} has {queued_bytes} bytes queued at {at}, more than {limit_intervals} VF intervals of video")]
    Overload {
        hmd: u32,
        at: Time,
        queued_bytes: u64,
        limit_intervals: u32,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
