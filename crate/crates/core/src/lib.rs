//! Capacity planning and airtime simulation for IEEE 802.11ad links carrying
//! live multi-user VR video.
//!
//! The analytical layer ([`latency`], [`capacity`], [`tables`]) is generic
//! over a [`Scalar`]; the type aliases below fix the two common choices.
//! Durations are always integer picoseconds ([`Time`]).

pub mod capacity;
pub mod error;
pub mod latency;
pub mod scalar;
pub mod sim;
pub mod tables;
pub mod time;
pub mod timing;

pub use capacity::{
    ampdu_capacity, attainable_bitrate, partition_bi_coordinated, partition_video_coordinated,
    vf_block_length, AmpduFit, CapacityPlan, CapacityResult, PlanOptions, VfPartition,
};
pub use error::{Error, Result};
pub use latency::{
    latency_blocks, ChannelAccessMethod, Coordination, LatencyBlocks, RefreshRate, Scenario,
};
pub use scalar::{Exact, Scalar};
pub use time::Time;
pub use timing::{
    ampdu_duration, bhi_duration, guard_time, mac_payload_duration, phy_overhead_duration,
    AllocationKind, AllocationTag, BhiConfig, PhyTimingProfile,
};

pub type ExactPlan = CapacityPlan<Exact>;
pub type PlanF64 = CapacityPlan<f64>;
pub type PlanF32 = CapacityPlan<f32>;
pub type ExactVfPartition = VfPartition<Exact>;
pub type VfPartitionF64 = VfPartition<f64>;

/// Plans a scenario with exact arithmetic and the default profile and BHI layout.
pub fn plan(s: &Scenario) -> Result<ExactPlan> {
    attainable_bitrate(
        s,
        &PhyTimingProfile::default(),
        &s.bhi_config(),
        &PlanOptions::default(),
    )
}
