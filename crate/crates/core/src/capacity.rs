//! From latency blocks to VF block lengths, usable transmission windows,
//! A-MPDU counts and attainable video bitrate.

use crate::error::{Error, Result};
use crate::latency::{latency_blocks, Coordination, LatencyBlocks, RefreshRate, Scenario};
use crate::scalar::{max, min, Scalar};
use crate::time::Time;
use crate::timing::{phy_overhead_duration, BhiConfig, PhyTimingProfile};

/// Split of one VF block, in microseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct VfPartition<S> {
    pub v: S,
    pub v_pre: S,
    pub v_tx: S,
    pub v_buf: S,
    /// Worst-case window before and after a BHI that slices the block (video coordination).
    pub v_tx1: Option<S>,
    pub v_tx2: Option<S>,
    /// Set when the usable window was negative and clamped to zero.
    pub clamped: bool,
}

/// `(1/r - inter_bi - (n-1) inter_vf) / n`, all in microseconds.
pub fn vf_block_length<S: Scalar>(
    blocks: &LatencyBlocks,
    n: u32,
    refresh: RefreshRate,
) -> Result<S> {
    block_length_from(
        S::from_time(blocks.inter_bi),
        S::from_time(blocks.inter_vf),
        n,
        refresh.interval_us(),
    )
}

fn block_length_from<S: Scalar>(inter_bi: S, inter_vf: S, n: u32, interval: S) -> Result<S> {
    if n == 0 {
        return Err(Error::InvalidScenario(
            "at least one HMD is required".into(),
        ));
    }
    let gaps = S::from_int(n as i64 - 1) * inter_vf.clone();
    let available = interval.clone() - inter_bi.clone() - gaps.clone();
    if available <= S::zero() {
        return Err(Error::Infeasible {
            budget: format!(
                "VF interval {:.3} us leaves nothing for {n} VF blocks after interBI {:.3} us and {} interVF blocks totalling {:.3} us",
                interval.to_f64_lossy(),
                inter_bi.to_f64_lossy(),
                n - 1,
                gaps.to_f64_lossy(),
            ),
        });
    }
    Ok(available / S::from_int(n as i64))
}

pub fn partition_bi_coordinated<S: Scalar>(v: S, l_max: S, access: S) -> VfPartition<S> {
    let window = min(v.clone(), l_max.clone()) - access.clone();
    let clamped = window < S::zero();
    VfPartition {
        v_tx: max(S::zero(), window),
        v_buf: max(S::zero(), v.clone() - l_max),
        v,
        v_pre: access,
        v_tx1: None,
        v_tx2: None,
        clamped,
    }
}

/// Worst case when a BHI may land anywhere in the block: a pre-BHI fragment
/// just shorter than one full A-MPDU exchange is lost, or, when one non-full
/// A-MPDU suffices, the two fragments are equal.
pub fn partition_video_coordinated<S: Scalar>(
    v: S,
    l_max: S,
    inter_bi: S,
    access: S,
    t_aggr: S,
) -> VfPartition<S> {
    let two = S::from_int(2);
    let raw = min(v.clone(), l_max.clone()) - inter_bi - two.clone() * access.clone();
    let clamped = raw < S::zero();
    let sum = max(S::zero(), raw);
    let half = sum.clone() / two;
    let less_one = sum.clone() - t_aggr.clone();
    let (v_tx, v_tx1, v_tx2) = if half >= less_one {
        (half.clone(), half.clone(), half)
    } else {
        (less_one.clone(), t_aggr, less_one)
    };
    VfPartition {
        v_buf: max(S::zero(), v.clone() - l_max),
        v,
        v_pre: access,
        v_tx,
        v_tx1: Some(v_tx1),
        v_tx2: Some(v_tx2),
        clamped,
    }
}

/// Full and trailing A-MPDUs that fit a transmission window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct AmpduFit {
    pub full_ampdus: u64,
    pub tail_mpdus: u32,
}

impl AmpduFit {
    pub fn total_mpdus(&self, profile: &PhyTimingProfile) -> u64 {
        self.full_ampdus * profile.max_mpdus_per_ampdu as u64 + self.tail_mpdus as u64
    }

    pub fn vf_bytes(&self, profile: &PhyTimingProfile) -> u64 {
        self.total_mpdus(profile) * profile.mpdu_app_bytes
    }
}

/// `a = floor((v_tx + 2 SIFS + t_PHY + t_BA) / t_aggr)`,
/// `b = floor((v_tx - a t_aggr - t_PHY) / t_MPDU)` clamped to one less than a full A-MPDU.
pub fn ampdu_capacity(v_tx: Time, profile: &PhyTimingProfile) -> AmpduFit {
    if v_tx < Time::ZERO {
        return AmpduFit::default();
    }
    let t_aggr = profile.t_aggr().as_ps() as i128;
    let t_phy = phy_overhead_duration(profile).as_ps() as i128;
    let t_mpdu = profile.mpdu_duration().as_ps() as i128;
    let credit = (profile.sifs * 2 + profile.block_ack_duration()).as_ps() as i128 + t_phy;
    let window = v_tx.as_ps() as i128;
    let full = (window + credit).div_euclid(t_aggr);
    let rest = window - full * t_aggr - t_phy;
    let tail = if rest < 0 { 0 } else { rest / t_mpdu };
    let tail = tail.min(profile.max_mpdus_per_ampdu as i128 - 1);
    AmpduFit {
        full_ampdus: full as u64,
        tail_mpdus: tail as u32,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityResult {
    pub full_ampdus: u64,
    pub tail_mpdus: u32,
    pub vf_bytes: u64,
    pub bitrate_bps: f64,
}

impl CapacityResult {
    pub fn new(fit: AmpduFit, profile: &PhyTimingProfile, refresh: RefreshRate) -> Self {
        let vf_bytes = fit.vf_bytes(profile);
        Self {
            full_ampdus: fit.full_ampdus,
            tail_mpdus: fit.tail_mpdus,
            vf_bytes,
            bitrate_bps: vf_bytes as f64 * 8.0 * refresh.as_f64(),
        }
    }

    pub fn mbit_per_s(&self) -> f64 {
        self.bitrate_bps / 1e6
    }

    pub fn mibit_per_s(&self) -> f64 {
        self.bitrate_bps / (1u64 << 20) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PlanOptions {
    /// Charge the interBI block in only one of the VF intervals per BI,
    /// interVF in the others. Off by default: planning is worst case.
    pub average_case: bool,
    /// Fixed deduction from every usable window, e.g. for RTS/CTS or uplink.
    pub per_vf_deduction: Time,
}

/// Everything computed for one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityPlan<S> {
    pub scenario: Scenario,
    pub blocks: LatencyBlocks,
    pub v: S,
    pub partition: VfPartition<S>,
    pub t_aggr: Time,
    /// Usable window after deductions, floored to the picosecond.
    pub v_tx: Time,
    pub capacity: CapacityResult,
}

impl<S: Scalar> CapacityPlan<S> {
    pub fn infeasible(&self) -> bool {
        self.partition.clamped || self.capacity.vf_bytes == 0
    }
}

pub fn attainable_bitrate<S: Scalar>(
    s: &Scenario,
    profile: &PhyTimingProfile,
    cfg: &BhiConfig,
    opts: &PlanOptions,
) -> Result<CapacityPlan<S>> {
    s.validate()?;
    profile.validate()?;
    cfg.validate()?;
    let blocks = latency_blocks(s, profile, cfg);
    let inter_bi = S::from_time(blocks.inter_bi);
    let inter_vf = S::from_time(blocks.inter_vf);
    let interval: S = s.refresh.interval_us();
    let charged_inter_bi = if opts.average_case {
        average_inter_bi(
            inter_bi.clone(),
            inter_vf.clone(),
            S::from_time(s.effective_bi_length()),
            interval.clone(),
        )
    } else {
        inter_bi.clone()
    };
    let v = block_length_from(charged_inter_bi, inter_vf, s.n_hmds, interval)?;
    let l_max = S::from_time(s.l_max);
    let access = S::from_time(blocks.access);
    let t_aggr = profile.t_aggr();
    let partition = match s.coordination {
        Coordination::Bi => partition_bi_coordinated(v.clone(), l_max, access),
        Coordination::Video => {
            partition_video_coordinated(v.clone(), l_max, inter_bi, access, S::from_time(t_aggr))
        }
    };
    let v_tx = partition
        .v_tx
        .floor_time()
        .saturating_sub(opts.per_vf_deduction);
    let capacity = CapacityResult::new(ampdu_capacity(v_tx, profile), profile, s.refresh);
    Ok(CapacityPlan {
        scenario: s.clone(),
        blocks,
        v,
        partition,
        t_aggr,
        v_tx,
        capacity,
    })
}

fn average_inter_bi<S: Scalar>(inter_bi: S, inter_vf: S, bi_length: S, interval: S) -> S {
    let per_bi = bi_length / interval;
    if per_bi <= S::one() {
        return inter_bi;
    }
    (inter_bi + (per_bi.clone() - S::one()) * inter_vf) / per_bi
}
