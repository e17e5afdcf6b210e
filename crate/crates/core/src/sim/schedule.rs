//! BI blueprints and the concrete timeline of BHIs and transmission windows.

use crate::error::{Error, Result};
use crate::latency::{latency_blocks, ChannelAccessMethod, Coordination, LatencyBlocks, Scenario};
use crate::time::Time;
use crate::timing::{bhi_duration, AllocationTag, BhiConfig, PhyTimingProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemKind {
    Bhi,
    Guard,
    /// `owner` is the HMD an SP belongs to; shared allocations have none.
    Allocation {
        tag: AllocationTag,
        owner: Option<u32>,
    },
}

/// One item of a BI blueprint, relative to the BI start.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScheduleItem {
    pub offset: Time,
    pub duration: Time,
    pub kind: ItemKind,
}

impl ScheduleItem {
    pub fn end(&self) -> Time {
        self.offset + self.duration
    }
}

/// The repeating layout of one BI.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiSchedule {
    pub bi_length: Time,
    pub bhi: Time,
    pub blocks: LatencyBlocks,
    /// VF block length, floored to the picosecond.
    pub vf_block: Time,
    pub items: Vec<ScheduleItem>,
    /// How far the SP pattern moves against the BI grid from one BI to the
    /// next; zero when the BI equals the VF interval.
    pub sp_phase_shift: Time,
}

/// A window in which the AP may transmit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub start: Time,
    pub end: Time,
    pub tag: AllocationTag,
    pub owner: Option<u32>,
}

/// Blueprint of a BI of length `s.effective_bi_length()`. SPs are laid out
/// back to back after the BHI, one VF block each, separated by guards.
pub fn build_bi_schedule(
    s: &Scenario,
    cfg: &BhiConfig,
    profile: &PhyTimingProfile,
) -> Result<BiSchedule> {
    s.validate()?;
    cfg.validate()?;
    let bi_length = s.effective_bi_length();
    let blocks = latency_blocks(s, profile, cfg);
    let bhi = bhi_duration(cfg, s.method.allocations(s.n_hmds), profile);
    let n = s.n_hmds as i64;
    let interval = s.refresh.interval_floor();
    let gaps = blocks.inter_vf * (n - 1);
    let spare = interval - blocks.inter_bi - gaps;
    if !spare.is_positive() {
        return Err(Error::ScheduleOverflow {
            needed: blocks.inter_bi + gaps,
            bi_length: interval,
        });
    }
    let vf_block = Time::from_ps(spare.as_ps() / n);

    let mut items = vec![ScheduleItem {
        offset: Time::ZERO,
        duration: bhi,
        kind: ItemKind::Bhi,
    }];
    let mut cursor = bhi;
    let tag = s.method.allocation_kind().tag();
    match s.method {
        ChannelAccessMethod::NpsSp => {
            for i in 0..s.n_hmds {
                if i > 0 {
                    items.push(ScheduleItem {
                        offset: cursor,
                        duration: blocks.inter_vf,
                        kind: ItemKind::Guard,
                    });
                    cursor += blocks.inter_vf;
                }
                items.push(ScheduleItem {
                    offset: cursor,
                    duration: vf_block,
                    kind: ItemKind::Allocation {
                        tag,
                        owner: Some(i),
                    },
                });
                cursor += vf_block;
            }
        }
        _ => {
            if blocks.leading_guard > Time::ZERO {
                items.push(ScheduleItem {
                    offset: cursor,
                    duration: blocks.leading_guard,
                    kind: ItemKind::Guard,
                });
                cursor += blocks.leading_guard;
            }
            items.push(ScheduleItem {
                offset: cursor,
                duration: bi_length - cursor,
                kind: ItemKind::Allocation { tag, owner: None },
            });
            cursor = bi_length;
        }
    }
    if cursor > bi_length {
        return Err(Error::ScheduleOverflow {
            needed: cursor,
            bi_length,
        });
    }
    let sp_phase_shift = Time::from_ps(bi_length.as_ps().rem_euclid(interval.as_ps()));
    Ok(BiSchedule {
        bi_length,
        bhi,
        blocks,
        vf_block,
        items,
        sp_phase_shift,
    })
}

impl BiSchedule {
    pub fn bhi_start(&self, k: i64) -> Time {
        self.bi_length * k
    }

    /// Allocation windows of BI `k` taken straight from the blueprint.
    pub fn blueprint_windows(&self, k: i64) -> impl Iterator<Item = Window> + '_ {
        let base = self.bhi_start(k);
        self.items.iter().filter_map(move |item| match item.kind {
            ItemKind::Allocation { tag, owner } => Some(Window {
                start: base + item.offset,
                end: base + item.end(),
                tag,
                owner,
            }),
            _ => None,
        })
    }
}

/// The whole timeline up to `horizon`: BHI periods and transmission windows,
/// both sorted and non-overlapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timeline {
    pub bhis: Vec<(Time, Time)>,
    pub windows: Vec<Window>,
}

/// Lays out BHIs and windows. With video coordination SPs follow the VF
/// blocks instead of the BI grid: block `i` of interval `k` opens when its VF
/// is generated (or one guard after the previous SP), and a BHI landing in it
/// slices it in two, the remainder resuming right after the BHI.
pub fn build_timeline(
    s: &Scenario,
    schedule: &BiSchedule,
    vf_times: &dyn Fn(i64, u32) -> Time,
    horizon: Time,
) -> Timeline {
    let bi_count = (horizon.as_ps() + schedule.bi_length.as_ps() - 1) / schedule.bi_length.as_ps();
    let bhis: Vec<(Time, Time)> = (0..bi_count)
        .map(|k| {
            let start = schedule.bhi_start(k);
            (start, start + schedule.bhi)
        })
        .collect();

    let video_sp = s.method == ChannelAccessMethod::NpsSp && s.coordination == Coordination::Video;
    let windows = if !video_sp {
        (0..bi_count)
            .flat_map(|k| schedule.blueprint_windows(k))
            .collect()
    } else {
        let tag = s.method.allocation_kind().tag();
        let mut windows = Vec::new();
        let mut prev_end: Option<Time> = None;
        let mut bhi_idx = 0;
        'outer: for k in 0.. {
            for i in 0..s.n_hmds {
                let nominal = vf_times(k, i);
                if nominal >= horizon {
                    break 'outer;
                }
                let mut cursor = match prev_end {
                    Some(end) => nominal.max(end + schedule.blocks.inter_vf),
                    None => nominal,
                };
                let mut remaining = schedule.vf_block;
                while remaining.is_positive() {
                    while bhi_idx < bhis.len() && bhis[bhi_idx].1 <= cursor {
                        bhi_idx += 1;
                    }
                    let next_bhi = bhis.get(bhi_idx).copied().unwrap_or((Time::MAX, Time::MAX));
                    if cursor >= next_bhi.0 {
                        cursor = next_bhi.1;
                        continue;
                    }
                    let end = (cursor + remaining).min(next_bhi.0);
                    windows.push(Window {
                        start: cursor,
                        end,
                        tag,
                        owner: Some(i),
                    });
                    remaining -= end - cursor;
                    cursor = end;
                }
                prev_end = Some(cursor);
            }
        }
        windows
    };
    Timeline { bhis, windows }
}
