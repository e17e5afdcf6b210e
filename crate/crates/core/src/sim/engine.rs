//! The event loop: VF generation, per-method channel access and greedy
//! A-MPDU aggregation on a single shared medium.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::event::{EventKind, EventQueue, SimEvent, AP_SUBJECT};
use super::schedule::{build_bi_schedule, build_timeline, BiSchedule, Timeline, Window};
use super::trace::{verify_medium_exclusive, Sample, SimTrace};
use crate::capacity::{attainable_bitrate, CapacityPlan, PlanOptions};
use crate::error::{Error, Result};
use crate::latency::{ChannelAccessMethod, Coordination, RefreshRate, Scenario};
use crate::scalar::Exact;
use crate::time::Time;
use crate::timing::{ampdu_data_duration, phy_overhead_duration, PhyTimingProfile};

/// Beacon interval used for video-coordinated runs unless the scenario sets one.
pub const DEFAULT_VIDEO_BI: Time = Time::from_us(10_240);
/// A queue holding more than this many VF intervals of video is an overload.
pub const OVERLOAD_INTERVALS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VideoLoad {
    /// The capacity model's attainable bitrate for the simulated scenario.
    Auto,
    /// `Auto` scaled by a factor, e.g. 1.1 for a tightness check.
    AutoScaled(f64),
    BitsPerSecond(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackoffPolicy {
    /// 23 µs of sensing and backoff after every TXOP and a full slot of
    /// alignment before every access.
    #[default]
    WorstCase,
    /// AIFS plus a uniform draw of `0..=cw_min` slots; post-backoff arrivals
    /// align to the next slot boundary.
    RandomCw,
}

pub const RANDOM_CW_AIFS: Time = Time::from_us(13);
pub const RANDOM_CW_MIN_SLOTS: u32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub video_load: VideoLoad,
    /// VFs are generated during `[0, sim_duration)`; the run then drains.
    pub sim_duration: Time,
    pub seed: u64,
    pub bi_quantum: Time,
    pub backoff_policy: BackoffPolicy,
    /// Offset of the first VF block from each VF interval start (video coordination).
    pub vf_offset: Time,
    pub profile: PhyTimingProfile,
}

impl SimConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            video_load: VideoLoad::Auto,
            sim_duration: Time::from_ms(1000),
            seed: 0,
            bi_quantum: Time::from_us(1024),
            backoff_policy: BackoffPolicy::default(),
            vf_offset: Time::ZERO,
            profile: PhyTimingProfile::default(),
        }
    }
}

/// Everything fixed before the first event: the scenario actually simulated
/// (BI-coordinated runs move the refresh rate onto the BI grid), its plan and
/// the VF size.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSetup {
    pub scenario: Scenario,
    pub plan: CapacityPlan<Exact>,
    pub schedule: BiSchedule,
    pub vf_bytes: u64,
    pub interval_count: i64,
    pub horizon: Time,
}

impl SimSetup {
    pub fn bitrate_bps(&self) -> f64 {
        self.vf_bytes as f64 * 8.0 * self.scenario.refresh.as_f64()
    }

    /// Generation time of VF `k` of HMD `i`.
    pub fn vf_time(&self, k: i64, i: u32, vf_offset: Time) -> Time {
        let blocks = &self.schedule.blocks;
        let stride = self.schedule.vf_block + blocks.inter_vf;
        match self.scenario.coordination {
            Coordination::Bi => self.schedule.bhi_start(k) + blocks.inter_bi + stride * i as i64,
            Coordination::Video => {
                self.scenario.refresh.interval_start(k) + vf_offset + stride * i as i64
            }
        }
    }
}

fn quantize(t: Time, quantum: Time) -> Result<Time> {
    let q = Time::from_ps(t.as_ps() / quantum.as_ps() * quantum.as_ps());
    if !q.is_positive() {
        return Err(Error::InvalidSimConfig(format!(
            "BI of {t} is shorter than one {quantum} quantum"
        )));
    }
    Ok(q)
}

/// Resolves the simulated scenario and AUTO bitrate.
pub fn prepare(cfg: &SimConfig) -> Result<SimSetup> {
    cfg.scenario.validate()?;
    cfg.profile.validate()?;
    if !cfg.bi_quantum.is_positive() {
        return Err(Error::InvalidSimConfig(
            "bi_quantum must be positive".into(),
        ));
    }
    let mut s = cfg.scenario.clone();
    match s.coordination {
        Coordination::Bi => {
            let bi = quantize(
                s.bi_length.unwrap_or_else(|| s.refresh.interval_floor()),
                cfg.bi_quantum,
            )?;
            s.bi_length = Some(bi);
            s.refresh = RefreshRate::from_interval(bi);
        }
        Coordination::Video => {
            s.bi_length = Some(quantize(
                s.bi_length.unwrap_or(DEFAULT_VIDEO_BI),
                cfg.bi_quantum,
            )?);
        }
    }
    let bi = s.effective_bi_length();
    if cfg.sim_duration < bi * 10 {
        return Err(Error::InvalidSimConfig(format!(
            "sim_duration {} is shorter than 10 BIs of {bi}",
            cfg.sim_duration
        )));
    }
    if cfg.vf_offset < Time::ZERO {
        return Err(Error::InvalidSimConfig(
            "vf_offset must not be negative".into(),
        ));
    }
    let cfg_bhi = s.bhi_config();
    let plan = attainable_bitrate::<Exact>(&s, &cfg.profile, &cfg_bhi, &PlanOptions::default())?;
    let schedule = build_bi_schedule(&s, &cfg_bhi, &cfg.profile)?;
    let vf_bytes = match cfg.video_load {
        VideoLoad::Auto => plan.capacity.vf_bytes,
        VideoLoad::AutoScaled(f) => {
            if !(f.is_finite() && f >= 0.0) {
                return Err(Error::InvalidSimConfig(format!(
                    "bitrate scale {f} must be finite and non-negative"
                )));
            }
            (plan.capacity.vf_bytes as f64 * f).round() as u64
        }
        VideoLoad::BitsPerSecond(bps) => {
            let r = s.refresh.as_ratio();
            (bps as i128 * *r.denom() as i128 / (8 * *r.numer() as i128)) as u64
        }
    };
    let mut interval_count = 0;
    while s.refresh.interval_start(interval_count) < cfg.sim_duration {
        interval_count += 1;
    }
    let drain = bi.max(s.refresh.interval_floor()) * OVERLOAD_INTERVALS as i64;
    Ok(SimSetup {
        horizon: cfg.sim_duration + drain,
        scenario: s,
        plan,
        schedule,
        vf_bytes,
        interval_count,
    })
}

#[derive(Debug, Clone, Copy)]
struct Mpdu {
    id: u64,
    generated: Time,
    app_bytes: u64,
}

#[derive(Debug)]
struct InFlight {
    hmd: u32,
    mpdus: Vec<Mpdu>,
    data_end: Time,
    ba_end: Time,
}

#[derive(Debug, Clone, Copy)]
enum Action {
    Transmit { hmd: u32 },
    Grant { hmd: u32 },
}

struct Engine<'a> {
    cfg: &'a SimConfig,
    setup: &'a SimSetup,
    profile: &'a PhyTimingProfile,
    method: ChannelAccessMethod,
    rng: ChaCha8Rng,
    events: EventQueue,
    timeline: Timeline,
    win_idx: usize,
    queues: Vec<VecDeque<Mpdu>>,
    queued_bytes: Vec<u64>,
    next_mpdu: Vec<u64>,
    busy: bool,
    medium_free: Time,
    in_flight: Option<InFlight>,
    wake_at: Option<Time>,
    // CBAP
    backoff_done: Time,
    txop_open: bool,
    // dynSP
    sp_owner: Option<u32>,
    guard_done: Time,
    generated: u64,
    trace: SimTrace,
}

/// Runs one simulation.
pub fn run(cfg: &SimConfig) -> Result<SimTrace> {
    let setup = prepare(cfg)?;
    run_prepared(cfg, &setup)
}

pub fn run_prepared(cfg: &SimConfig, setup: &SimSetup) -> Result<SimTrace> {
    let vf_time = |k: i64, i: u32| setup.vf_time(k, i, cfg.vf_offset);
    let timeline = build_timeline(&setup.scenario, &setup.schedule, &vf_time, setup.horizon);
    let n = setup.scenario.n_hmds as usize;
    let mut engine = Engine {
        cfg,
        setup,
        profile: &cfg.profile,
        method: setup.scenario.method,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        events: EventQueue::new(),
        timeline,
        win_idx: 0,
        queues: vec![VecDeque::new(); n],
        queued_bytes: vec![0; n],
        next_mpdu: vec![0; n],
        busy: false,
        medium_free: Time::ZERO,
        in_flight: None,
        wake_at: None,
        backoff_done: Time::ZERO,
        txop_open: false,
        sp_owner: None,
        guard_done: Time::ZERO,
        generated: 0,
        trace: SimTrace::default(),
    };
    engine.seed_events();
    engine.run()?;
    let trace = engine.finish();
    if let Err(overlap) = verify_medium_exclusive(&trace.schedule_log, cfg.profile.grant_airtime) {
        panic!("medium exclusivity violated: {overlap}");
    }
    Ok(trace)
}

impl Engine<'_> {
    fn seed_events(&mut self) {
        let horizon = self.setup.horizon;
        for &(start, end) in &self.timeline.bhis {
            self.events
                .push(SimEvent::new(start, EventKind::BhiStart, AP_SUBJECT));
            if end <= horizon {
                self.events
                    .push(SimEvent::new(end, EventKind::BhiEnd, AP_SUBJECT));
            }
        }
        for w in &self.timeline.windows {
            let subject = w.owner.unwrap_or(AP_SUBJECT);
            self.events
                .push(SimEvent::new(w.start, EventKind::AllocStart, subject));
            self.events
                .push(SimEvent::new(w.end, EventKind::AllocEnd, subject));
        }
        for k in 0..self.setup.interval_count {
            for i in 0..self.setup.scenario.n_hmds {
                let at = self.setup.vf_time(k, i, self.cfg.vf_offset);
                if at < self.cfg.sim_duration {
                    self.events
                        .push(SimEvent::new(at, EventKind::VfGenerated, i));
                }
            }
        }
    }

    fn run(&mut self) -> Result<()> {
        while let Some(ev) = self.events.pop() {
            if ev.at > self.setup.horizon {
                break;
            }
            let now = ev.at;
            self.handle(ev)?;
            if self.events.peek_time() != Some(now) {
                self.kick(now);
            }
        }
        Ok(())
    }

    fn log(&mut self, ev: SimEvent) {
        self.trace.schedule_log.push(ev);
    }

    fn handle(&mut self, ev: SimEvent) -> Result<()> {
        let now = ev.at;
        match ev.kind {
            EventKind::VfGenerated => {
                let hmd = ev.subject;
                let first = self.next_mpdu[hmd as usize];
                self.enqueue_vf(hmd, now)?;
                let last = self.next_mpdu[hmd as usize];
                self.log(ev.with_mpdus(first..last));
            }
            EventKind::BhiStart | EventKind::BhiEnd => self.log(ev),
            EventKind::AllocStart => {
                self.backoff_done = now;
                self.txop_open = false;
                self.guard_done = now;
                self.sp_owner = None;
                self.log(ev);
            }
            EventKind::AllocEnd => {
                self.txop_open = false;
                self.sp_owner = None;
                self.log(ev);
            }
            EventKind::BackoffExpired => self.log(ev),
            EventKind::Wake => {}
            EventKind::GrantTx => self.log(ev),
            EventKind::AmpduTxStart => {
                let f = self
                    .in_flight
                    .as_ref()
                    .expect("A-MPDU start without a pending exchange");
                let end = SimEvent::new(f.ba_end, EventKind::BlockAckDone, f.hmd)
                    .with_mpdus(ev.mpdus.clone());
                self.events.push(end);
                self.log(ev);
            }
            EventKind::BlockAckDone => {
                let f = self
                    .in_flight
                    .take()
                    .expect("Block ACK without an exchange");
                for m in &f.mpdus {
                    self.trace.samples.push(Sample {
                        hmd_id: f.hmd,
                        mpdu_id: m.id,
                        generated_at: m.generated,
                        delivered_at: f.data_end,
                    });
                }
                self.busy = false;
                self.medium_free = now;
                self.after_exchange(f.hmd, now);
                self.log(ev);
            }
        }
        Ok(())
    }

    fn enqueue_vf(&mut self, hmd: u32, now: Time) -> Result<()> {
        let h = hmd as usize;
        let mut remaining = self.setup.vf_bytes;
        let per = self.profile.mpdu_app_bytes;
        while remaining > 0 {
            let app_bytes = remaining.min(per);
            remaining -= app_bytes;
            self.queues[h].push_back(Mpdu {
                id: self.next_mpdu[h],
                generated: now,
                app_bytes,
            });
            self.next_mpdu[h] += 1;
            self.queued_bytes[h] += app_bytes;
            self.generated += 1;
        }
        let limit = self.setup.vf_bytes * OVERLOAD_INTERVALS as u64;
        if self.queued_bytes[h] > limit {
            return Err(Error::Overload {
                hmd,
                at: now,
                queued_bytes: self.queued_bytes[h],
                limit_intervals: OVERLOAD_INTERVALS,
            });
        }
        Ok(())
    }

    fn after_exchange(&mut self, hmd: u32, now: Time) {
        if self.method.is_cbap() {
            if self.queues.iter().any(|q| !q.is_empty()) {
                self.txop_open = true;
            } else {
                self.txop_open = false;
                self.backoff_done = now + self.draw_backoff();
                self.events.push(SimEvent::new(
                    self.backoff_done,
                    EventKind::BackoffExpired,
                    AP_SUBJECT,
                ));
            }
        } else if self.method.is_dyn_sp() && self.queues[hmd as usize].is_empty() {
            self.end_sp(now);
        }
    }

    fn end_sp(&mut self, at: Time) {
        if self.sp_owner.take().is_some() {
            self.guard_done = at + self.setup.schedule.blocks.inter_vf;
        }
    }

    fn draw_backoff(&mut self) -> Time {
        match self.cfg.backoff_policy {
            BackoffPolicy::WorstCase => self.profile.cbap_sense_backoff,
            BackoffPolicy::RandomCw => {
                let slots = self.rng.gen_range(0..=RANDOM_CW_MIN_SLOTS);
                RANDOM_CW_AIFS + self.profile.backoff_slot * slots as i64
            }
        }
    }

    fn current_window(&mut self, now: Time) -> Option<Window> {
        let windows = &self.timeline.windows;
        while self.win_idx < windows.len() && windows[self.win_idx].end <= now {
            self.win_idx += 1;
        }
        windows
            .get(self.win_idx)
            .copied()
            .filter(|w| w.start <= now)
    }

    /// HMD whose head-of-line MPDU is oldest, ties to the lower id.
    fn fifo_pick(&self) -> Option<u32> {
        self.queues
            .iter()
            .enumerate()
            .filter_map(|(i, q)| q.front().map(|m| (m.generated, i)))
            .min()
            .map(|(_, i)| i as u32)
    }

    fn next_batch(&self, hmd: u32) -> usize {
        self.queues[hmd as usize]
            .len()
            .min(self.profile.max_mpdus_per_ampdu as usize)
    }

    fn data_duration(&self, hmd: u32, count: usize) -> Time {
        let sizes: Vec<u64> = self.queues[hmd as usize]
            .iter()
            .take(count)
            .map(|m| m.app_bytes + self.profile.mpdu_header_bytes())
            .collect();
        ampdu_data_duration(&sizes, self.profile)
    }

    fn block_ack_ppdu(&self) -> Time {
        phy_overhead_duration(self.profile) + self.profile.block_ack_duration()
    }

    /// Medium occupancy of the next exchange for `hmd`: data, SIFS, Block ACK.
    fn exchange_busy(&self, hmd: u32) -> Time {
        self.data_duration(hmd, self.next_batch(hmd)) + self.profile.sifs + self.block_ack_ppdu()
    }

    fn cbap_access(&self, arrival: Time) -> Time {
        let slot = self.profile.backoff_slot;
        match self.cfg.backoff_policy {
            BackoffPolicy::WorstCase => arrival.max(self.backoff_done) + slot,
            BackoffPolicy::RandomCw => {
                if arrival <= self.backoff_done {
                    self.backoff_done
                } else {
                    let waited = (arrival - self.backoff_done).as_ps();
                    let slots = (waited + slot.as_ps() - 1) / slot.as_ps();
                    self.backoff_done + slot * slots
                }
            }
        }
    }

    fn next_action(&mut self, now: Time) -> Option<(Time, Action)> {
        let w = self.current_window(now)?;
        let floor = now.max(self.medium_free + self.profile.sifs).max(w.start);
        match self.method {
            ChannelAccessMethod::CbapOnly
            | ChannelAccessMethod::PsCbap
            | ChannelAccessMethod::NpsCbap => {
                let hmd = self.fifo_pick()?;
                let start = if self.txop_open {
                    floor
                } else {
                    let arrival = self.queues[hmd as usize].front()?.generated;
                    self.cbap_access(arrival).max(floor)
                };
                if start + self.exchange_busy(hmd) <= w.end {
                    Some((start, Action::Transmit { hmd }))
                } else {
                    self.txop_open = false;
                    None
                }
            }
            ChannelAccessMethod::NpsSp => {
                let hmd = w.owner.expect("SP windows have an owner");
                if self.queues[hmd as usize].is_empty() {
                    return None;
                }
                (floor + self.exchange_busy(hmd) <= w.end)
                    .then_some((floor, Action::Transmit { hmd }))
            }
            ChannelAccessMethod::PsDynSp | ChannelAccessMethod::NpsDynSp => {
                if let Some(hmd) = self.sp_owner {
                    if !self.queues[hmd as usize].is_empty()
                        && floor + self.exchange_busy(hmd) <= w.end
                    {
                        return Some((floor, Action::Transmit { hmd }));
                    }
                    self.end_sp(self.medium_free);
                }
                let hmd = self.fifo_pick()?;
                let start = floor.max(self.guard_done);
                let need = self.profile.grant_airtime + self.exchange_busy(hmd);
                (start + need <= w.end).then_some((start, Action::Grant { hmd }))
            }
        }
    }

    fn kick(&mut self, now: Time) {
        if self.busy {
            return;
        }
        let Some((start, action)) = self.next_action(now) else {
            return;
        };
        if start > now {
            if self.wake_at != Some(start) {
                self.wake_at = Some(start);
                self.events
                    .push(SimEvent::new(start, EventKind::Wake, AP_SUBJECT));
            }
            return;
        }
        match action {
            Action::Transmit { hmd } => {
                if self.method.is_cbap() {
                    self.txop_open = true;
                }
                self.start_exchange(hmd, now);
            }
            Action::Grant { hmd } => {
                self.log(SimEvent::new(now, EventKind::GrantTx, hmd));
                self.sp_owner = Some(hmd);
                self.start_exchange(hmd, now + self.profile.grant_airtime);
            }
        }
    }

    fn start_exchange(&mut self, hmd: u32, start: Time) {
        let count = self.next_batch(hmd);
        let data = self.data_duration(hmd, count);
        let q = &mut self.queues[hmd as usize];
        let mpdus: Vec<Mpdu> = q.drain(..count).collect();
        let bytes: u64 = mpdus.iter().map(|m| m.app_bytes).sum();
        self.queued_bytes[hmd as usize] -= bytes;
        let ids = mpdus[0].id..mpdus[count - 1].id + 1;
        let data_end = start + data;
        let ba_end = data_end + self.profile.sifs + self.block_ack_ppdu();
        self.in_flight = Some(InFlight {
            hmd,
            mpdus,
            data_end,
            ba_end,
        });
        self.busy = true;
        self.events
            .push(SimEvent::new(start, EventKind::AmpduTxStart, hmd).with_mpdus(ids));
    }

    fn finish(mut self) -> SimTrace {
        let queued: usize = self.queues.iter().map(|q| q.len()).sum();
        let in_flight = self.in_flight.as_ref().map_or(0, |f| f.mpdus.len());
        self.trace.dropped = (queued + in_flight) as u64;
        self.trace.generated = self.generated;
        self.trace
    }
}
