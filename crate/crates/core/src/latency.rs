//! Latency blocks per channel access method.
//!
//! Every VF interval loses time to three kinds of latency: one interBI block
//! (BHI plus anything before the first allocation can be used), interVF blocks
//! between consecutive VF transmissions, and the access latency in front of
//! each transmission.
//!
//! Conventions: the pseudo-static BHI base is 249 µs for 8 sectors, the CBAP
//! slot wait is counted in interVF (23 + 5 µs) as well as in access, and a
//! CBAP-only allocation is preceded by one two-sided guard. These reproduce
//! the VF block lengths at 120 Hz to three decimals.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::time::{Time, PS_PER_S};
use crate::timing::{
    bhi_duration, guard_time, AllocationKind, AllocationTag, BhiConfig, PhyTimingProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ChannelAccessMethod {
    CbapOnly,
    PsCbap,
    NpsCbap,
    /// Scheduled SPs have to move every BI, so they are never pseudo-static.
    NpsSp,
    PsDynSp,
    NpsDynSp,
}

impl ChannelAccessMethod {
    pub const ALL: [ChannelAccessMethod; 6] = [
        Self::CbapOnly,
        Self::PsCbap,
        Self::NpsCbap,
        Self::NpsSp,
        Self::PsDynSp,
        Self::NpsDynSp,
    ];

    pub fn pseudo_static(self) -> bool {
        matches!(self, Self::CbapOnly | Self::PsCbap | Self::PsDynSp)
    }

    pub fn allocation_kind(self) -> AllocationKind {
        let tag = match self {
            Self::CbapOnly => AllocationTag::CbapOnly,
            Self::PsCbap | Self::NpsCbap => AllocationTag::Cbap,
            Self::NpsSp => AllocationTag::Sp,
            Self::PsDynSp | Self::NpsDynSp => AllocationTag::DynSpGrant,
        };
        AllocationKind::new(tag, self.pseudo_static()).expect("method kinds are consistent")
    }

    /// Allocations announced in the Extended Schedule for `n_hmds` headsets.
    pub fn allocations(self, n_hmds: u32) -> u32 {
        match self {
            Self::CbapOnly => 0,
            Self::NpsSp => n_hmds,
            _ => 1,
        }
    }

    pub fn is_cbap(self) -> bool {
        matches!(self, Self::CbapOnly | Self::PsCbap | Self::NpsCbap)
    }

    pub fn is_dyn_sp(self) -> bool {
        matches!(self, Self::PsDynSp | Self::NpsDynSp)
    }

    /// Table row label.
    pub fn label(self) -> &'static str {
        match self {
            Self::CbapOnly => "CBAP-only",
            Self::PsCbap => "PS CBAP",
            Self::NpsCbap => "NPS CBAP",
            Self::NpsSp => "NPS SP",
            Self::PsDynSp => "PS dynSP",
            Self::NpsDynSp => "NPS dynSP",
        }
    }

    /// Command-line and config-file name.
    pub fn name(self) -> &'static str {
        match self {
            Self::CbapOnly => "cbap-only",
            Self::PsCbap => "ps-cbap",
            Self::NpsCbap => "nps-cbap",
            Self::NpsSp => "nps-sp",
            Self::PsDynSp => "ps-dynsp",
            Self::NpsDynSp => "nps-dynsp",
        }
    }
}

impl fmt::Display for ChannelAccessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ChannelAccessMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ' '], "-");
        Self::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|m| m.name()).collect();
                format!(
                    "unknown access method `{s}` (expected one of {})",
                    names.join(", ")
                )
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coordination {
    /// The content server knows the BI layout and never generates into a latency block.
    Bi,
    /// VF blocks are spread evenly; a BHI may slice a block in two.
    Video,
}

impl Coordination {
    pub fn name(self) -> &'static str {
        match self {
            Self::Bi => "bi",
            Self::Video => "video",
        }
    }
}

impl fmt::Display for Coordination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Coordination {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bi" => Ok(Self::Bi),
            "video" | "vid" => Ok(Self::Video),
            other => Err(format!(
                "unknown coordination `{other}` (expected bi or video)"
            )),
        }
    }
}

/// Refresh rate in Hz, kept exact so that 1/r is an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RefreshRate(Ratio<i64>);

impl RefreshRate {
    pub fn hz(hz: i64) -> Self {
        Self(Ratio::from_integer(hz))
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self(Ratio::new(num, den))
    }

    /// The refresh rate whose VF interval is exactly `interval`.
    pub fn from_interval(interval: Time) -> Self {
        Self(Ratio::new(PS_PER_S, interval.as_ps()))
    }

    pub fn as_ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn is_positive(&self) -> bool {
        *self.0.numer() > 0 && *self.0.denom() > 0
    }

    pub fn as_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn value<S: Scalar>(&self) -> S {
        S::ratio(*self.0.numer(), *self.0.denom())
    }

    /// VF interval 1/r in microseconds.
    pub fn interval_us<S: Scalar>(&self) -> S {
        S::from_int(1_000_000) * S::from_int(*self.0.denom()) / S::from_int(*self.0.numer())
    }

    /// Start of VF interval `k`, floored to the picosecond.
    pub fn interval_start(&self, k: i64) -> Time {
        let num = PS_PER_S as i128 * *self.0.denom() as i128 * k as i128;
        Time::from_ps(num.div_euclid(*self.0.numer() as i128) as i64)
    }

    /// The VF interval floored to the picosecond.
    pub fn interval_floor(&self) -> Time {
        self.interval_start(1)
    }
}

impl fmt::Display for RefreshRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.0.denom() == 1 {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl FromStr for RefreshRate {
    type Err = String;

    /// Accepts integers, decimals (`122.0703125`) and fractions (`15625/128`).
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim().trim_end_matches("Hz").trim();
        let bad = || format!("malformed refresh rate `{s}`");
        let ratio = if let Some((n, d)) = s.split_once('/') {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n, d)
        } else {
            let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
            if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let den = 10i64.pow(frac.len() as u32);
            let digits = format!("{whole}{frac}");
            let num: i64 = digits.parse().map_err(|_| bad())?;
            Ratio::new(num, den)
        };
        Ok(Self(ratio))
    }
}

/// One planning question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub method: ChannelAccessMethod,
    pub n_hmds: u32,
    pub refresh: RefreshRate,
    pub l_max: Time,
    pub sectors: u32,
    /// Defaults to the VF interval when unset.
    pub bi_length: Option<Time>,
    pub coordination: Coordination,
}

impl Scenario {
    pub fn new(
        method: ChannelAccessMethod,
        n_hmds: u32,
        l_max: Time,
        coordination: Coordination,
    ) -> Self {
        Self {
            method,
            n_hmds,
            refresh: RefreshRate::hz(120),
            l_max,
            sectors: 8,
            bi_length: None,
            coordination,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_hmds == 0 {
            return Err(Error::InvalidScenario(
                "at least one HMD is required".into(),
            ));
        }
        if !self.refresh.is_positive() {
            return Err(Error::InvalidScenario(
                "refresh rate must be positive".into(),
            ));
        }
        if !self.l_max.is_positive() {
            return Err(Error::InvalidScenario("l_max must be positive".into()));
        }
        if !(1..=64).contains(&self.sectors) {
            return Err(Error::InvalidScenario(format!(
                "sectors {} outside 1..=64",
                self.sectors
            )));
        }
        if let Some(bi) = self.bi_length {
            if !bi.is_positive() {
                return Err(Error::InvalidScenario("BI length must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn effective_bi_length(&self) -> Time {
        self.bi_length
            .unwrap_or_else(|| self.refresh.interval_floor())
    }

    /// BHI layout implied by the method's pseudo-static flag.
    pub fn bhi_config(&self) -> BhiConfig {
        BhiConfig::for_mode(self.method.pseudo_static(), self.sectors)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LatencyBlocks {
    pub inter_bi: Time,
    pub inter_vf: Time,
    pub access: Time,
    /// BHI part of `inter_bi`.
    pub bhi: Time,
    /// Guard part of `inter_bi`.
    pub leading_guard: Time,
}

impl LatencyBlocks {
    pub const ZERO: LatencyBlocks = LatencyBlocks {
        inter_bi: Time::ZERO,
        inter_vf: Time::ZERO,
        access: Time::ZERO,
        bhi: Time::ZERO,
        leading_guard: Time::ZERO,
    };
}

/// Guard between two allocations of the method's kind, with worst-case drift
/// accumulated over a whole BI on both sides.
pub fn allocation_guard(
    method: ChannelAccessMethod,
    bi_length: Time,
    profile: &PhyTimingProfile,
) -> Time {
    let ps = method.pseudo_static();
    guard_time(ps, ps, bi_length, bi_length, profile, false)
}

pub fn latency_blocks(s: &Scenario, profile: &PhyTimingProfile, cfg: &BhiConfig) -> LatencyBlocks {
    let bi = s.effective_bi_length();
    let bhi = bhi_duration(cfg, s.method.allocations(s.n_hmds), profile);
    let guard = allocation_guard(s.method, bi, profile);
    let cbap_inter_vf = profile.cbap_sense_backoff + profile.backoff_slot;
    let (leading_guard, inter_vf, access) = match s.method {
        ChannelAccessMethod::CbapOnly => (guard, cbap_inter_vf, profile.backoff_slot),
        ChannelAccessMethod::PsCbap | ChannelAccessMethod::NpsCbap => {
            (Time::ZERO, cbap_inter_vf, profile.backoff_slot)
        }
        ChannelAccessMethod::NpsSp => (Time::ZERO, guard, Time::ZERO),
        ChannelAccessMethod::PsDynSp | ChannelAccessMethod::NpsDynSp => {
            (Time::ZERO, guard, profile.grant_airtime)
        }
    };
    LatencyBlocks {
        inter_bi: bhi + leading_guard,
        inter_vf,
        access,
        bhi,
        leading_guard,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ChannelAccessMethod::*;

    fn blocks(method: ChannelAccessMethod, n: u32) -> LatencyBlocks {
        let s = Scenario::new(method, n, Time::from_ms(1), Coordination::Bi);
        latency_blocks(&s, &PhyTimingProfile::default(), &s.bhi_config())
    }

    fn us(v: i64) -> Time {
        Time::from_us(v)
    }

    #[test]
    fn reconciled_blocks_at_120_hz() {
        let b = blocks(NpsSp, 8);
        assert_eq!(
            (b.inter_bi, b.inter_vf, b.access),
            (us(773), us(4), Time::ZERO)
        );
        let b = blocks(PsDynSp, 1);
        assert_eq!(
            (b.inter_bi, b.inter_vf, b.access),
            (us(259), us(5), Time::from_tenth_us(198))
        );
        let b = blocks(CbapOnly, 1);
        assert_eq!((b.inter_bi, b.inter_vf, b.access), (us(254), us(28), us(5)));
        assert_eq!((b.bhi, b.leading_guard), (us(249), us(5)));
        assert_eq!(blocks(PsCbap, 4).inter_bi, us(259));
        assert_eq!(blocks(NpsCbap, 4).inter_bi, us(493));
        assert_eq!(blocks(NpsDynSp, 4).inter_bi, us(493));
        assert_eq!(blocks(NpsDynSp, 4).inter_vf, us(4));
    }

    #[test]
    fn access_by_mechanism() {
        let p = PhyTimingProfile::default();
        for m in ChannelAccessMethod::ALL {
            let b = blocks(m, 2);
            let expected = if m.is_cbap() {
                p.backoff_slot
            } else if m.is_dyn_sp() {
                p.grant_airtime
            } else {
                Time::ZERO
            };
            assert_eq!(b.access, expected, "{m}");
        }
    }

    #[test]
    fn inter_bi_monotone_and_ps_shorter() {
        for m in ChannelAccessMethod::ALL {
            for n in 1..16 {
                assert!(blocks(m, n + 1).inter_bi >= blocks(m, n).inter_bi);
                assert!(blocks(m, n).inter_bi >= blocks(m, n).inter_vf);
            }
        }
        let slope = blocks(NpsSp, 2).inter_bi - blocks(NpsSp, 1).inter_bi;
        for n in 1..16 {
            assert_eq!(
                blocks(NpsSp, n + 1).inter_bi - blocks(NpsSp, n).inter_bi,
                slope
            );
        }
        for n in [1, 2, 4, 8] {
            assert!(blocks(PsCbap, n).inter_bi < blocks(NpsCbap, n).inter_bi);
            assert!(blocks(PsDynSp, n).inter_bi < blocks(NpsDynSp, n).inter_bi);
        }
    }

    #[test]
    fn guards_grow_with_bi_length() {
        let mut s = Scenario::new(PsDynSp, 1, Time::from_ms(1), Coordination::Video);
        s.bi_length = Some(Time::from_us(10_240));
        let b = latency_blocks(&s, &PhyTimingProfile::default(), &s.bhi_config());
        assert_eq!(b.inter_vf, us(6));
    }

    #[test]
    fn scenario_validation() {
        let mut s = Scenario::new(CbapOnly, 0, Time::from_ms(1), Coordination::Bi);
        assert!(s.validate().is_err());
        s.n_hmds = 1;
        assert!(s.validate().is_ok());
        s.l_max = Time::ZERO;
        assert!(s.validate().is_err());
        s.l_max = Time::from_ms(1);
        s.sectors = 0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!("nps-sp".parse::<ChannelAccessMethod>().unwrap(), NpsSp);
        assert_eq!("PS_DYNSP".parse::<ChannelAccessMethod>().unwrap(), PsDynSp);
        assert!("sp".parse::<ChannelAccessMethod>().is_err());
        assert_eq!("vid".parse::<Coordination>().unwrap(), Coordination::Video);
        let r: RefreshRate = "122.0703125".parse().unwrap();
        assert_eq!(r, RefreshRate::from_interval(Time::from_us(8192)));
        assert_eq!(r.to_string(), "15625/128");
        assert_eq!("15625/128".parse::<RefreshRate>().unwrap(), r);
        assert_eq!(
            RefreshRate::hz(120).interval_floor(),
            Time::from_ps(8_333_333_333)
        );
        assert_eq!(
            RefreshRate::hz(120).interval_start(3),
            Time::from_ps(25_000_000_000)
        );
    }
}
