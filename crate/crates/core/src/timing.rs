//! Airtime of PHY/MAC events: frames, A-MPDU exchanges, guard times and the
//! beacon header interval.

use crate::error::{Error, Result};
use crate::time::{Time, PS_PER_S, PS_PER_US};

/// PHY and MAC constants for the single-carrier PHY. Defaults are MCS 12.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhyTimingProfile {
    pub chip_duration: Time,
    /// Net MAC data rate in bit/s. Independent of `chip_duration`.
    pub data_rate_bps: u64,
    /// Preamble plus PHY header.
    pub phy_overhead_chips: u64,
    pub sifs: Time,
    pub backoff_slot: Time,
    pub air_propagation: Time,
    /// One beacon frame on one sector.
    pub bf_airtime: Time,
    pub abft_slot_airtime: Time,
    pub grant_airtime: Time,
    pub block_ack_bytes: u64,
    pub mpdu_mac_bytes: u64,
    pub mpdu_app_bytes: u64,
    pub max_mpdus_per_ampdu: u32,
    pub clock_drift_ppm: u32,
    /// Extra BF airtime per beacon for each allocation in the Extended Schedule.
    pub extended_schedule_bf_penalty: Time,
    /// Worst-case sensing plus backoff between two TXOPs in a CBAP.
    pub cbap_sense_backoff: Time,
}

impl Default for PhyTimingProfile {
    fn default() -> Self {
        Self {
            chip_duration: Time::from_ps(570),
            data_rate_bps: 4_620_000_000,
            phy_overhead_chips: 7552 + 1024,
            sifs: Time::from_us(3),
            backoff_slot: Time::from_us(5),
            air_propagation: Time::from_tenth_us(1),
            bf_airtime: Time::from_us(33),
            abft_slot_airtime: Time::from_us(173),
            grant_airtime: Time::from_tenth_us(198),
            block_ack_bytes: 32,
            mpdu_mac_bytes: 7950,
            mpdu_app_bytes: 7884,
            max_mpdus_per_ampdu: 32,
            clock_drift_ppm: 20,
            extended_schedule_bf_penalty: Time::from_us(5),
            cbap_sense_backoff: Time::from_us(23),
        }
    }
}

impl PhyTimingProfile {
    pub fn validate(&self) -> Result<()> {
        let durations = [
            ("chip_duration", self.chip_duration),
            ("sifs", self.sifs),
            ("backoff_slot", self.backoff_slot),
            ("air_propagation", self.air_propagation),
            ("bf_airtime", self.bf_airtime),
            ("abft_slot_airtime", self.abft_slot_airtime),
            ("grant_airtime", self.grant_airtime),
            (
                "extended_schedule_bf_penalty",
                self.extended_schedule_bf_penalty,
            ),
            ("cbap_sense_backoff", self.cbap_sense_backoff),
        ];
        if let Some((name, _)) = durations.iter().find(|(_, t)| !t.is_positive()) {
            return Err(Error::InvalidProfile(format!("{name} must be positive")));
        }
        if self.data_rate_bps == 0 {
            return Err(Error::InvalidProfile(
                "data_rate_bps must be positive".into(),
            ));
        }
        if self.mpdu_app_bytes >= self.mpdu_mac_bytes {
            return Err(Error::InvalidProfile(
                "mpdu_app_bytes must be smaller than mpdu_mac_bytes".into(),
            ));
        }
        if self.max_mpdus_per_ampdu == 0 {
            return Err(Error::InvalidProfile(
                "max_mpdus_per_ampdu must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// MAC header and transport overhead carried by every MPDU.
    pub fn mpdu_header_bytes(&self) -> u64 {
        self.mpdu_mac_bytes - self.mpdu_app_bytes
    }

    pub fn mpdu_duration(&self) -> Time {
        mac_payload_duration(self.mpdu_mac_bytes, self)
    }

    pub fn block_ack_duration(&self) -> Time {
        mac_payload_duration(self.block_ack_bytes, self)
    }

    /// Airtime of an exchange following the data: SIFS, PHY overhead, Block ACK, SIFS.
    pub fn ack_tail(&self) -> Time {
        self.sifs * 2 + phy_overhead_duration(self) + self.block_ack_duration()
    }

    /// Duration of a full A-MPDU exchange.
    pub fn t_aggr(&self) -> Time {
        ampdu_duration(self.max_mpdus_per_ampdu, self).expect("full A-MPDU is in range")
    }
}

/// Serialization time of `bytes` at the profile's data rate, rounded up to the picosecond.
pub fn mac_payload_duration(bytes: u64, profile: &PhyTimingProfile) -> Time {
    let numer = bytes as i128 * 8 * PS_PER_S as i128;
    let rate = profile.data_rate_bps as i128;
    Time::from_ps(((numer + rate - 1) / rate) as i64)
}

pub fn phy_overhead_duration(profile: &PhyTimingProfile) -> Time {
    profile.chip_duration * profile.phy_overhead_chips as i64
}

/// PHY overhead, `k` MPDUs, SIFS, PHY overhead, Block ACK, SIFS.
pub fn ampdu_duration(k: u32, profile: &PhyTimingProfile) -> Result<Time> {
    if k == 0 || k > profile.max_mpdus_per_ampdu {
        return Err(Error::MpduCountOutOfRange {
            k,
            max: profile.max_mpdus_per_ampdu,
        });
    }
    Ok(phy_overhead_duration(profile) + profile.mpdu_duration() * k as i64 + profile.ack_tail())
}

/// Airtime of the data part (PHY overhead plus MPDUs) for MPDUs of the given MAC sizes.
pub fn ampdu_data_duration(mpdu_mac_bytes: &[u64], profile: &PhyTimingProfile) -> Time {
    phy_overhead_duration(profile)
        + mpdu_mac_bytes
            .iter()
            .map(|&b| mac_payload_duration(b, profile))
            .sum()
}

/// Minimum guard time between two adjacent allocations, in whole microseconds.
///
/// `d_prev`/`d_next` are the times since the last synchronisation of each
/// side (the BI length for pseudo-static allocations). With `one_sided` the
/// preceding allocation's drift term is dropped.
pub fn guard_time(
    prev_ps: bool,
    next_ps: bool,
    d_prev: Time,
    d_next: Time,
    profile: &PhyTimingProfile,
    one_sided: bool,
) -> Time {
    let weight = |ps: bool| if ps { 5i128 } else { 1 };
    let drift = profile.clock_drift_ppm as i128;
    let prev = if one_sided {
        0
    } else {
        weight(prev_ps) * drift * d_prev.as_ps() as i128
    };
    let next = weight(next_ps) * drift * d_next.as_ps() as i128;
    // drift terms carry a factor of 10^6 (ppm); scale the fixed terms to match
    let fixed = (profile.sifs + profile.air_propagation).as_ps() as i128 * 1_000_000;
    let total = prev + next + fixed;
    let unit = PS_PER_US as i128 * 1_000_000;
    let us = (total + unit - 1).div_euclid(unit);
    Time::from_us(us as i64)
}

/// Tag of an allocation in the Extended Schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationTag {
    CbapOnly,
    Cbap,
    Sp,
    DynSpGrant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AllocationKind {
    tag: AllocationTag,
    pseudo_static: bool,
}

impl AllocationKind {
    pub fn new(tag: AllocationTag, pseudo_static: bool) -> Result<Self> {
        if tag == AllocationTag::CbapOnly && !pseudo_static {
            return Err(Error::InvalidScenario(
                "a CBAP-only allocation is always pseudo-static".into(),
            ));
        }
        Ok(Self { tag, pseudo_static })
    }

    pub fn tag(&self) -> AllocationTag {
        self.tag
    }

    pub fn pseudo_static(&self) -> bool {
        self.pseudo_static
    }
}

/// Beacon header interval layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BhiConfig {
    pub sectors: u32,
    /// Beacon frames sent per BHI.
    pub bti_sector_rotation: u32,
    pub abft_slots: u32,
    pub ati_enabled: bool,
    pub ifs_overhead: Time,
}

impl BhiConfig {
    /// Sectors rotated so each one sees a beacon at least every 4 BIs.
    pub fn pseudo_static(sectors: u32) -> Self {
        Self {
            sectors,
            bti_sector_rotation: sectors.div_ceil(4).max(1),
            abft_slots: 1,
            ati_enabled: false,
            ifs_overhead: Time::from_us(10),
        }
    }

    /// A beacon on every sector in every BI.
    pub fn non_pseudo_static(sectors: u32) -> Self {
        Self {
            sectors,
            bti_sector_rotation: sectors,
            abft_slots: 1,
            ati_enabled: false,
            ifs_overhead: Time::from_us(16),
        }
    }

    pub fn for_mode(pseudo_static: bool, sectors: u32) -> Self {
        if pseudo_static {
            Self::pseudo_static(sectors)
        } else {
            Self::non_pseudo_static(sectors)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=64).contains(&self.sectors) {
            return Err(Error::InvalidBhi(format!(
                "sectors {} outside 1..=64",
                self.sectors
            )));
        }
        if !(1..=8).contains(&self.abft_slots) {
            return Err(Error::InvalidBhi(format!(
                "abft_slots {} outside 1..=8",
                self.abft_slots
            )));
        }
        if !(1..=self.sectors).contains(&self.bti_sector_rotation) {
            return Err(Error::InvalidBhi(format!(
                "bti_sector_rotation {} outside 1..={}",
                self.bti_sector_rotation, self.sectors
            )));
        }
        if self.ati_enabled {
            return Err(Error::InvalidBhi(
                "the ATI is not modeled and must stay disabled".into(),
            ));
        }
        Ok(())
    }
}

pub fn bhi_duration(cfg: &BhiConfig, num_allocations: u32, profile: &PhyTimingProfile) -> Time {
    let bfs = cfg.bti_sector_rotation as i64;
    profile.bf_airtime * bfs
        + profile.abft_slot_airtime * cfg.abft_slots as i64
        + cfg.ifs_overhead
        + profile.extended_schedule_bf_penalty * (bfs * num_allocations as i64)
}
