//! Integer picosecond time.
//!
//! Every duration in the crate is carried as a whole number of picoseconds.
//! Durations that do not terminate in decimal (63600 bits at 4.62 Gbit/s)
//! are rounded up to the next picosecond, so airtime is never understated.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub, SubAssign};
use std::str::FromStr;

use thiserror::Error;

pub const PS_PER_NS: i64 = 1_000;
pub const PS_PER_US: i64 = 1_000_000;
pub const PS_PER_MS: i64 = 1_000_000_000;
pub const PS_PER_S: i64 = 1_000_000_000_000;

/// A point in simulated time or a duration, in picoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Time(i64);

impl Time {
    pub const ZERO: Time = Time(0);
    pub const MAX: Time = Time(i64::MAX);

    pub const fn from_ps(ps: i64) -> Self {
        Time(ps)
    }

    pub const fn from_ns(ns: i64) -> Self {
        Time(ns * PS_PER_NS)
    }

    pub const fn from_us(us: i64) -> Self {
        Time(us * PS_PER_US)
    }

    pub const fn from_ms(ms: i64) -> Self {
        Time(ms * PS_PER_MS)
    }

    /// Tenths of a microsecond, for constants such as 19.8 µs or 0.1 µs.
    pub const fn from_tenth_us(tenths: i64) -> Self {
        Time(tenths * (PS_PER_US / 10))
    }

    pub const fn as_ps(self) -> i64 {
        self.0
    }

    pub fn as_us_f64(self) -> f64 {
        self.0 as f64 / PS_PER_US as f64
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / PS_PER_MS as f64
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn saturating_sub(self, rhs: Time) -> Time {
        Time(self.0.saturating_sub(rhs.0)).max(Time::ZERO)
    }

    /// Renders as nanoseconds with three decimals, exact for any picosecond count.
    pub fn display_ns(self) -> String {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        format!("{sign}{}.{:03}", abs / 1_000, abs % 1_000)
    }
}

impl Add for Time {
    type Output = Time;
    fn add(self, rhs: Time) -> Time {
        Time(self.0 + rhs.0)
    }
}

impl AddAssign for Time {
    fn add_assign(&mut self, rhs: Time) {
        self.0 += rhs.0;
    }
}

impl Sub for Time {
    type Output = Time;
    fn sub(self, rhs: Time) -> Time {
        Time(self.0 - rhs.0)
    }
}

impl SubAssign for Time {
    fn sub_assign(&mut self, rhs: Time) {
        self.0 -= rhs.0;
    }
}

impl Mul<i64> for Time {
    type Output = Time;
    fn mul(self, rhs: i64) -> Time {
        Time(self.0 * rhs)
    }
}

impl std::iter::Sum for Time {
    fn sum<I: Iterator<Item = Time>>(iter: I) -> Time {
        iter.fold(Time::ZERO, Add::add)
    }
}

/// Shortest exact rendering with a unit suffix, e.g. `8.192ms`, `19.8us`, `570ps`.
impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ps = self.0;
        if ps == 0 {
            return write!(f, "0us");
        }
        for (unit, scale) in [
            ("s", PS_PER_S),
            ("ms", PS_PER_MS),
            ("us", PS_PER_US),
            ("ns", PS_PER_NS),
        ] {
            if ps.unsigned_abs() >= scale as u64 {
                return write!(f, "{}{unit}", decimal(ps, scale));
            }
        }
        write!(f, "{ps}ps")
    }
}

fn decimal(value: i64, scale: i64) -> String {
    let sign = if value < 0 { "-" } else { "" };
    let abs = value.unsigned_abs();
    let scale = scale as u64;
    let whole = abs / scale;
    let frac = abs % scale;
    if frac == 0 {
        return format!("{sign}{whole}");
    }
    let width = scale.ilog10() as usize;
    let digits = format!("{frac:0width$}");
    format!("{sign}{whole}.{}", digits.trim_end_matches('0'))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseTimeError {
    #[error("missing unit suffix in `{0}` (expected ps, ns, us, ms or s)")]
    MissingUnit(String),
    #[error("malformed duration `{0}`")]
    Malformed(String),
    #[error("duration `{0}` is finer than one picosecond")]
    TooPrecise(String),
    #[error("duration `{0}` overflows")]
    Overflow(String),
}

impl FromStr for Time {
    type Err = ParseTimeError;

    /// Parses decimal durations with a unit suffix (`ps`, `ns`, `us`, `µs`, `ms`, `s`).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (number, scale) = [
            ("ps", 1),
            ("ns", PS_PER_NS),
            ("us", PS_PER_US),
            ("µs", PS_PER_US),
            ("ms", PS_PER_MS),
            ("s", PS_PER_S),
        ]
        .iter()
        .find_map(|(suffix, scale)| s.strip_suffix(suffix).map(|n| (n.trim(), *scale)))
        .ok_or_else(|| ParseTimeError::MissingUnit(s.to_string()))?;

        let (negative, number) = match number.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, number),
        };
        let (whole, frac) = number.split_once('.').unwrap_or((number, ""));
        if whole.is_empty() && frac.is_empty()
            || !whole.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
        {
            return Err(ParseTimeError::Malformed(s.to_string()));
        }
        let overflow = || ParseTimeError::Overflow(s.to_string());
        let whole: i64 = if whole.is_empty() {
            0
        } else {
            whole.parse().map_err(|_| overflow())?
        };
        let mut ps = whole.checked_mul(scale).ok_or_else(overflow)?;
        let frac = frac.trim_end_matches('0');
        if !frac.is_empty() {
            let places = frac.len() as u32;
            let denom = 10i128
                .checked_pow(places)
                .ok_or_else(|| ParseTimeError::TooPrecise(s.to_string()))?;
            let digits: i128 = frac
                .parse()
                .map_err(|_| ParseTimeError::TooPrecise(s.to_string()))?;
            let scaled = digits * scale as i128;
            if scaled % denom != 0 {
                return Err(ParseTimeError::TooPrecise(s.to_string()));
            }
            ps = ps
                .checked_add((scaled / denom) as i64)
                .ok_or_else(overflow)?;
        }
        Ok(Time(if negative { -ps } else { ps }))
    }
}
