//! Numeric abstraction for the analytical model.
//!
//! Block lengths, partitions and plans are evaluated in microseconds over any
//! [`Scalar`]: `f32`, `f64`, or the exact rational [`Exact`]. The exact type
//! makes the VF-interval identities hold without tolerance; the float types
//! are there for sweeps and plotting.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{FromPrimitive, Num};

use crate::time::{Time, PS_PER_US};

/// Exact rational scalar.
pub type Exact = Ratio<i128>;

pub trait Scalar: Num + PartialOrd + Clone + Debug + FromPrimitive + Send + Sync + 'static {
    /// Largest integer not greater than `self`, if representable.
    fn floor_i64(&self) -> Option<i64>;

    fn to_f64_lossy(&self) -> f64;

    fn from_int(n: i64) -> Self {
        Self::from_i64(n).expect("every scalar represents small integers")
    }

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_int(num) / Self::from_int(den)
    }

    /// A picosecond duration expressed in microseconds.
    fn from_time(t: Time) -> Self {
        Self::ratio(t.as_ps(), PS_PER_US)
    }

    /// Converts microseconds back to picoseconds, rounding towards negative infinity.
    fn floor_time(&self) -> Time {
        let ps = self.clone() * Self::from_int(PS_PER_US);
        Time::from_ps(ps.floor_i64().expect("duration fits in i64 picoseconds"))
    }
}

impl Scalar for f64 {
    fn floor_i64(&self) -> Option<i64> {
        let f = self.floor();
        (f.is_finite() && f >= i64::MIN as f64 && f <= i64::MAX as f64).then_some(f as i64)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Scalar for f32 {
    fn floor_i64(&self) -> Option<i64> {
        (*self as f64).floor_i64()
    }

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Scalar for Exact {
    fn floor_i64(&self) -> Option<i64> {
        i64::try_from(self.floor().to_integer()).ok()
    }

    fn to_f64_lossy(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

pub fn min<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}

pub fn max<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

/// Rounds half away from zero to `places` decimals and renders the result.
pub fn format_fixed<S: Scalar>(value: &S, places: u32) -> String {
    let scale = 10i64.pow(places);
    let scaled = value.clone() * S::from_int(scale);
    let half = S::ratio(1, 2);
    let negative = scaled < S::zero();
    let magnitude = if negative { S::zero() - scaled } else { scaled };
    let rounded = (magnitude + half).floor_i64().expect("value fits in i64");
    let sign = if negative && rounded != 0 { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{rounded}");
    }
    format!(
        "{sign}{}.{:0width$}",
        rounded / scale,
        rounded % scale,
        width = places as usize
    )
}
