//! Flat `key = value` run configuration.
//!
//! Precedence is flags over config file over defaults. Times take unit
//! suffixes (`ps`, `ns`, `us`, `ms`, `s`).

use std::fmt;
use std::str::FromStr;

use mmwvr::sim::{BackoffPolicy, SimConfig, VideoLoad};
use mmwvr::{ChannelAccessMethod, Coordination, RefreshRate, Scenario, Time};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bitrate {
    Auto,
    BitsPerSecond(u64),
}

impl fmt::Display for Bitrate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bitrate::Auto => f.write_str("auto"),
            Bitrate::BitsPerSecond(bps) => write!(f, "{bps}bps"),
        }
    }
}

impl FromStr for Bitrate {
    type Err = String;

    /// `auto`, or a rate with an optional `bps`/`kbps`/`Mbps`/`Gbps`/`Mibps` suffix.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Bitrate::Auto);
        }
        let (number, scale) = [
            ("Mibps", 1u64 << 20),
            ("Gbps", 1_000_000_000),
            ("Mbps", 1_000_000),
            ("kbps", 1_000),
            ("bps", 1),
        ]
        .iter()
        .find_map(|(suffix, scale)| s.strip_suffix(suffix).map(|n| (n.trim(), *scale)))
        .unwrap_or((s, 1));
        let value: f64 = number
            .parse()
            .map_err(|_| format!("malformed bitrate `{s}`"))?;
        let bps = value * scale as f64;
        if !(bps.is_finite() && bps >= 0.0) || bps.fract() != 0.0 {
            return Err(format!("bitrate `{s}` is not a whole number of bit/s"));
        }
        Ok(Bitrate::BitsPerSecond(bps as u64))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Backoff {
    WorstCase,
    RandomCw,
}

impl From<Backoff> for BackoffPolicy {
    fn from(b: Backoff) -> Self {
        match b {
            Backoff::WorstCase => BackoffPolicy::WorstCase,
            Backoff::RandomCw => BackoffPolicy::RandomCw,
        }
    }
}

impl fmt::Display for Backoff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backoff::WorstCase => "worst-case",
            Backoff::RandomCw => "random-cw",
        })
    }
}

impl FromStr for Backoff {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Backoff as clap::ValueEnum>::from_str(s, true)
    }
}

/// A BI length, or `auto` for the coordination mode's default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BiLength(pub Option<Time>);

impl fmt::Display for BiLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("auto"),
            Some(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for BiLength {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("auto") {
            return Ok(BiLength(None));
        }
        s.parse::<Time>()
            .map(|t| BiLength(Some(t)))
            .map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: ChannelAccessMethod,
    pub hmds: u32,
    pub refresh: RefreshRate,
    pub lmax: Time,
    pub coord: Coordination,
    pub sectors: u32,
    pub bi_length: BiLength,
    pub bitrate: Bitrate,
    /// Applied to the AUTO bitrate only.
    pub bitrate_scale: f64,
    pub duration: Time,
    pub seed: u64,
    pub backoff: Backoff,
    pub bi_quantum: Time,
    pub vf_offset: Time,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            method: ChannelAccessMethod::CbapOnly,
            hmds: 1,
            refresh: RefreshRate::hz(120),
            lmax: Time::from_ms(1),
            coord: Coordination::Bi,
            sectors: 8,
            bi_length: BiLength(None),
            bitrate: Bitrate::Auto,
            bitrate_scale: 1.0,
            // one full BHI/VF phase cycle at 120 Hz with 10.24 ms BIs
            duration: Time::from_ms(6400),
            seed: 0,
            backoff: Backoff::WorstCase,
            bi_quantum: Time::from_us(1024),
            vf_offset: Time::ZERO,
        }
    }
}

pub const KEYS: [&str; 14] = [
    "method",
    "hmds",
    "refresh",
    "lmax",
    "coord",
    "sectors",
    "bi_length",
    "bitrate",
    "bitrate_scale",
    "duration",
    "seed",
    "backoff",
    "bi_quantum",
    "vf_offset",
];

impl RunConfig {
    pub fn scenario(&self) -> Scenario {
        Scenario {
            method: self.method,
            n_hmds: self.hmds,
            refresh: self.refresh,
            l_max: self.lmax,
            sectors: self.sectors,
            bi_length: self.bi_length.0,
            coordination: self.coord,
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        let mut cfg = SimConfig::new(self.scenario());
        cfg.video_load = match self.bitrate {
            Bitrate::Auto if self.bitrate_scale == 1.0 => VideoLoad::Auto,
            Bitrate::Auto => VideoLoad::AutoScaled(self.bitrate_scale),
            Bitrate::BitsPerSecond(bps) => VideoLoad::BitsPerSecond(bps),
        };
        cfg.sim_duration = self.duration;
        cfg.seed = self.seed;
        cfg.bi_quantum = self.bi_quantum;
        cfg.backoff_policy = self.backoff.into();
        cfg.vf_offset = self.vf_offset;
        cfg
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "method" => self.method.name().to_string(),
            "hmds" => self.hmds.to_string(),
            "refresh" => self.refresh.to_string(),
            "lmax" => self.lmax.to_string(),
            "coord" => self.coord.name().to_string(),
            "sectors" => self.sectors.to_string(),
            "bi_length" => self.bi_length.to_string(),
            "bitrate" => self.bitrate.to_string(),
            "bitrate_scale" => self.bitrate_scale.to_string(),
            "duration" => self.duration.to_string(),
            "seed" => self.seed.to_string(),
            "backoff" => self.backoff.to_string(),
            "bi_quantum" => self.bi_quantum.to_string(),
            "vf_offset" => self.vf_offset.to_string(),
            _ => return None,
        })
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn p<T: FromStr>(key: &str, value: &str) -> Result<T, String>
        where
            T::Err: fmt::Display,
        {
            value.parse().map_err(|e| format!("{key}: {e}"))
        }
        match key {
            "method" => self.method = p(key, value)?,
            "hmds" => self.hmds = p(key, value)?,
            "refresh" => self.refresh = p(key, value)?,
            "lmax" => self.lmax = p(key, value)?,
            "coord" => self.coord = p(key, value)?,
            "sectors" => self.sectors = p(key, value)?,
            "bi_length" => self.bi_length = p(key, value)?,
            "bitrate" => self.bitrate = p(key, value)?,
            "bitrate_scale" => self.bitrate_scale = p(key, value)?,
            "duration" => self.duration = p(key, value)?,
            "seed" => self.seed = p(key, value)?,
            "backoff" => self.backoff = p(key, value)?,
            "bi_quantum" => self.bi_quantum = p(key, value)?,
            "vf_offset" => self.vf_offset = p(key, value)?,
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies the `key = value` lines of a config file on top of `self`.
    /// Blank lines and `#` comments are ignored.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        cfg.apply_file(text)?;
        Ok(cfg)
    }

    pub fn dump(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k} = {}\n", self.get(k).expect("every key renders")))
            .collect()
    }
}
