//! Regeneration of the latency-block, VF-block-length and throughput tables
//! for an 8-sector AP at 120 Hz.

use std::fmt::Write as _;

use crate::capacity::{attainable_bitrate, vf_block_length, CapacityPlan, PlanOptions};
use crate::error::Result;
use crate::latency::{latency_blocks, ChannelAccessMethod, Coordination, RefreshRate, Scenario};
use crate::scalar::{format_fixed, Scalar};
use crate::time::Time;
use crate::timing::PhyTimingProfile;

pub const TABLE_REFRESH_HZ: i64 = 120;
pub const TABLE_SECTORS: u32 = 8;
pub const TABLE_II_HMDS: [u32; 4] = [1, 2, 4, 8];

/// A labelled table of cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    pub columns: Vec<String>,
    pub rows: Vec<(ChannelAccessMethod, Vec<T>)>,
}

impl<T> Grid<T> {
    pub fn cell(&self, method: ChannelAccessMethod, column: usize) -> &T {
        let (_, cells) = self
            .rows
            .iter()
            .find(|(m, _)| *m == method)
            .expect("every method has a row");
        &cells[column]
    }

    /// CSV with a `method` column followed by the grid's columns.
    pub fn to_csv(&self, render: impl Fn(&T) -> String) -> String {
        let mut out = String::from("method");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (method, cells) in &self.rows {
            out.push_str(method.label());
            for cell in cells {
                out.push(',');
                out.push_str(&render(cell));
            }
            out.push('\n');
        }
        out
    }

    /// Space-aligned rendering for terminals.
    pub fn to_aligned(&self, render: impl Fn(&T) -> String) -> String {
        let mut header = vec!["".to_string()];
        header.extend(self.columns.iter().cloned());
        let mut lines = vec![header];
        for (method, cells) in &self.rows {
            let mut line = vec![method.label().to_string()];
            line.extend(cells.iter().map(&render));
            lines.push(line);
        }
        let widths: Vec<usize> = (0..lines[0].len())
            .map(|i| {
                lines
                    .iter()
                    .map(|l| l[i].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for line in lines {
            let cells: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    if i == 0 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

fn table_scenario(
    method: ChannelAccessMethod,
    n: u32,
    l_max: Time,
    coordination: Coordination,
) -> Scenario {
    Scenario {
        refresh: RefreshRate::hz(TABLE_REFRESH_HZ),
        sectors: TABLE_SECTORS,
        ..Scenario::new(method, n, l_max, coordination)
    }
}

/// One row of the latency-block table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatencyRow {
    /// BHI with an empty Extended Schedule.
    pub bhi_base: Time,
    /// BHI growth per allocation (beacons per BI times the per-BF penalty).
    pub bf_penalty: Time,
    /// `"0"`, `"1"` or `"n"`.
    pub allocations: &'static str,
    pub leading_guard: Time,
    pub inter_bi: Time,
    pub inter_vf: Time,
    pub access: Time,
}

impl LatencyRow {
    /// The interBI block as a sum of its parts, e.g. `(453+n*8*5)`.
    pub fn inter_bi_formula(&self, profile: &PhyTimingProfile) -> String {
        let bfs = self.bf_penalty.as_ps() / profile.extended_schedule_bf_penalty.as_ps();
        let mut s = format!(
            "({}+{}*{}*{})",
            us_text(self.bhi_base),
            self.allocations,
            bfs,
            us_text(profile.extended_schedule_bf_penalty)
        );
        if self.allocations == "1" {
            s = format!(
                "({}+{}*{})",
                us_text(self.bhi_base),
                bfs,
                us_text(profile.extended_schedule_bf_penalty)
            );
        }
        if self.leading_guard > Time::ZERO {
            s.push_str(&format!("+{}", us_text(self.leading_guard)));
        }
        s
    }
}

/// Microseconds, shortest exact decimal.
pub fn us_text(t: Time) -> String {
    let text = t.to_string();
    if t == Time::ZERO {
        return "0".into();
    }
    match text.strip_suffix("us") {
        Some(v) => v.to_string(),
        None => format!("{}", t.as_us_f64()),
    }
}

/// Latency blocks for `n_hmds` headsets.
pub fn generate_table_i(profile: &PhyTimingProfile, n_hmds: u32) -> Grid<LatencyRow> {
    let rows = ChannelAccessMethod::ALL
        .into_iter()
        .map(|m| {
            let s = table_scenario(m, n_hmds, Time::from_ms(1), Coordination::Bi);
            let cfg = s.bhi_config();
            let blocks = latency_blocks(&s, profile, &cfg);
            let bhi_base = crate::timing::bhi_duration(&cfg, 0, profile);
            let row = LatencyRow {
                bhi_base,
                bf_penalty: profile.extended_schedule_bf_penalty * cfg.bti_sector_rotation as i64,
                allocations: match m.allocations(2) {
                    0 => "0",
                    1 => "1",
                    _ => "n",
                },
                leading_guard: blocks.leading_guard,
                inter_bi: blocks.inter_bi,
                inter_vf: blocks.inter_vf,
                access: blocks.access,
            };
            (m, vec![row])
        })
        .collect();
    Grid {
        columns: vec!["row".into()],
        rows,
    }
}

pub fn table_i_csv(profile: &PhyTimingProfile, n_hmds: u32) -> String {
    let grid = generate_table_i(profile, n_hmds);
    let mut out = format!("method,inter_bi,inter_bi_us_at_{n_hmds}_hmd,inter_vf_us,access_us\n");
    for (m, cells) in &grid.rows {
        let r = &cells[0];
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            m.label(),
            r.inter_bi_formula(profile),
            us_text(r.inter_bi),
            us_text(r.inter_vf),
            us_text(r.access)
        );
    }
    out
}

/// VF block length `v` in microseconds for 1, 2, 4 and 8 HMDs.
pub fn generate_table_ii<S: Scalar>(profile: &PhyTimingProfile) -> Result<Grid<S>> {
    let mut rows = Vec::new();
    for m in ChannelAccessMethod::ALL {
        let mut cells = Vec::new();
        for n in TABLE_II_HMDS {
            let s = table_scenario(m, n, Time::from_ms(1), Coordination::Bi);
            let blocks = latency_blocks(&s, profile, &s.bhi_config());
            cells.push(vf_block_length(&blocks, n, s.refresh)?);
        }
        rows.push((m, cells));
    }
    Ok(Grid {
        columns: TABLE_II_HMDS
            .iter()
            .map(|n| {
                if *n == 1 {
                    "1 HMD".to_string()
                } else {
                    format!("{n} HMDs")
                }
            })
            .collect(),
        rows,
    })
}

/// Milliseconds with three decimals.
pub fn table_ii_csv<S: Scalar>(grid: &Grid<S>) -> String {
    grid.to_csv(|v| format_fixed(&(v.clone() / S::from_int(1000)), 3))
}

/// Column layout of the throughput table.
pub const TABLE_III_COLUMNS: [(Coordination, u32, i64); 6] = [
    (Coordination::Bi, 1, 1),
    (Coordination::Bi, 1, 5),
    (Coordination::Bi, 8, 1),
    (Coordination::Video, 1, 1),
    (Coordination::Video, 1, 5),
    (Coordination::Video, 8, 1),
];

pub fn generate_table_iii<S: Scalar>(profile: &PhyTimingProfile) -> Result<Grid<CapacityPlan<S>>> {
    let mut rows = Vec::new();
    for m in ChannelAccessMethod::ALL {
        let mut cells = Vec::new();
        for (coord, n, l_max_ms) in TABLE_III_COLUMNS {
            let s = table_scenario(m, n, Time::from_ms(l_max_ms), coord);
            cells.push(attainable_bitrate(
                &s,
                profile,
                &s.bhi_config(),
                &PlanOptions::default(),
            )?);
        }
        rows.push((m, cells));
    }
    Ok(Grid {
        columns: TABLE_III_COLUMNS
            .iter()
            .map(|(c, n, l)| format!("{}_{}hmd_{}ms", c.name(), n, l))
            .collect(),
        rows,
    })
}

/// Unit for rendering bitrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateUnit {
    /// 10^6 bit/s.
    Mbit,
    /// 2^20 bit/s, the unit of the reference throughput table.
    Mibit,
}

impl RateUnit {
    pub fn scale(self, bps: f64) -> f64 {
        match self {
            RateUnit::Mbit => bps / 1e6,
            RateUnit::Mibit => bps / (1u64 << 20) as f64,
        }
    }

    pub fn suffix(self) -> &'static str {
        match self {
            RateUnit::Mbit => "mbps",
            RateUnit::Mibit => "mibps",
        }
    }
}

pub fn table_iii_csv<S: Scalar>(grid: &Grid<CapacityPlan<S>>, unit: RateUnit) -> String {
    let mut renamed = Grid {
        columns: grid
            .columns
            .iter()
            .map(|c| format!("{c}_{}", unit.suffix()))
            .collect(),
        rows: Vec::new(),
    };
    renamed.rows = grid
        .rows
        .iter()
        .map(|(m, cells)| {
            (
                *m,
                cells
                    .iter()
                    .map(|p| unit.scale(p.capacity.bitrate_bps))
                    .collect(),
            )
        })
        .collect();
    renamed.to_csv(|v: &f64| format!("{}", v.round() as i64))
}
