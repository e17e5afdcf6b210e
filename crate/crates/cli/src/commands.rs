use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use mmwvr::scalar::format_fixed;
use mmwvr::sim::{self, SimTrace};
use mmwvr::tables::{self, RateUnit};
use mmwvr::{ChannelAccessMethod, Coordination, Error, Exact, ExactPlan, PhyTimingProfile, Time};
use rayon::prelude::*;

use crate::config::RunConfig;

/// A failed command and the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
    /// Output produced before the failure.
    pub stdout: String,
}

impl Failure {
    pub const USAGE: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const IO: u8 = 3;
    pub const OVERLOAD: u8 = 4;

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: Self::USAGE,
            message: message.into(),
            stdout: String::new(),
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Self {
            code: Self::IO,
            message: format!("{}: {err}", path.display()),
            stdout: String::new(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Infeasible { .. } | Error::ScheduleOverflow { .. } => Self::INFEASIBLE,
            Error::Overload { .. } => Self::OVERLOAD,
            _ => Self::USAGE,
        };
        Self {
            code,
            message: err.to_string(),
            stdout: String::new(),
        }
    }
}

/// Text for stdout on success.
pub type CmdResult = Result<String, Failure>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Failure::io(&path, e))?;
    Ok(path)
}

fn aligned(rows: &[(String, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn us(v: &Exact) -> String {
    format_fixed(v, 3)
}

fn plan_rows(plan: &ExactPlan) -> Vec<(String, String)> {
    let s = &plan.scenario;
    let p = &plan.partition;
    let c = &plan.capacity;
    let mut rows = vec![
        ("method".into(), s.method.name().into()),
        ("coord".into(), s.coordination.name().into()),
        ("hmds".into(), s.n_hmds.to_string()),
        ("refresh_hz".into(), s.refresh.to_string()),
        ("lmax".into(), s.l_max.to_string()),
        ("bi_length".into(), s.effective_bi_length().to_string()),
        ("inter_bi_us".into(), tables::us_text(plan.blocks.inter_bi)),
        ("bhi_us".into(), tables::us_text(plan.blocks.bhi)),
        (
            "guard_us".into(),
            tables::us_text(plan.blocks.leading_guard),
        ),
        ("inter_vf_us".into(), tables::us_text(plan.blocks.inter_vf)),
        ("access_us".into(), tables::us_text(plan.blocks.access)),
        ("v_us".into(), us(&plan.v)),
        ("v_pre_us".into(), us(&p.v_pre)),
        ("v_tx_us".into(), us(&p.v_tx)),
        ("v_buf_us".into(), us(&p.v_buf)),
    ];
    if let (Some(a), Some(b)) = (&p.v_tx1, &p.v_tx2) {
        rows.push(("v_tx1_us".into(), us(a)));
        rows.push(("v_tx2_us".into(), us(b)));
    }
    rows.extend([
        ("full_ampdus".into(), c.full_ampdus.to_string()),
        ("tail_mpdus".into(), c.tail_mpdus.to_string()),
        ("vf_bytes".into(), c.vf_bytes.to_string()),
        (
            "bitrate_mbps".into(),
            format!("{}", c.mbit_per_s().round() as i64),
        ),
        (
            "bitrate_mibps".into(),
            format!("{}", c.mibit_per_s().round() as i64),
        ),
    ]);
    rows
}

pub fn plan(cfg: &RunConfig, format: Format) -> CmdResult {
    let plan = mmwvr::plan(&cfg.scenario())?;
    let rows = plan_rows(&plan);
    let text = match format {
        Format::Table => aligned(&rows),
        Format::Csv => std::iter::once("field,value\n".to_string())
            .chain(rows.iter().map(|(k, v)| format!("{k},{v}\n")))
            .collect(),
    };
    if plan.infeasible() {
        return Err(Failure {
            code: Failure::INFEASIBLE,
            stdout: text,
            message: format!(
                "infeasible: no A-MPDU fits the usable window of {} us (v = {} us, l_max = {})",
                us(&plan.partition.v_tx),
                us(&plan.v),
                plan.scenario.l_max
            ),
        });
    }
    Ok(text)
}

pub fn tables(out: &Path, hmds: u32, format: Format) -> CmdResult {
    let profile = PhyTimingProfile::default();
    if hmds == 0 {
        return Err(Failure::usage("at least one HMD is required"));
    }
    let t1 = tables::table_i_csv(&profile, hmds);
    let grid2 = tables::generate_table_ii::<Exact>(&profile)?;
    let t2 = tables::table_ii_csv(&grid2);
    let grid3 = tables::generate_table_iii::<Exact>(&profile)?;
    let t3 = tables::table_iii_csv(&grid3, RateUnit::Mibit);
    let mut text = String::new();
    for (name, csv) in [
        ("table1.csv", &t1),
        ("table2.csv", &t2),
        ("table3.csv", &t3),
    ] {
        let path = write_file(out, name, csv)?;
        if format == Format::Csv {
            let _ = writeln!(text, "{}", path.display());
        }
    }
    if format == Format::Table {
        let ms = |v: &Exact| format_fixed(&(v / Exact::from_integer(1000)), 3);
        let _ = writeln!(text, "VF block length (ms)\n{}", grid2.to_aligned(ms));
        let mibps = |p: &ExactPlan| {
            format!(
                "{}",
                RateUnit::Mibit.scale(p.capacity.bitrate_bps).round() as i64
            )
        };
        let _ = writeln!(
            text,
            "Attainable bitrate (Mibit/s)\n{}",
            grid3.to_aligned(mibps)
        );
    }
    Ok(text)
}

pub const SUMMARY_HEADER: &str =
    "method,coord,hmds,refresh_hz,lmax,bitrate_bps,vf_bytes,samples,dropped,max_ns,mean_ns,p50_ns,p99_ns,violations,violated";

/// One summary row. Latencies are exact nanoseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub cfg: RunConfig,
    pub refresh: String,
    pub bitrate_bps: f64,
    pub vf_bytes: u64,
    pub trace_stats: Option<sim::LatencyStats>,
    pub samples: usize,
    pub dropped: u64,
    pub violations: usize,
}

impl SummaryRow {
    fn new(cfg: &RunConfig, setup: &sim::SimSetup, trace: &SimTrace) -> Self {
        Self {
            cfg: cfg.clone(),
            refresh: setup.scenario.refresh.to_string(),
            bitrate_bps: setup.bitrate_bps(),
            vf_bytes: setup.vf_bytes,
            trace_stats: sim::summarize(trace).stats,
            samples: trace.samples.len(),
            dropped: trace.dropped,
            violations: trace.violations(cfg.lmax),
        }
    }

    fn cells(&self) -> Vec<String> {
        let t = |f: fn(&sim::LatencyStats) -> Time| {
            self.trace_stats
                .as_ref()
                .map(|s| f(s).display_ns())
                .unwrap_or_default()
        };
        vec![
            self.cfg.method.name().into(),
            self.cfg.coord.name().into(),
            self.cfg.hmds.to_string(),
            self.refresh.clone(),
            self.cfg.lmax.to_string(),
            format!("{}", self.bitrate_bps.round() as i64),
            self.vf_bytes.to_string(),
            self.samples.to_string(),
            self.dropped.to_string(),
            t(|s| s.max),
            t(|s| s.mean),
            t(|s| s.p50),
            t(|s| s.p99),
            self.violations.to_string(),
            (self.violations > 0).to_string(),
        ]
    }
}

fn summary_text(rows: &[SummaryRow], format: Format) -> String {
    let header: Vec<String> = SUMMARY_HEADER.split(',').map(String::from).collect();
    let body: Vec<Vec<String>> = rows.iter().map(SummaryRow::cells).collect();
    let mut out = String::new();
    match format {
        Format::Csv => {
            out.push_str(SUMMARY_HEADER);
            out.push('\n');
            for r in &body {
                let _ = writeln!(out, "{}", r.join(","));
            }
        }
        Format::Table => {
            let widths: Vec<usize> = (0..header.len())
                .map(|i| {
                    body.iter()
                        .map(|r| r[i].len())
                        .chain([header[i].len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            for r in std::iter::once(&header).chain(&body) {
                let cells: Vec<String> = r
                    .iter()
                    .zip(&widths)
                    .map(|(c, w)| format!("{c:>w$}"))
                    .collect();
                let _ = writeln!(out, "{}", cells.join("  "));
            }
        }
    }
    out
}

fn scenario_row(cfg: &RunConfig) -> String {
    format!(
        "method={} coord={} hmds={} refresh={} lmax={} bitrate={} scale={}",
        cfg.method.name(),
        cfg.coord.name(),
        cfg.hmds,
        cfg.refresh,
        cfg.lmax,
        cfg.bitrate,
        cfg.bitrate_scale
    )
}

fn simulate_one(cfg: &RunConfig) -> Result<(SummaryRow, SimTrace), Failure> {
    let sim_cfg = cfg.sim_config();
    let with_row = |f: Failure| Failure {
        message: format!("{}\n  scenario: {}", f.message, scenario_row(cfg)),
        ..f
    };
    let setup = sim::prepare(&sim_cfg).map_err(|e| with_row(e.into()))?;
    let trace = sim::run_prepared(&sim_cfg, &setup).map_err(|e| with_row(e.into()))?;
    Ok((SummaryRow::new(cfg, &setup, &trace), trace))
}

pub fn simulate(cfg: &RunConfig, out: &Path, schedule_log: bool, format: Format) -> CmdResult {
    let (row, trace) = simulate_one(cfg)?;
    let summary = sim::summarize(&trace);
    write_file(out, "trace.csv", &sim::trace_csv(&trace))?;
    write_file(out, "cdf.csv", &sim::cdf_csv(&summary))?;
    write_file(
        out,
        "summary.csv",
        &summary_text(std::slice::from_ref(&row), Format::Csv),
    )?;
    if schedule_log {
        write_file(out, "schedule.csv", &sim::schedule_csv(&trace.schedule_log))?;
    }
    Ok(summary_text(&[row], format))
}

/// Parses `method:coord` pairs, comma separated. Empty input is an empty list.
pub fn parse_cases(text: &str) -> Result<Vec<(ChannelAccessMethod, Coordination)>, Failure> {
    split_list(text)
        .map(|case| {
            let (m, c) = case
                .split_once(':')
                .ok_or_else(|| Failure::usage(format!("case `{case}` is not method:coord")))?;
            Ok((
                m.parse().map_err(Failure::usage)?,
                c.parse().map_err(Failure::usage)?,
            ))
        })
        .collect()
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    split_list(text)
        .map(|v| {
            v.parse()
                .map_err(|e| Failure::usage(format!("{what} `{v}`: {e}")))
        })
        .collect()
}

fn split_list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

pub const DEFAULT_CASES: &str = "cbap-only:bi,cbap-only:video,ps-dynsp:video";
pub const DEFAULT_LMAX_VALUES: &str = "1ms,2ms,3.5ms,5ms";
pub const DEFAULT_HMD_COUNTS: &str = "1";

pub struct SweepGrid {
    pub cases: Vec<(ChannelAccessMethod, Coordination)>,
    pub lmax: Vec<Time>,
    pub hmds: Vec<u32>,
}

impl SweepGrid {
    pub fn parse(cases: &str, lmax_values: &str, hmd_counts: &str) -> Result<Self, Failure> {
        Ok(Self {
            cases: parse_cases(cases)?,
            lmax: parse_list(lmax_values, "l_max")?,
            hmds: parse_list(hmd_counts, "HMD count")?,
        })
    }

    /// Every case, then every l_max, then every HMD count, in that nesting order.
    pub fn configs(&self, base: &RunConfig) -> Vec<RunConfig> {
        let mut out = Vec::new();
        for &(method, coord) in &self.cases {
            for &lmax in &self.lmax {
                for &hmds in &self.hmds {
                    out.push(RunConfig {
                        method,
                        coord,
                        lmax,
                        hmds,
                        ..base.clone()
                    });
                }
            }
        }
        out
    }
}

pub fn sweep(base: &RunConfig, grid: &SweepGrid, out: &Path, format: Format) -> CmdResult {
    let configs = grid.configs(base);
    let results: Vec<Result<SummaryRow, Failure>> = configs
        .par_iter()
        .map(|cfg| simulate_one(cfg).map(|(row, _)| row))
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r?);
    }
    write_file(out, "sweep.csv", &summary_text(&rows, Format::Csv))?;
    Ok(summary_text(&rows, format))
}
