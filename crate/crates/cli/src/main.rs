//! `mmwvr`: plan capacity, regenerate tables, simulate and sweep scenarios.
//!
//! Exit codes: 0 success, 1 usage, 2 infeasible, 3 I/O, 4 overload.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmwvr::{ChannelAccessMethod, Coordination, RefreshRate, Time};

use mmwvr_cli::commands::{self, Failure, Format, SweepGrid};
use mmwvr_cli::config::{Backoff, BiLength, Bitrate, RunConfig};

#[derive(Parser)]
#[command(
    name = "mmwvr",
    version,
    about = "mmWave VR capacity planner and airtime simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Latency blocks, VF partition and attainable bitrate for one scenario.
    Plan(ScenarioArgs),
    /// Write the latency-block, VF-length and bitrate tables as CSV.
    Tables {
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// HMD count used for the interBI column of the latency-block table.
        #[arg(long, default_value_t = 1)]
        hmds: u32,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
    /// Run the airtime simulator and write trace, CDF and summary CSVs.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Also write the event log as schedule.csv.
        #[arg(long)]
        schedule_log: bool,
    },
    /// Simulate a grid of scenarios in parallel.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated `method:coord` cases.
        #[arg(long, default_value = commands::DEFAULT_CASES)]
        cases: String,
        #[arg(long, default_value = commands::DEFAULT_LMAX_VALUES)]
        lmax_values: String,
        #[arg(long, default_value = commands::DEFAULT_HMD_COUNTS)]
        hmd_counts: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// `key = value` config file; flags override it.
    #[arg(long, env = "MMWVR_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<ChannelAccessMethod>,
    #[arg(long)]
    hmds: Option<u32>,
    /// Hz, e.g. 120 or 122.0703125.
    #[arg(long)]
    refresh: Option<RefreshRate>,
    #[arg(long)]
    lmax: Option<Time>,
    #[arg(long)]
    coord: Option<Coordination>,
    #[arg(long)]
    sectors: Option<u32>,
    /// `auto` or a duration.
    #[arg(long)]
    bi_length: Option<BiLength>,
    /// `auto` or a rate such as 188Mbps.
    #[arg(long)]
    bitrate: Option<Bitrate>,
    /// Multiplier on the AUTO bitrate.
    #[arg(long)]
    bitrate_scale: Option<f64>,
    #[arg(long)]
    duration: Option<Time>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    backoff: Option<Backoff>,
    #[arg(long)]
    bi_quantum: Option<Time>,
    #[arg(long)]
    vf_offset: Option<Time>,
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dump_config: bool,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<RunConfig, Failure> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
            cfg.apply_file(&text)
                .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        }
        macro_rules! flag {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        flag!(
            method,
            hmds,
            refresh,
            lmax,
            coord,
            sectors,
            bi_length,
            bitrate,
            bitrate_scale,
            duration,
            seed,
            backoff,
            bi_quantum,
            vf_offset
        );
        if !(cfg.bitrate_scale.is_finite() && cfg.bitrate_scale >= 0.0) {
            return Err(Failure::usage(
                "bitrate scale must be a non-negative number",
            ));
        }
        Ok(cfg)
    }
}

fn dispatch(cli: Cli) -> commands::CmdResult {
    let scenario = match &cli.command {
        Command::Plan(s)
        | Command::Simulate { scenario: s, .. }
        | Command::Sweep { scenario: s, .. } => Some(s),
        Command::Tables { .. } => None,
    };
    if let Some(s) = scenario.filter(|s| s.dump_config) {
        return Ok(s.resolve()?.dump());
    }
    match cli.command {
        Command::Plan(args) => commands::plan(&args.resolve()?, args.format),
        Command::Tables { out, hmds, format } => commands::tables(&out, hmds, format),
        Command::Simulate {
            scenario,
            out,
            schedule_log,
        } => commands::simulate(&scenario.resolve()?, &out, schedule_log, scenario.format),
        Command::Sweep {
            scenario,
            cases,
            lmax_values,
            hmd_counts,
            out,
        } => {
            let grid = SweepGrid::parse(&cases, &lmax_values, &hmd_counts)?;
            commands::sweep(&scenario.resolve()?, &grid, &out, scenario.format)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(Failure::USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            print!("{}", f.stdout);
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
