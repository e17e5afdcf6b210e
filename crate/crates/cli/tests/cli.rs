use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mmwvr::sim::{self, SimConfig};
use mmwvr::{ChannelAccessMethod, Coordination, Scenario, Time};
use tempfile::tempdir;

fn mmwvr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmwvr"))
        .args(args)
        .env_remove("MMWVR_CONFIG")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn field(csv: &str, name: &str) -> String {
    csv.lines()
        .find_map(|l| l.strip_prefix(&format!("{name},")))
        .unwrap_or_else(|| panic!("no {name} in {csv}"))
        .to_string()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_reports_the_bitrate_for_eight_hmds() {
    let out = mmwvr(&[
        "plan",
        "--method",
        "cbap-only",
        "--hmds",
        "8",
        "--refresh",
        "120",
        "--lmax",
        "1ms",
        "--coord",
        "bi",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    let mbps: f64 = field(&csv, "bitrate_mbps").parse().unwrap();
    assert!((mbps / 498.0 - 1.0).abs() <= 0.05, "{mbps}");
    assert_eq!(field(&csv, "inter_bi_us"), "254");
    assert_eq!(field(&csv, "v_us"), "985.417");
}

#[test]
fn plan_values_are_the_library_values() {
    let out = mmwvr(&[
        "plan",
        "--method",
        "nps-dynsp",
        "--coord",
        "video",
        "--lmax",
        "3.5ms",
        "--format",
        "csv",
    ]);
    let csv = stdout(&out);
    let s = Scenario::new(
        ChannelAccessMethod::NpsDynSp,
        1,
        Time::from_us(3500),
        Coordination::Video,
    );
    let plan = mmwvr::plan(&s).unwrap();
    assert_eq!(field(&csv, "vf_bytes"), plan.capacity.vf_bytes.to_string());
    assert_eq!(
        field(&csv, "full_ampdus"),
        plan.capacity.full_ampdus.to_string()
    );
    assert_eq!(
        field(&csv, "bitrate_mbps"),
        format!("{}", plan.capacity.mbit_per_s().round() as i64)
    );
    assert!(csv.contains("v_tx1_us,"));
}

#[test]
fn exit_codes() {
    assert_eq!(
        code(&mmwvr(&[
            "plan",
            "--method",
            "nps-sp",
            "--hmds",
            "8",
            "--refresh",
            "1250"
        ])),
        2
    );
    assert_eq!(code(&mmwvr(&["plan", "--hmds", "0"])), 1);
    assert_eq!(code(&mmwvr(&["plan", "--lmax", "5"])), 1);
    assert_eq!(code(&mmwvr(&["plan", "--method", "tdma"])), 1);
    assert_eq!(code(&mmwvr(&[])), 1);
    assert_eq!(code(&mmwvr(&["--help"])), 0);
    let dir = tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    assert_eq!(
        code(&mmwvr(&["tables", "--out", path(&blocker.join("sub"))])),
        3
    );
    assert_eq!(
        code(&mmwvr(&[
            "plan",
            "--config",
            path(&dir.path().join("missing.conf"))
        ])),
        3
    );
}

#[test]
fn lmax_shorter_than_access_is_infeasible() {
    let out = mmwvr(&["plan", "--lmax", "4us", "--format", "csv"]);
    assert_eq!(code(&out), 2);
    assert_eq!(field(&stdout(&out), "vf_bytes"), "0");
}

#[test]
fn tables_are_written_as_csv() {
    let dir = tempdir().unwrap();
    let out = mmwvr(&["tables", "--out", path(dir.path()), "--format", "csv"]);
    assert_eq!(code(&out), 0);
    let t1 = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    let t2 = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
    let t3 = fs::read_to_string(dir.path().join("table3.csv")).unwrap();
    assert_eq!(t1.lines().count(), 7);
    assert!(t2.contains("\nNPS SP,7.840,3.898,1.927,0.942\n"));
    assert!(t3.starts_with("method,bi_1hmd_1ms_mibps,"));
    assert_eq!(t3.lines().count(), 7);
}

#[test]
fn flags_override_config_which_overrides_defaults() {
    let dir = tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# base\nhmds = 4\nlmax = 2ms\n").unwrap();
    let out = mmwvr(&[
        "plan",
        "--config",
        path(&conf),
        "--hmds",
        "2",
        "--dump-config",
    ]);
    assert_eq!(code(&out), 0);
    let dump = stdout(&out);
    assert!(dump.contains("hmds = 2\n"));
    assert!(dump.contains("lmax = 2ms\n"));
    assert!(dump.contains("method = cbap-only\n"));

    let via_env = Command::new(env!("CARGO_BIN_EXE_mmwvr"))
        .args(["plan", "--dump-config"])
        .env("MMWVR_CONFIG", &conf)
        .output()
        .unwrap();
    assert!(stdout(&via_env).contains("hmds = 4\n"));
}

#[test]
fn dumped_config_reads_back_to_itself() {
    let dir = tempdir().unwrap();
    let first = mmwvr(&[
        "simulate",
        "--method",
        "ps-dynsp",
        "--coord",
        "video",
        "--lmax",
        "3.5ms",
        "--bitrate",
        "150Mbps",
        "--backoff",
        "random-cw",
        "--seed",
        "9",
        "--vf-offset",
        "570ps",
        "--dump-config",
    ]);
    let conf = dir.path().join("dump.conf");
    fs::write(&conf, &first.stdout).unwrap();
    let second = mmwvr(&["simulate", "--config", path(&conf), "--dump-config"]);
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "hmds = 2\ncolour = blue\n").unwrap();
    let out = mmwvr(&["plan", "--config", path(&conf)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn simulate_writes_outputs_matching_the_library() {
    let dir = tempdir().unwrap();
    let out = mmwvr(&[
        "simulate",
        "--coord",
        "video",
        "--hmds",
        "2",
        "--lmax",
        "2ms",
        "--duration",
        "640ms",
        "--schedule-log",
        "--format",
        "csv",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mut cfg = SimConfig::new(Scenario::new(
        ChannelAccessMethod::CbapOnly,
        2,
        Time::from_ms(2),
        Coordination::Video,
    ));
    cfg.sim_duration = Time::from_ms(640);
    let trace = sim::run(&cfg).unwrap();
    let summary = sim::summarize(&trace);
    assert_eq!(
        fs::read_to_string(dir.path().join("trace.csv")).unwrap(),
        sim::trace_csv(&trace)
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("cdf.csv")).unwrap(),
        sim::cdf_csv(&summary)
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("schedule.csv")).unwrap(),
        sim::schedule_csv(&trace.schedule_log)
    );
    let row = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    let max = summary.stats.unwrap().max.display_ns();
    assert!(
        row.lines().nth(1).unwrap().contains(&format!(",{max},")),
        "{row}"
    );
    assert_eq!(stdout(&out), row);
}

#[test]
fn simulate_overload_names_the_scenario() {
    let dir = tempdir().unwrap();
    let out = mmwvr(&[
        "simulate",
        "--method",
        "nps-sp",
        "--hmds",
        "8",
        "--bitrate-scale",
        "1.5",
        "--duration",
        "300ms",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 4);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("overload") && err.contains("method=nps-sp coord=bi hmds=8"),
        "{err}"
    );
}

#[test]
fn empty_sweep_writes_only_the_header() {
    let dir = tempdir().unwrap();
    let out = mmwvr(&[
        "sweep",
        "--cases",
        "",
        "--format",
        "csv",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("method,coord,hmds,"));
}

#[test]
fn sweep_keeps_grid_order_and_flags_overdriven_runs() {
    let dir = tempdir().unwrap();
    let out = mmwvr(&[
        "sweep",
        "--cases",
        "cbap-only:bi,ps-cbap:video",
        "--lmax-values",
        "2ms,1ms",
        "--hmd-counts",
        "1",
        "--bitrate-scale",
        "1.1",
        "--format",
        "csv",
        "--out",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let keys: Vec<String> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(5).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        [
            "cbap-only,bi,1,15625/128,2ms",
            "cbap-only,bi,1,15625/128,1ms",
            "ps-cbap,video,1,120,2ms",
            "ps-cbap,video,1,120,1ms",
        ]
    );
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")), "{csv}");
}

#[test]
fn malformed_sweep_cases_are_usage_errors() {
    assert_eq!(code(&mmwvr(&["sweep", "--cases", "cbap-only"])), 1);
    assert_eq!(code(&mmwvr(&["sweep", "--lmax-values", "1ms,two"])), 1);
}
