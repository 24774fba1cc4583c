//! Entry points behind the `acoustic-miner` binary.
//!
//! Every `cmd_*` function returns the process exit code and prints one-line
//! diagnostics on stderr; the un-prefixed functions return values for
//! callers that want them (tests, the bench harness).

pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use acoustic_miner::archive::ScanError;
use acoustic_miner::detector::validate_for_streams;
use acoustic_miner::events::read_raven_table;
use acoustic_miner::scheduler::{compute_rate, execute_plans, plan_archive, ExecOptions};
use acoustic_miner::{
    merge_block_detections, parse_parm_file, scan_archive, write_raven_table, ArchiveMap, BlockOutcome, DetectorHandle,
    Event, Registry, RunReport, TimestampRule,
};
use anyhow::{anyhow, Context};
use log::info;
use thiserror::Error;

pub use config::{Overrides, RunConfig, Workers};

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const EMPTY_ARCHIVE: i32 = 2;
    pub const INVALID: i32 = 3;
    pub const ALL_BLOCKS_FAILED: i32 = 4;
    pub const BENCH_MISMATCH: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0:#}")]
    Other(#[from] anyhow::Error),
    #[error("no matching files under {}", .0.display())]
    EmptyArchive(PathBuf),
    /// Configuration problems, one message each.
    #[error("{}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("{0}")]
    BenchMismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => exit::FAILURE,
            CliError::EmptyArchive(_) => exit::EMPTY_ARCHIVE,
            CliError::Invalid(_) => exit::INVALID,
            CliError::BenchMismatch(_) => exit::BENCH_MISMATCH,
        }
    }

    fn print(&self) {
        match self {
            CliError::Invalid(lines) => {
                for l in lines {
                    eprintln!("invalid: {l}");
                }
            }
            other => eprintln!("error: {other}"),
        }
    }
}

fn finish(result: Result<i32, CliError>) -> i32 {
    result.unwrap_or_else(|e| {
        e.print();
        e.exit_code()
    })
}

// ---------------------------------------------------------------- index

pub fn index(root: &Path, pattern: &str, rule: &str, out: &Path) -> Result<ArchiveMap, CliError> {
    let rule: TimestampRule = rule.parse().map_err(|e| anyhow!("{e}"))?;
    let map = match scan_archive(root, pattern, &rule) {
        Ok(map) => map,
        Err(ScanError::EmptyArchive(p)) => return Err(CliError::EmptyArchive(p)),
        Err(e) => return Err(anyhow!(e).into()),
    };
    map.save(out).map_err(|e| anyhow!(e))?;
    Ok(map)
}

pub fn cmd_index(root: &Path, pattern: &str, rule: &str, out: &Path) -> i32 {
    finish(index(root, pattern, rule, out).map(|map| {
        for s in &map.skipped {
            eprintln!("skipped: {}: {}", s.path.display(), s.reason);
        }
        println!(
            "indexed {} stream(s), {:.1} s of timeline, {} file(s) skipped -> {}",
            map.streams.len(),
            map.audio_seconds(),
            map.skipped.len(),
            out.display()
        );
        exit::OK
    }))
}

// ---------------------------------------------------------------- validate

/// Parses and validates the parm-file against the indexed stream rates.
/// Reads the index only, never audio.
pub fn validate_with(registry: &Registry, cfg: &RunConfig, map: &ArchiveMap) -> Result<DetectorHandle, CliError> {
    let shown = cfg.parm_file.display();
    let parms = parse_parm_file(&cfg.parm_file).map_err(|e| CliError::Invalid(vec![format!("{shown}: {e}")]))?;
    let id = match (&cfg.detector_id, parms.detector_id.as_str()) {
        (Some(id), _) => id.clone(),
        (None, "") => {
            return Err(CliError::Invalid(vec![format!(
                "{shown}: no detector named; set `detector` in the parm-file or `detector_id` in the config"
            )]))
        }
        (None, id) => id.to_string(),
    };
    let Some(plugin) = registry.get(&id) else {
        let known = registry.ids().collect::<Vec<_>>().join(", ");
        return Err(CliError::Invalid(vec![format!("unknown detector `{id}` (available: {known})")]));
    };
    match validate_for_streams(parms, plugin.descriptor(), &map.streams) {
        Ok(v) => Ok(DetectorHandle::new(plugin, v)),
        Err(violations) => Err(CliError::Invalid(violations.iter().map(|v| format!("{shown}: {v}")).collect())),
    }
}

fn load_index(cfg: &RunConfig) -> Result<ArchiveMap, CliError> {
    cfg.check()?;
    Ok(ArchiveMap::load(&cfg.archive_index).map_err(|e| anyhow!(e))?)
}

pub fn validate(cfg: &RunConfig) -> Result<DetectorHandle, CliError> {
    validate_with(&Registry::builtin(), cfg, &load_index(cfg)?)
}

fn load_config(config: &Path, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(config)?;
    overrides.apply(&mut cfg);
    Ok(cfg)
}

pub fn cmd_validate(config: &Path, overrides: &Overrides) -> i32 {
    finish(load_config(config, overrides).and_then(|cfg| validate(&cfg)).map(|h| {
        println!("ok: {} parms valid for this archive", h.detector_id());
        exit::OK
    }))
}

// ---------------------------------------------------------------- run

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: RunReport,
    pub events: Vec<Event>,
    pub outcomes: Vec<BlockOutcome>,
    pub table_path: PathBuf,
    pub report_path: PathBuf,
}

impl RunSummary {
    pub fn all_blocks_failed(&self) -> bool {
        self.report.blocks.total() > 0 && self.report.blocks.ok == 0
    }

    /// What `run` exits with: failed blocks are tolerated unless all failed.
    pub fn exit_code(&self) -> i32 {
        if self.all_blocks_failed() {
            exit::ALL_BLOCKS_FAILED
        } else {
            exit::OK
        }
    }
}

/// Plan, detect, merge, write the table and the report.
///
/// ERT runs from just after the index is loaded to just after the table is
/// written. Block failures are reported, not raised.
pub fn run_with(registry: &Registry, cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let map = load_index(cfg)?;
    let started = Instant::now();
    let handle = validate_with(registry, cfg, &map)?;
    let workers = cfg.workers.resolve()?;
    let overlap_s = cfg.overlap_s.unwrap_or(2.0 * handle.descriptor().max_event_duration_s);
    let plans = plan_archive(&map, cfg.block_len_s, overlap_s).map_err(|e| anyhow!(e))?;
    info!(
        "{} block(s) over {} stream(s), {} worker(s)",
        plans.iter().map(|p| p.blocks.len()).sum::<usize>(),
        plans.len(),
        workers
    );
    let opts = ExecOptions { workers, integrity: cfg.integrity, progress: cfg.progress };
    let (outcomes, mut report) = execute_plans(&plans, &handle, &map, &opts);
    let events = merge_block_detections(&outcomes, cfg.iou_threshold);
    write_raven_table(&events, &cfg.output).map_err(|e| anyhow!(e))?;
    report.ert_seconds = started.elapsed().as_secs_f64();
    report.total_events = events.len();
    report.rate_xrt = compute_rate(report.audio_seconds, report.ert_seconds).map_err(|e| anyhow!(e))?;

    let report_path = cfg.report_path();
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    std::fs::write(&report_path, json + "\n")
        .with_context(|| format!("cannot write report {}", report_path.display()))?;
    Ok(RunSummary { report, events, outcomes, table_path: cfg.output.clone(), report_path })
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    run_with(&Registry::builtin(), cfg)
}

pub fn cmd_run(config: &Path, workers: Option<usize>, overrides: &Overrides) -> i32 {
    let result = load_config(config, overrides).and_then(|mut cfg| {
        if let Some(w) = workers {
            cfg.workers = Workers::Count(w);
        }
        run(&cfg)
    });
    finish(result.map(|s| {
        for o in s.outcomes.iter().filter(|o| !o.message.is_empty() && o.status.as_str() != "OK") {
            eprintln!("block {} {}: {}", o.block_id, o.status.as_str(), o.message);
        }
        let r = &s.report;
        println!(
            "{} event(s) -> {} | ERT {:.3} s, {:.1} xRT, {} worker(s) | blocks ok {}, failed {}",
            r.total_events,
            s.table_path.display(),
            r.ert_seconds,
            r.rate_xrt,
            r.workers,
            r.blocks.ok,
            r.blocks.failed()
        );
        if s.all_blocks_failed() {
            eprintln!("error: all {} blocks failed", r.blocks.total());
        }
        s.exit_code()
    }))
}

// ---------------------------------------------------------------- bench

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub workers: usize,
    pub ert_seconds: f64,
    pub events: usize,
    pub rate_xrt: f64,
    pub table_path: PathBuf,
}

pub const BENCH_HEADER: &str = "Number of Cores  ERT (s)  Number of Events  Rate (xRT)";

pub fn format_bench_table(rows: &[BenchRow]) -> String {
    let mut out = format!("{BENCH_HEADER}\n");
    for r in rows {
        out += &format!("{:>15}  {:>7.3}  {:>16}  {:>10.1}\n", r.workers, r.ert_seconds, r.events, r.rate_xrt);
    }
    out
}

/// Runs the same configuration once per worker count, sequentially, each
/// writing `<stem>.w<N>.<ext>`. Any difference in the merged event lists
/// fails the bench.
pub fn bench(cfg: &RunConfig, worker_list: &[usize]) -> Result<Vec<BenchRow>, (Vec<BenchRow>, CliError)> {
    if worker_list.is_empty() || worker_list.contains(&0) || !worker_list.is_sorted() {
        let e = anyhow!("worker list must be nonempty, ascending and positive, got {worker_list:?}");
        return Err((Vec::new(), e.into()));
    }
    let ext = cfg.output.extension().map_or_else(|| "txt".into(), |e| e.to_string_lossy().into_owned());
    let mut rows = Vec::new();
    let mut first: Option<Vec<Event>> = None;
    let mut mismatch = Vec::new();
    for &w in worker_list {
        let mut c = cfg.clone();
        c.workers = Workers::Count(w);
        c.output = config::sibling(&cfg.output, &format!("w{w}.{ext}"));
        let s = match run(&c) {
            Ok(s) => s,
            Err(e) => return Err((rows, e)),
        };
        rows.push(BenchRow {
            workers: w,
            ert_seconds: s.report.ert_seconds,
            events: s.events.len(),
            rate_xrt: s.report.rate_xrt,
            table_path: s.table_path.clone(),
        });
        match &first {
            None => first = Some(s.events),
            Some(reference) if *reference != s.events => mismatch.push(w),
            Some(_) => {}
        }
    }
    if mismatch.is_empty() {
        Ok(rows)
    } else {
        let msg = format!("event lists differ from the {}-worker run at worker count(s) {mismatch:?}", worker_list[0]);
        Err((rows, CliError::BenchMismatch(msg)))
    }
}

pub fn cmd_bench(config: &Path, worker_list: &[usize], overrides: &Overrides) -> i32 {
    let cfg = match load_config(config, overrides) {
        Ok(c) => c,
        Err(e) => return finish(Err(e)),
    };
    let (rows, result) = match bench(&cfg, worker_list) {
        Ok(rows) => (rows, Ok(exit::OK)),
        Err((rows, e)) => (rows, Err(e)),
    };
    if !rows.is_empty() {
        print!("{}", format_bench_table(&rows));
    }
    finish(result)
}

/// Reads a table written by [`run`]; convenience for comparing bench rows.
pub fn read_table(path: &Path) -> Result<Vec<Event>, CliError> {
    read_raven_table(path).map_err(|e| CliError::Other(anyhow!(e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_table_layout() {
        let rows = [
            BenchRow { workers: 1, ert_seconds: 450.2, events: 1194, rate_xrt: 8.0, table_path: "a".into() },
            BenchRow { workers: 12, ert_seconds: 76.3, events: 1194, rate_xrt: 47.18, table_path: "b".into() },
        ];
        let t = format_bench_table(&rows);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], BENCH_HEADER);
        assert_eq!(lines[1], "              1  450.200              1194         8.0");
        assert_eq!(lines[2], "             12   76.300              1194        47.2");
        assert!(lines.iter().all(|l| l.len() == BENCH_HEADER.len()));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::EmptyArchive("x".into()).exit_code(), 2);
        assert_eq!(CliError::Invalid(vec![]).exit_code(), 3);
        assert_eq!(CliError::BenchMismatch(String::new()).exit_code(), 5);
        assert_eq!(CliError::Other(anyhow!("x")).exit_code(), 1);
    }
}
