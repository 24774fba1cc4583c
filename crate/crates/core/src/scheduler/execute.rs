use std::collections::HashMap;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::report::{summarize, RunReport};
use super::{Block, BlockPlan};
use crate::archive::ArchiveMap;
use crate::audio::{check_integrity, BlockReader, IntegrityThresholds, Verdict};
use crate::detector::{panic_text, run_instance, Detector, DetectorHandle, RawDetection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BlockStatus {
    Ok,
    IntegrityFail,
    DetectorError,
    IoError,
}

impl BlockStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockStatus::Ok => "OK",
            BlockStatus::IntegrityFail => "INTEGRITY_FAIL",
            BlockStatus::DetectorError => "DETECTOR_ERROR",
            BlockStatus::IoError => "IO_ERROR",
        }
    }
}

/// The result of one block. Detections are empty unless the status is OK.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutcome {
    pub block_id: usize,
    pub stream_id: usize,
    /// Zero-based source channel of the stream.
    pub channel: u16,
    pub start_sample: u64,
    /// Samples actually served, which may be less than planned at the
    /// stream end.
    pub length: u64,
    pub sample_rate: u32,
    pub status: BlockStatus,
    pub detections: Vec<RawDetection>,
    pub elapsed: f64,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExecOptions {
    pub workers: usize,
    pub integrity: IntegrityThresholds,
    /// Emit a `PROGRESS` line on stderr per completed block.
    pub progress: bool,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self { workers: 1, integrity: IntegrityThresholds::default(), progress: false }
    }
}

/// Runs one plan. See [`execute_plans`].
pub fn execute(
    plan: &BlockPlan,
    detector: &DetectorHandle,
    map: &ArchiveMap,
    opts: &ExecOptions,
) -> (Vec<BlockOutcome>, RunReport) {
    execute_plans(std::slice::from_ref(plan), detector, map, opts)
}

/// Runs every block of `plans` on `opts.workers` lanes.
///
/// Each lane claims blocks in id order from a shared cursor and owns its
/// own reader and detector instances; outcomes flow to this thread over a
/// channel. Every block gets exactly one outcome and no block failure stops
/// the run. Outcomes come back sorted by block id.
pub fn execute_plans(
    plans: &[BlockPlan],
    detector: &DetectorHandle,
    map: &ArchiveMap,
    opts: &ExecOptions,
) -> (Vec<BlockOutcome>, RunReport) {
    let started = Instant::now();
    let mut blocks: Vec<Block> = plans.iter().flat_map(|p| p.blocks.iter().copied()).collect();
    blocks.sort_by_key(|b| (b.block_id, b.stream_id));
    let total = blocks.len();
    let workers = opts.workers.max(1);
    let lanes = workers.min(total.max(1));
    let cursor = AtomicUsize::new(0);
    let mut outcomes = Vec::with_capacity(total);

    thread::scope(|scope| {
        let (tx, rx) = mpsc::channel::<BlockOutcome>();
        for _ in 0..lanes {
            let tx = tx.clone();
            let (blocks, cursor) = (&blocks, &cursor);
            scope.spawn(move || {
                let mut lane = Lane::new(map, detector, opts.integrity);
                loop {
                    let i = cursor.fetch_add(1, Ordering::Relaxed);
                    let Some(block) = blocks.get(i) else { break };
                    if tx.send(lane.run(block)).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);
        let stderr = std::io::stderr();
        for outcome in rx {
            if opts.progress {
                let _ = writeln!(
                    stderr.lock(),
                    "PROGRESS {}/{} {} {} {:.3}",
                    outcome.block_id,
                    total,
                    outcome.status.as_str(),
                    outcome.detections.len(),
                    outcome.elapsed
                );
            }
            outcomes.push(outcome);
        }
    });

    outcomes.sort_by_key(|o| (o.block_id, o.stream_id));
    let audio_seconds = plans.iter().filter_map(|p| map.stream(p.stream_id)).map(|s| s.duration()).sum();
    let report =
        RunReport { ert_seconds: started.elapsed().as_secs_f64(), audio_seconds, workers, ..RunReport::default() };
    let report = summarize(&outcomes, report);
    (outcomes, report)
}

/// Per-lane state: a reader with its decode cache and one detector
/// instance per sample rate.
struct Lane<'a> {
    map: &'a ArchiveMap,
    handle: &'a DetectorHandle,
    thresholds: IntegrityThresholds,
    reader: BlockReader<'a>,
    instances: HashMap<u32, Box<dyn Detector>>,
}

impl<'a> Lane<'a> {
    fn new(map: &'a ArchiveMap, handle: &'a DetectorHandle, thresholds: IntegrityThresholds) -> Self {
        Self { map, handle, thresholds, reader: BlockReader::new(map), instances: HashMap::new() }
    }

    fn run(&mut self, block: &Block) -> BlockOutcome {
        let t0 = Instant::now();
        let (channel, rate) = self.map.stream(block.stream_id).map_or((0, 0), |s| (s.channel, s.sample_rate));
        let mut outcome = BlockOutcome {
            block_id: block.block_id,
            stream_id: block.stream_id,
            channel,
            start_sample: block.start_sample,
            length: block.length,
            sample_rate: rate,
            status: BlockStatus::Ok,
            detections: Vec::new(),
            elapsed: 0.0,
            message: String::new(),
        };
        let result = catch_unwind(AssertUnwindSafe(|| self.process(block, &mut outcome)));
        if let Err(payload) = result {
            // Something outside the detector wrapper broke; start the lane afresh.
            self.reader = BlockReader::new(self.map);
            self.instances.clear();
            outcome.status = BlockStatus::DetectorError;
            outcome.message = format!("internal panic: {}", panic_text(&*payload));
        }
        if outcome.status != BlockStatus::Ok {
            outcome.detections.clear();
        }
        outcome.elapsed = t0.elapsed().as_secs_f64();
        outcome
    }

    fn process(&mut self, block: &Block, out: &mut BlockOutcome) {
        let read = match self.reader.read_block(block.stream_id, block.start_sample, block.length) {
            Ok(r) => r,
            Err(e) => {
                out.status = BlockStatus::IoError;
                out.message = e.to_string();
                return;
            }
        };
        out.length = read.block.len() as u64;
        let faults: Vec<String> = read.faults.iter().map(|f| f.message.clone()).collect();
        if read.has_unavailable_file() {
            out.status = BlockStatus::IoError;
            out.message = faults.join("; ");
            return;
        }
        let integrity = check_integrity(&read.block, &self.thresholds);
        let mut notes = faults;
        match integrity.verdict {
            Verdict::Fail => {
                out.status = BlockStatus::IntegrityFail;
                notes.push(format!(
                    "valid fraction {:.3}, {} non-finite samples",
                    integrity.valid_fraction, integrity.nonfinite_count
                ));
                out.message = notes.join("; ");
                return;
            }
            Verdict::Degraded => notes.push(format!("degraded: {} clipped samples", integrity.clipped_count)),
            Verdict::Pass => {}
        }
        let rate = read.block.sample_rate;
        if !self.instances.contains_key(&rate) {
            match self.handle.instantiate(rate) {
                Ok(det) => {
                    self.instances.insert(rate, det);
                }
                Err(e) => {
                    out.status = BlockStatus::DetectorError;
                    notes.push(format!("cannot instantiate detector: {e}"));
                    out.message = notes.join("; ");
                    return;
                }
            }
        }
        let det = self.instances.get_mut(&rate).expect("inserted above");
        match run_instance(det.as_mut(), self.handle.descriptor(), &read.block) {
            Ok(found) => out.detections = found,
            Err(e) => {
                if e.poisons_instance() {
                    self.instances.remove(&rate);
                }
                out.status = BlockStatus::DetectorError;
                notes.push(e.to_string());
            }
        }
        out.message = notes.join("; ");
    }
}
