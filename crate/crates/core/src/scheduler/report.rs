use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BlockOutcome, BlockStatus};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub ok: usize,
    pub integrity_fail: usize,
    pub detector_error: usize,
    pub io_error: usize,
}

impl BlockCounts {
    pub fn total(&self) -> usize {
        self.ok + self.integrity_fail + self.detector_error + self.io_error
    }

    pub fn failed(&self) -> usize {
        self.total() - self.ok
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    /// Wall-clock execution run time.
    pub ert_seconds: f64,
    /// Timeline length processed, gaps included, summed over streams.
    pub audio_seconds: f64,
    pub workers: usize,
    pub total_events: usize,
    /// Detections before cross-block merging.
    pub raw_detections: usize,
    pub rate_xrt: f64,
    pub blocks: BlockCounts,
    pub failed_block_ids: Vec<usize>,
}

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("execution time must be positive, got {0}")]
    ZeroErt(f64),
}

/// Seconds of audio processed per wall-clock second.
pub fn compute_rate(audio_seconds: f64, ert_seconds: f64) -> Result<f64, RateError> {
    if audio_seconds == 0.0 {
        return Ok(0.0);
    }
    if ert_seconds <= 0.0 || ert_seconds.is_nan() {
        return Err(RateError::ZeroErt(ert_seconds));
    }
    Ok(audio_seconds / ert_seconds)
}

/// Fills block counts, event totals and rate from `outcomes` into `report`,
/// whose timing fields are kept. `total_events` counts raw detections here;
/// callers that merge replace it with the merged count.
pub fn summarize(outcomes: &[BlockOutcome], report: RunReport) -> RunReport {
    let mut blocks = BlockCounts::default();
    let mut failed_block_ids = Vec::new();
    let mut raw = 0;
    for o in outcomes {
        match o.status {
            BlockStatus::Ok => blocks.ok += 1,
            BlockStatus::IntegrityFail => blocks.integrity_fail += 1,
            BlockStatus::DetectorError => blocks.detector_error += 1,
            BlockStatus::IoError => blocks.io_error += 1,
        }
        if o.status != BlockStatus::Ok {
            failed_block_ids.push(o.block_id);
        }
        raw += o.detections.len();
    }
    failed_block_ids.sort_unstable();
    let rate_xrt = compute_rate(report.audio_seconds, report.ert_seconds).unwrap_or(0.0);
    RunReport { total_events: raw, raw_detections: raw, rate_xrt, blocks, failed_block_ids, ..report }
}
