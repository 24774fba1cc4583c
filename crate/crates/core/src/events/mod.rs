//! Cross-block event merging and Raven selection tables.

mod merge;
mod raven;

pub use merge::{finalize, merge_block_detections, merge_events};
pub use raven::{
    format_raven_table, parse_raven_table, read_raven_table, write_raven_table, RavenError, RAVEN_HEADER, VIEW,
};

/// A detected event on the archive timeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Dense from 1 in table order.
    pub selection_id: usize,
    /// 1-based.
    pub channel: u16,
    /// Seconds from the stream origin.
    pub begin_time: f64,
    pub end_time: f64,
    pub low_freq: f64,
    pub high_freq: f64,
    pub score: f64,
    pub detector_id: String,
}
