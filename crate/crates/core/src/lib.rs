//! Block-parallel acoustic event detection over large sound archives.
//!
//! The pipeline is:
//!
//! 1. [`archive`] scans a directory of recordings and lays every channel out
//!    on a virtual timeline, recording dropouts as gaps.
//! 2. [`audio`] serves arbitrary timeline ranges as [`audio::SampleBlock`]s,
//!    zero-padding gaps and marking them invalid.
//! 3. [`scheduler`] cuts each timeline into overlapping blocks and runs a
//!    detector over them on a pool of worker lanes, isolating failures
//!    per block.
//! 4. [`detector`] is the plugin seam: parm-file configuration, pre-run
//!    validation and the wrapper that keeps padded samples away from
//!    algorithms. [`detectors`] holds the two built-in reference plugins.
//! 5. [`events`] merges per-block detections across block seams and reads
//!    and writes Raven selection tables.

pub mod archive;
pub mod audio;
pub mod detector;
pub mod detectors;
pub mod events;
pub mod parm;
pub mod scheduler;

pub use archive::{scan_archive, ArchiveMap, ChannelStream, FileSpan, TimestampRule};
pub use audio::{read_block, IntegrityThresholds, SampleBlock};
pub use detector::{DetectorHandle, Registry};
pub use events::{merge_block_detections, read_raven_table, write_raven_table, Event};
pub use parm::{parse_parm_file, ParmSet, ParmValue};
pub use scheduler::{execute, plan_blocks, BlockOutcome, BlockPlan, RunReport};
