//! Decoding and block serving.

mod block;
mod decode;
mod integrity;

pub use block::{read_block, BlockRead, BlockReader, FaultKind, ReadError, RegionFault, SampleBlock};
pub use decode::{decode_file, probe_file, DecodeError, Decoded, ProbeInfo, RawEncoding, RawLayout};
pub use integrity::{check_integrity, IntegrityReport, IntegrityThresholds, Verdict, CLIP_LEVEL};
