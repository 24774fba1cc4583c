use std::collections::VecDeque;
use std::fs;
use std::ops::Range;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::SystemTime;

use log::warn;
use thiserror::Error;

use super::decode::{decode_file, decode_flac_into, DecodeError, Decoded};
use crate::archive::{ArchiveMap, FileSpan, FormatTag};

/// A contiguous slab of one stream's virtual timeline.
///
/// Samples where `validity` is false are padding and are exactly `0.0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBlock {
    pub stream_id: usize,
    pub start_sample: u64,
    pub samples: Vec<f32>,
    pub validity: Vec<bool>,
    pub sample_rate: u32,
}

impl SampleBlock {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn end_sample(&self) -> u64 {
        self.start_sample + self.samples.len() as u64
    }

    /// Maximal runs of valid samples, as block-relative ranges.
    pub fn valid_segments(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut run_start = None;
        for (i, &ok) in self.validity.iter().enumerate() {
            match (ok, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    out.push(s..i);
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = run_start {
            out.push(s..self.validity.len());
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaultKind {
    /// The file could not be opened (missing, permissions).
    Unavailable,
    /// The file opened but the region could not be decoded.
    Corrupt,
    Truncated,
}

/// A region of a served block that should have held recorded data but
/// could not be decoded; it is served as padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionFault {
    pub start_sample: u64,
    pub length: u64,
    pub path: PathBuf,
    pub kind: FaultKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRead {
    pub block: SampleBlock,
    /// The request ran past the end of the stream and was shortened.
    pub clamped: bool,
    pub faults: Vec<RegionFault>,
}

impl BlockRead {
    pub fn has_unavailable_file(&self) -> bool {
        self.faults.iter().any(|f| f.kind == FaultKind::Unavailable)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReadError {
    #[error("zero-length block requested")]
    ZeroLength,
    #[error("no stream {0} in archive")]
    UnknownStream(usize),
    #[error("start sample {start} beyond stream end {total}")]
    OutOfRange { start: u64, total: u64 },
}

// FLAC has no cheap seek here; whole decoded channels of files up to this
// many frames are kept per reader.
const CACHE_MAX_FRAMES: u64 = 1 << 25;
const CACHE_ENTRIES: usize = 2;

struct CacheEntry {
    path: PathBuf,
    channel: u16,
    len: u64,
    modified: Option<SystemTime>,
    samples: Arc<Vec<f32>>,
    /// Why decoding stopped early, if it did; `None` inside means truncation.
    fault: Option<Option<String>>,
}

/// Serves timeline ranges; one per worker lane.
///
/// The reader keeps a small cache of decoded FLAC channels. Cached data is
/// revalidated against the file's metadata before every use, so the cache
/// never changes what is returned.
pub struct BlockReader<'a> {
    map: &'a ArchiveMap,
    cache: VecDeque<CacheEntry>,
}

impl<'a> BlockReader<'a> {
    pub fn new(map: &'a ArchiveMap) -> Self {
        Self { map, cache: VecDeque::new() }
    }

    pub fn read_block(&mut self, stream_id: usize, start: u64, length: u64) -> Result<BlockRead, ReadError> {
        if length == 0 {
            return Err(ReadError::ZeroLength);
        }
        let stream = self.map.stream(stream_id).ok_or(ReadError::UnknownStream(stream_id))?;
        let total = stream.total_virtual_samples;
        if start >= total {
            return Err(ReadError::OutOfRange { start, total });
        }
        let end = start.saturating_add(length).min(total);
        let clamped = end - start < length;
        let n = (end - start) as usize;
        let mut samples = vec![0.0f32; n];
        let mut validity = vec![false; n];
        let mut faults = Vec::new();

        let first = stream.spans.partition_point(|s| s.virtual_end() <= start);
        for span in stream.spans[first..].iter().take_while(|s| s.virtual_start < end) {
            let lo = start.max(span.virtual_start);
            let hi = end.min(span.virtual_end());
            let frames = span.skip_frames + (lo - span.virtual_start)..span.skip_frames + (hi - span.virtual_start);
            let at = (lo - start) as usize;
            let (got, fault) = match self.decode(&span.file, frames, span.channel) {
                Ok(Decoded { samples: s, fault }) => {
                    let got = s.len();
                    samples[at..at + got].copy_from_slice(&s);
                    validity[at..at + got].fill(true);
                    (got as u64, fault)
                }
                Err(e) => (0, Some(e)),
            };
            if let Some(e) = fault {
                let kind = match e {
                    DecodeError::Unavailable { .. } => FaultKind::Unavailable,
                    DecodeError::TruncatedFile { .. } => FaultKind::Truncated,
                    _ => FaultKind::Corrupt,
                };
                warn!("stream {stream_id} samples {}..{hi}: {e}", lo + got);
                faults.push(RegionFault {
                    start_sample: lo + got,
                    length: hi - lo - got,
                    path: span.file.path.clone(),
                    kind,
                    message: e.to_string(),
                });
            }
        }
        Ok(BlockRead {
            block: SampleBlock { stream_id, start_sample: start, samples, validity, sample_rate: stream.sample_rate },
            clamped,
            faults,
        })
    }

    fn decode(&mut self, file: &FileSpan, frames: Range<u64>, channel: u16) -> Result<Decoded, DecodeError> {
        if file.format_tag != FormatTag::Flac || file.sample_count > CACHE_MAX_FRAMES {
            return decode_file(file, frames, channel);
        }
        let meta =
            fs::metadata(&file.path).map_err(|source| DecodeError::Unavailable { path: file.path.clone(), source })?;
        let modified = meta.modified().ok();
        let hit = self
            .cache
            .iter()
            .position(|e| e.path == file.path && e.channel == channel && e.len == meta.len() && e.modified == modified);
        let entry = match hit {
            Some(i) => &self.cache[i],
            None => {
                let mut samples = Vec::new();
                let fault = decode_flac_into(file, 0..file.sample_count, channel, &mut samples)?;
                if self.cache.len() == CACHE_ENTRIES {
                    self.cache.pop_front();
                }
                self.cache.push_back(CacheEntry {
                    path: file.path.clone(),
                    channel,
                    len: meta.len(),
                    modified,
                    samples: Arc::new(samples),
                    fault: fault.map(|e| match e {
                        DecodeError::TruncatedFile { .. } => None,
                        DecodeError::CorruptContainer { reason, .. } => Some(reason),
                        other => Some(other.to_string()),
                    }),
                });
                self.cache.back().expect("just pushed")
            }
        };
        let avail = entry.samples.len() as u64;
        let lo = frames.start.min(avail) as usize;
        let hi = frames.end.min(avail) as usize;
        let samples = entry.samples[lo..hi].to_vec();
        let fault = if (hi as u64) < frames.end {
            Some(match &entry.fault {
                Some(Some(reason)) => DecodeError::CorruptContainer { path: file.path.clone(), reason: reason.clone() },
                _ => DecodeError::TruncatedFile {
                    path: file.path.clone(),
                    decoded: (hi - lo) as u64,
                    requested: frames.end - frames.start,
                },
            })
        } else {
            None
        };
        Ok(Decoded { samples, fault })
    }
}

/// Reads `length` samples of a stream starting at virtual index `start`.
///
/// Gaps and undecodable regions come back as zeros with `validity = false`;
/// decode problems are reported in [`BlockRead::faults`] instead of failing.
pub fn read_block(map: &ArchiveMap, stream_id: usize, start: u64, length: u64) -> Result<BlockRead, ReadError> {
    BlockReader::new(map).read_block(stream_id, start, length)
}
