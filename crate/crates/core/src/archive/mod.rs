//! Archive indexing: files on disk to per-channel virtual timelines.
//!
//! Each channel of the archive becomes a [`ChannelStream`]: an integer sample
//! axis starting at the earliest recording, on which every file occupies a
//! span and every hole between files is an explicit [`Gap`]. The index is
//! immutable once built and serializes to JSON so indexing and detection can
//! run as separate steps.

mod scan;
mod timeline;
mod timestamp;

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use scan::{scan_archive, ScanError};
pub use timeline::{build_timeline, TimelineError, TimelineNote};
pub use timestamp::{sidecar_path, TimestampError, TimestampRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum FormatTag {
    Wav,
    Flac,
    Rawdat,
}

impl FormatTag {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "wav" | "wave" => Some(FormatTag::Wav),
            "flac" => Some(FormatTag::Flac),
            "dat" => Some(FormatTag::Rawdat),
            _ => None,
        }
    }
}

/// One sound file as it exists on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileSpan {
    pub path: PathBuf,
    /// Seconds since the Unix epoch, UTC.
    pub start_time: f64,
    pub sample_rate: u32,
    pub channel_count: u16,
    /// Frames in the file.
    pub sample_count: u64,
    pub format_tag: FormatTag,
}

impl FileSpan {
    pub fn duration(&self) -> f64 {
        self.sample_count as f64 / self.sample_rate as f64
    }
}

/// A file placed on a stream's virtual timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamSpan {
    #[serde(flatten)]
    pub file: FileSpan,
    /// Channel within the file that feeds this stream.
    pub channel: u16,
    pub virtual_start: u64,
    /// Leading frames dropped because an earlier file already covers them.
    #[serde(default)]
    pub skip_frames: u64,
}

impl StreamSpan {
    /// Frames this span contributes to the timeline.
    pub fn len(&self) -> u64 {
        self.file.sample_count - self.skip_frames
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn virtual_end(&self) -> u64 {
        self.virtual_start + self.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FillPolicy {
    #[default]
    ZeroPad,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub start_sample: u64,
    pub length: u64,
    #[serde(skip)]
    pub fill_policy: FillPolicy,
}

impl Gap {
    pub fn end_sample(&self) -> u64 {
        self.start_sample + self.length
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStream {
    pub stream_id: usize,
    /// Zero-based channel index within the source files.
    pub channel: u16,
    pub sample_rate: u32,
    pub spans: Vec<StreamSpan>,
    pub gaps: Vec<Gap>,
    pub total_virtual_samples: u64,
}

/// Where a virtual sample lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hit {
    Span { span: usize, frame: u64 },
    Gap { gap: usize, offset: u64 },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("virtual sample {sample} outside stream of {total} samples")]
pub struct OutOfRange {
    pub sample: u64,
    pub total: u64,
}

impl ChannelStream {
    pub fn empty(channel: u16, sample_rate: u32) -> Self {
        Self { stream_id: 0, channel, sample_rate, spans: Vec::new(), gaps: Vec::new(), total_virtual_samples: 0 }
    }

    pub fn duration(&self) -> f64 {
        self.total_virtual_samples as f64 / self.sample_rate as f64
    }

    /// Resolves a virtual sample to its owning span (with the frame offset
    /// inside the file) or its owning gap.
    pub fn locate(&self, sample: u64) -> Result<Hit, OutOfRange> {
        if sample >= self.total_virtual_samples {
            return Err(OutOfRange { sample, total: self.total_virtual_samples });
        }
        let idx = self.spans.partition_point(|s| s.virtual_start <= sample);
        if idx > 0 {
            let span = &self.spans[idx - 1];
            if sample < span.virtual_end() {
                return Ok(Hit::Span { span: idx - 1, frame: span.skip_frames + (sample - span.virtual_start) });
            }
        }
        let g = self.gaps.partition_point(|g| g.start_sample <= sample);
        debug_assert!(g > 0, "timeline has a hole at {sample}");
        let gap = &self.gaps[g - 1];
        debug_assert!(sample < gap.end_sample());
        Ok(Hit::Gap { gap: g - 1, offset: sample - gap.start_sample })
    }
}

/// Free-function form of [`ChannelStream::locate`].
pub fn locate(stream: &ChannelStream, sample: u64) -> Result<Hit, OutOfRange> {
    stream.locate(sample)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Error)]
pub enum IndexIoError {
    #[error("cannot access index {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed index {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMap {
    pub root: PathBuf,
    pub created_at: String,
    pub file_count: usize,
    pub streams: Vec<ChannelStream>,
    #[serde(default)]
    pub skipped: Vec<SkippedFile>,
}

impl ArchiveMap {
    pub fn new(root: PathBuf, streams: Vec<ChannelStream>, skipped: Vec<SkippedFile>) -> Self {
        let file_count = count_files(&streams);
        Self {
            root,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            file_count,
            streams,
            skipped,
        }
    }

    pub fn stream(&self, stream_id: usize) -> Option<&ChannelStream> {
        self.streams.iter().find(|s| s.stream_id == stream_id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("archive map is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexIoError> {
        let mut text = self.to_json();
        text.push('\n');
        fs::write(path, text).map_err(|source| IndexIoError::Io { path: path.into(), source })
    }

    pub fn load(path: &Path) -> Result<Self, IndexIoError> {
        let text = fs::read_to_string(path).map_err(|source| IndexIoError::Io { path: path.into(), source })?;
        Self::from_json(&text).map_err(|source| IndexIoError::Json { path: path.into(), source })
    }

    /// Total timeline duration across all streams, in channel-seconds.
    pub fn audio_seconds(&self) -> f64 {
        self.streams.iter().map(ChannelStream::duration).sum()
    }
}

fn count_files(streams: &[ChannelStream]) -> usize {
    streams.iter().flat_map(|s| s.spans.iter().map(|sp| &sp.file.path)).collect::<BTreeSet<_>>().len()
}
