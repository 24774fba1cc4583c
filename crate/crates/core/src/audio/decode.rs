//! Container decoding to normalized `f32` samples.
//!
//! Integer PCM of width N is divided by 2^(N-1), so the most negative code
//! maps to exactly -1.0. Float samples are clamped into [-1, 1]; non-finite
//! values pass through so the integrity check can see them.

use std::fs::File;
use std::io::{self, BufReader, Read, Seek, SeekFrom};
use std::ops::Range;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::archive::{FileSpan, FormatTag};
use crate::parm::{parse_parm_file, ParmValue};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("cannot open {path}: {source}")]
    Unavailable {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("corrupt container {path}: {reason}")]
    CorruptContainer { path: PathBuf, reason: String },
    #[error("{path} is truncated: decoded {decoded} of {requested} frames")]
    TruncatedFile { path: PathBuf, decoded: u64, requested: u64 },
    #[error("frame range {begin}..{end} outside {path} ({frames} frames)")]
    BadRange { path: PathBuf, begin: u64, end: u64, frames: u64 },
    #[error("channel {channel} outside {path} ({channels} channels)")]
    BadChannel { path: PathBuf, channel: u16, channels: u16 },
}

impl DecodeError {
    /// The file could not be opened at all, as opposed to decoding badly.
    pub fn is_unavailable(&self) -> bool {
        matches!(self, DecodeError::Unavailable { .. })
    }
}

/// Samples from one channel of a file. `fault` is set when only a prefix of
/// the requested range could be decoded.
#[derive(Debug)]
pub struct Decoded {
    pub samples: Vec<f32>,
    pub fault: Option<DecodeError>,
}

/// Header facts gathered while indexing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeInfo {
    pub sample_rate: u32,
    pub channel_count: u16,
    pub sample_count: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawEncoding {
    Int16Le,
    Float32Le,
}

impl RawEncoding {
    fn width(self) -> u64 {
        match self {
            RawEncoding::Int16Le => 2,
            RawEncoding::Float32Le => 4,
        }
    }
}

/// Layout of a headerless `.dat` recording, read from `<name>.dat.meta`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawLayout {
    pub sample_rate: u32,
    pub channels: u16,
    pub encoding: RawEncoding,
    pub header_bytes: u64,
}

impl RawLayout {
    pub fn frame_bytes(&self) -> u64 {
        self.channels as u64 * self.encoding.width()
    }

    pub fn from_sidecar(dat: &Path) -> Result<Self, String> {
        let meta = crate::archive::sidecar_path(dat);
        let parms = parse_parm_file(&meta).map_err(|e| e.to_string())?;
        let positive = |key: &str| -> Result<i64, String> {
            match parms.get(key) {
                Some(ParmValue::Int(v)) if *v > 0 => Ok(*v),
                Some(v) => Err(format!("sidecar key {key} must be a positive integer, got {v}")),
                None => Err(format!("sidecar {} lacks {key}", meta.display())),
            }
        };
        let sample_rate = u32::try_from(positive("sample_rate")?).map_err(|e| e.to_string())?;
        let channels = u16::try_from(positive("channels")?).map_err(|e| e.to_string())?;
        let encoding = match parms.get("encoding").and_then(ParmValue::as_str) {
            Some("int16le") => RawEncoding::Int16Le,
            Some("float32le") => RawEncoding::Float32Le,
            other => return Err(format!("unsupported sidecar encoding {other:?}")),
        };
        let header_bytes = match parms.get("header_bytes") {
            None => 0,
            Some(ParmValue::Int(v)) if *v >= 0 => *v as u64,
            Some(v) => return Err(format!("header_bytes must be a non-negative integer, got {v}")),
        };
        Ok(Self { sample_rate, channels, encoding, header_bytes })
    }
}

fn unavailable(path: &Path, source: io::Error) -> DecodeError {
    DecodeError::Unavailable { path: path.to_path_buf(), source }
}

fn corrupt(path: &Path, reason: impl ToString) -> DecodeError {
    DecodeError::CorruptContainer { path: path.to_path_buf(), reason: reason.to_string() }
}

fn open(path: &Path) -> Result<File, DecodeError> {
    File::open(path).map_err(|e| unavailable(path, e))
}

/// Reads just enough of a file to place it on a timeline.
pub fn probe_file(path: &Path, format: FormatTag) -> Result<ProbeInfo, DecodeError> {
    match format {
        FormatTag::Wav => {
            let reader = hound::WavReader::new(BufReader::new(open(path)?)).map_err(|e| corrupt(path, e))?;
            let spec = reader.spec();
            Ok(ProbeInfo {
                sample_rate: spec.sample_rate,
                channel_count: spec.channels,
                sample_count: reader.duration() as u64,
            })
        }
        FormatTag::Flac => {
            let reader = claxon::FlacReader::new(BufReader::new(open(path)?)).map_err(|e| corrupt(path, e))?;
            let info = reader.streaminfo();
            let sample_count = info.samples.ok_or_else(|| corrupt(path, "stream length not recorded in STREAMINFO"))?;
            Ok(ProbeInfo { sample_rate: info.sample_rate, channel_count: info.channels as u16, sample_count })
        }
        FormatTag::Rawdat => {
            let layout = RawLayout::from_sidecar(path).map_err(|r| corrupt(path, r))?;
            let len = std::fs::metadata(path).map_err(|e| unavailable(path, e))?.len();
            let payload = len.saturating_sub(layout.header_bytes);
            Ok(ProbeInfo {
                sample_rate: layout.sample_rate,
                channel_count: layout.channels,
                sample_count: payload / layout.frame_bytes(),
            })
        }
    }
}

fn check_request(span: &FileSpan, frames: &Range<u64>, channel: u16) -> Result<(), DecodeError> {
    if frames.start > frames.end || frames.end > span.sample_count {
        return Err(DecodeError::BadRange {
            path: span.path.clone(),
            begin: frames.start,
            end: frames.end,
            frames: span.sample_count,
        });
    }
    if channel >= span.channel_count {
        return Err(DecodeError::BadChannel { path: span.path.clone(), channel, channels: span.channel_count });
    }
    Ok(())
}

fn clamp_float(x: f32) -> f32 {
    if x.is_finite() {
        x.clamp(-1.0, 1.0)
    } else {
        x
    }
}

/// Decodes `frames` of one channel of a file.
///
/// Header and open failures are errors. Failures part-way through the data
/// return the decodable prefix with [`Decoded::fault`] set.
pub fn decode_file(span: &FileSpan, frames: Range<u64>, channel: u16) -> Result<Decoded, DecodeError> {
    check_request(span, &frames, channel)?;
    match span.format_tag {
        FormatTag::Wav => decode_wav(span, frames, channel),
        FormatTag::Flac => {
            let mut out = Vec::new();
            let fault = decode_flac_into(span, frames.clone(), channel, &mut out)?;
            Ok(Decoded { samples: out, fault })
        }
        FormatTag::Rawdat => decode_raw(span, frames, channel),
    }
}

fn truncated(span: &FileSpan, decoded: usize, requested: u64) -> DecodeError {
    DecodeError::TruncatedFile { path: span.path.clone(), decoded: decoded as u64, requested }
}

fn decode_wav(span: &FileSpan, frames: Range<u64>, channel: u16) -> Result<Decoded, DecodeError> {
    let path = &span.path;
    let mut reader = hound::WavReader::new(BufReader::new(open(path)?)).map_err(|e| corrupt(path, e))?;
    let spec = reader.spec();
    let n = frames.end - frames.start;
    let mut out = Vec::with_capacity(n as usize);
    if n == 0 {
        return Ok(Decoded { samples: out, fault: None });
    }
    let start = u32::try_from(frames.start).map_err(|_| corrupt(path, "frame offset exceeds WAV range"))?;
    if let Err(e) = reader.seek(start) {
        let fault = if e.kind() == io::ErrorKind::UnexpectedEof { truncated(span, 0, n) } else { corrupt(path, e) };
        return Ok(Decoded { samples: out, fault: Some(fault) });
    }
    let channels = spec.channels as usize;
    let wanted = n as usize * channels;
    let ch = channel as usize;
    let mut fault = None;
    match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            for (i, s) in reader.samples::<i32>().take(wanted).enumerate() {
                match s {
                    Ok(v) if i % channels == ch => out.push((v as f64 * scale) as f32),
                    Ok(_) => {}
                    Err(e) => {
                        fault = Some(truncated_or_corrupt(span, e, out.len(), n));
                        break;
                    }
                }
            }
        }
        hound::SampleFormat::Float => {
            for (i, s) in reader.samples::<f32>().take(wanted).enumerate() {
                match s {
                    Ok(v) if i % channels == ch => out.push(clamp_float(v)),
                    Ok(_) => {}
                    Err(e) => {
                        fault = Some(truncated_or_corrupt(span, e, out.len(), n));
                        break;
                    }
                }
            }
        }
    }
    if fault.is_none() && (out.len() as u64) < n {
        fault = Some(truncated(span, out.len(), n));
    }
    Ok(Decoded { samples: out, fault })
}

fn truncated_or_corrupt(span: &FileSpan, e: hound::Error, decoded: usize, requested: u64) -> DecodeError {
    match e {
        hound::Error::IoError(ref io) if io.kind() == io::ErrorKind::UnexpectedEof => {
            truncated(span, decoded, requested)
        }
        other => corrupt(&span.path, other),
    }
}

/// Streams FLAC blocks from the start of the file, keeping `frames`.
pub(crate) fn decode_flac_into(
    span: &FileSpan,
    frames: Range<u64>,
    channel: u16,
    out: &mut Vec<f32>,
) -> Result<Option<DecodeError>, DecodeError> {
    let path = &span.path;
    let mut reader = claxon::FlacReader::new(BufReader::new(open(path)?)).map_err(|e| corrupt(path, e))?;
    let bits = reader.streaminfo().bits_per_sample;
    let scale = 1.0 / (1u64 << (bits - 1)) as f64;
    let n = frames.end - frames.start;
    out.reserve(n as usize);
    let start_len = out.len();
    let mut position = 0u64;
    let mut blocks = reader.blocks();
    let mut buffer = Vec::new();
    while position < frames.end {
        match blocks.read_next_or_eof(buffer) {
            Ok(Some(block)) => {
                let len = block.duration() as u64;
                let lo = frames.start.max(position);
                let hi = frames.end.min(position + len);
                if lo < hi {
                    let samples = block.channel(channel as u32);
                    for &s in &samples[(lo - position) as usize..(hi - position) as usize] {
                        out.push((s as f64 * scale) as f32);
                    }
                }
                position += len;
                buffer = block.into_buffer();
            }
            Ok(None) => break,
            Err(claxon::Error::IoError(ref e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Ok(Some(truncated(span, out.len() - start_len, n)));
            }
            Err(e) => return Ok(Some(corrupt(path, e))),
        }
    }
    let got = out.len() - start_len;
    Ok(((got as u64) < n).then(|| truncated(span, got, n)))
}

fn decode_raw(span: &FileSpan, frames: Range<u64>, channel: u16) -> Result<Decoded, DecodeError> {
    let path = &span.path;
    let layout = RawLayout::from_sidecar(path).map_err(|r| corrupt(path, r))?;
    let mut file = open(path)?;
    let frame_bytes = layout.frame_bytes();
    let n = frames.end - frames.start;
    file.seek(SeekFrom::Start(layout.header_bytes + frames.start * frame_bytes)).map_err(|e| unavailable(path, e))?;
    let mut bytes = Vec::with_capacity((n * frame_bytes) as usize);
    let read = file.take(n * frame_bytes).read_to_end(&mut bytes);
    let mut fault = read.err().map(|e| corrupt(path, e));
    let width = layout.encoding.width() as usize;
    let offset = channel as usize * width;
    let samples: Vec<f32> = bytes
        .chunks_exact(frame_bytes as usize)
        .map(|frame| {
            let b = &frame[offset..offset + width];
            match layout.encoding {
                RawEncoding::Int16Le => i16::from_le_bytes([b[0], b[1]]) as f32 / 32768.0,
                RawEncoding::Float32Le => clamp_float(f32::from_le_bytes([b[0], b[1], b[2], b[3]])),
            }
        })
        .collect();
    if fault.is_none() && (samples.len() as u64) < n {
        fault = Some(truncated(span, samples.len(), n));
    }
    Ok(Decoded { samples, fault })
}
