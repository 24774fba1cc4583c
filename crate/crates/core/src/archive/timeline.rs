use std::path::PathBuf;

use log::warn;
use thiserror::Error;

use super::{ChannelStream, FileSpan, FillPolicy, Gap, StreamSpan};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimelineError {
    #[error("spans mix sample rates {rates:?}")]
    MixedSampleRate { rates: Vec<u32> },
}

/// Adjustments made while laying files on the timeline.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TimelineNote {
    /// The file's head overlapped the previous file and was truncated.
    Overlap { path: PathBuf, frames: u64 },
    /// The file contributed no samples and was left out.
    Dropped { path: PathBuf, reason: String },
}

/// Lays the files that carry `channel` on one virtual timeline.
///
/// Sample 0 is the start of the earliest file. Start times are snapped to the
/// nearest sample; holes become gaps and overlaps keep the earlier file,
/// truncating the head of the later one.
pub fn build_timeline(spans: &[FileSpan], channel: u16) -> Result<(ChannelStream, Vec<TimelineNote>), TimelineError> {
    let mut files: Vec<&FileSpan> = spans.iter().filter(|s| s.channel_count > channel).collect();
    let Some(first) = files.first() else {
        return Ok((ChannelStream::empty(channel, 0), Vec::new()));
    };
    let rate = first.sample_rate;
    let mut rates: Vec<u32> = files.iter().map(|s| s.sample_rate).collect();
    rates.sort_unstable();
    rates.dedup();
    if rates.len() > 1 {
        return Err(TimelineError::MixedSampleRate { rates });
    }

    files.sort_by(|a, b| a.start_time.total_cmp(&b.start_time).then_with(|| a.path.cmp(&b.path)));
    // Empty files carry no samples and must not move the origin.
    let origin = files.iter().find(|f| f.sample_count > 0).map_or(files[0].start_time, |f| f.start_time);

    let mut stream = ChannelStream::empty(channel, rate);
    let mut notes = Vec::new();
    let mut cursor = 0u64;
    for file in files {
        if file.sample_count == 0 {
            notes.push(TimelineNote::Dropped { path: file.path.clone(), reason: "file has no samples".into() });
            continue;
        }
        let nominal = ((file.start_time - origin) * rate as f64).round().max(0.0) as u64;
        let (virtual_start, skip_frames) = if nominal >= cursor {
            if nominal > cursor {
                stream.gaps.push(Gap {
                    start_sample: cursor,
                    length: nominal - cursor,
                    fill_policy: FillPolicy::ZeroPad,
                });
            }
            (nominal, 0)
        } else {
            let overlap = cursor - nominal;
            if overlap >= file.sample_count {
                warn!("{} lies entirely inside earlier recordings; dropped", file.path.display());
                notes.push(TimelineNote::Dropped {
                    path: file.path.clone(),
                    reason: "fully overlapped by earlier files".into(),
                });
                continue;
            }
            warn!("{} overlaps the previous file by {overlap} samples; head truncated", file.path.display());
            notes.push(TimelineNote::Overlap { path: file.path.clone(), frames: overlap });
            (cursor, overlap)
        };
        let span = StreamSpan { file: file.clone(), channel, virtual_start, skip_frames };
        cursor = span.virtual_end();
        stream.spans.push(span);
    }
    stream.total_virtual_samples = cursor;
    Ok((stream, notes))
}
