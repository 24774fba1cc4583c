use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;
use walkdir::WalkDir;

use super::timeline::{build_timeline, TimelineError, TimelineNote};
use super::timestamp::{Resolver, TimestampError};
use super::{ArchiveMap, FileSpan, FormatTag, SkippedFile, TimestampRule};
use crate::audio::probe_file;

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("no matching files under {0}")]
    EmptyArchive(PathBuf),
    #[error("archive root {0} is not a directory")]
    NotADirectory(PathBuf),
    #[error("bad file pattern `{pattern}`: {reason}")]
    BadPattern { pattern: String, reason: String },
    #[error(transparent)]
    Timestamp(#[from] TimestampError),
}

/// Indexes every file under `root` whose name matches `name_pattern`.
///
/// Files that cannot be probed or timestamped go to the skip list with a
/// reason. Headers are probed in parallel; the result does not depend on
/// the order in which that happens.
pub fn scan_archive(root: &Path, name_pattern: &str, rule: &TimestampRule) -> Result<ArchiveMap, ScanError> {
    if !root.is_dir() {
        return Err(ScanError::NotADirectory(root.to_path_buf()));
    }
    let pattern = glob::Pattern::new(name_pattern)
        .map_err(|e| ScanError::BadPattern { pattern: name_pattern.into(), reason: e.to_string() })?;
    let resolver = Resolver::new(rule)?;

    let mut candidates: Vec<PathBuf> = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .map(|e| e.into_path())
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            !name.ends_with(".meta") && pattern.matches(name)
        })
        .collect();
    candidates.sort();
    if candidates.is_empty() {
        return Err(ScanError::EmptyArchive(root.to_path_buf()));
    }

    let probed: Vec<Result<FileSpan, SkippedFile>> = candidates
        .par_iter()
        .enumerate()
        .map(|(index, path)| probe_one(path, index, &resolver))
        .collect::<Result<_, TimestampError>>()?;

    let mut files = Vec::new();
    let mut skipped = Vec::new();
    for r in probed {
        match r {
            Ok(f) => files.push(f),
            Err(s) => {
                warn!("skipping {}: {}", s.path.display(), s.reason);
                skipped.push(s);
            }
        }
    }

    let channels = files.iter().map(|f| f.channel_count).max().unwrap_or(0);
    let mut streams = Vec::new();
    for channel in 0..channels {
        let carrying: Vec<FileSpan> = files.iter().filter(|f| f.channel_count > channel).cloned().collect();
        let groups = match build_timeline(&carrying, channel) {
            Ok(built) => vec![built],
            Err(TimelineError::MixedSampleRate { rates }) => {
                warn!("channel {channel} mixes sample rates {rates:?}; splitting into one stream per rate");
                let mut by_rate: BTreeMap<u32, Vec<FileSpan>> = BTreeMap::new();
                for f in carrying {
                    by_rate.entry(f.sample_rate).or_default().push(f);
                }
                by_rate
                    .values()
                    .map(|group| build_timeline(group, channel))
                    .collect::<Result<Vec<_>, _>>()
                    .expect("single-rate groups always build")
            }
        };
        for (mut stream, notes) in groups {
            for note in notes {
                if let TimelineNote::Dropped { path, reason } = note {
                    if channel == 0 {
                        skipped.push(SkippedFile { path, reason });
                    }
                }
            }
            stream.stream_id = streams.len();
            streams.push(stream);
        }
    }
    skipped.sort_by(|a, b| a.path.cmp(&b.path));
    let map = ArchiveMap::new(root.to_path_buf(), streams, skipped);
    info!("indexed {} files into {} streams ({} skipped)", map.file_count, map.streams.len(), map.skipped.len());
    Ok(map)
}

fn probe_one(path: &Path, index: usize, resolver: &Resolver) -> Result<Result<FileSpan, SkippedFile>, TimestampError> {
    let skip = |reason: String| Ok(Err(SkippedFile { path: path.to_path_buf(), reason }));
    let Some(format_tag) = FormatTag::from_path(path) else {
        return skip("unsupported format".into());
    };
    let info = match probe_file(path, format_tag) {
        Ok(info) => info,
        Err(e) => return skip(e.to_string()),
    };
    if info.sample_rate == 0 || info.channel_count == 0 {
        return skip("header declares zero sample rate or channels".into());
    }
    let Some(start_time) = resolver.resolve(path, index)? else {
        return skip("no timestamp from filename or sidecar".into());
    };
    Ok(Ok(FileSpan {
        path: path.to_path_buf(),
        start_time,
        sample_rate: info.sample_rate,
        channel_count: info.channel_count,
        sample_count: info.sample_count,
        format_tag,
    }))
}
