use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::Event;

pub const RAVEN_HEADER: &str =
    "Selection\tView\tChannel\tBegin Time (s)\tEnd Time (s)\tLow Freq (Hz)\tHigh Freq (Hz)\tScore\tDetector";

pub const VIEW: &str = "Spectrogram 1";

const REQUIRED: [&str; 7] =
    ["Selection", "View", "Channel", "Begin Time (s)", "End Time (s)", "Low Freq (Hz)", "High Freq (Hz)"];

#[derive(Debug, Error)]
pub enum RavenError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("line {line}: {message}")]
    BadRow { line: usize, message: String },
}

/// Renders events as a selection table, header included.
pub fn format_raven_table(events: &[Event]) -> String {
    let mut out = String::with_capacity(64 * (events.len() + 1));
    out.push_str(RAVEN_HEADER);
    out.push('\n');
    for e in events {
        let _ = writeln!(
            out,
            "{}\t{VIEW}\t{}\t{:.6}\t{:.6}\t{:.1}\t{:.1}\t{:.6}\t{}",
            e.selection_id, e.channel, e.begin_time, e.end_time, e.low_freq, e.high_freq, e.score, e.detector_id
        );
    }
    out
}

pub fn write_raven_table(events: &[Event], path: &Path) -> Result<(), RavenError> {
    fs::write(path, format_raven_table(events)).map_err(|source| RavenError::Io { path: path.into(), source })
}

pub fn read_raven_table(path: &Path) -> Result<Vec<Event>, RavenError> {
    let text = fs::read_to_string(path).map_err(|source| RavenError::Io { path: path.into(), source })?;
    parse_raven_table(&text)
}

/// Parses a selection table, locating columns by header name. Columns
/// beyond the known ones are ignored; `Score` and `Detector` are optional.
pub fn parse_raven_table(text: &str) -> Result<Vec<Event>, RavenError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(RavenError::BadHeader("empty file".into()));
    };
    let names: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
    let col = |name: &str| names.iter().position(|n| *n == name);
    let missing: Vec<&str> = REQUIRED.iter().copied().filter(|n| col(n).is_none()).collect();
    if !missing.is_empty() {
        return Err(RavenError::BadHeader(format!("missing column(s): {}", missing.join(", "))));
    }
    let idx: Vec<usize> = REQUIRED.iter().map(|n| col(n).expect("checked above")).collect();
    let (score_col, detector_col) = (col("Score"), col("Detector"));

    let mut events = Vec::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let bad = |message: String| RavenError::BadRow { line: line_no, message };
        let field = |c: usize, name: &str| fields.get(c).copied().ok_or_else(|| bad(format!("no `{name}` field")));
        let num = |c: usize, name: &str| -> Result<f64, RavenError> {
            let f = field(c, name)?;
            f.trim().parse::<f64>().map_err(|_| bad(format!("`{name}` is not a number: `{f}`")))
        };
        let int = |c: usize, name: &str| -> Result<u64, RavenError> {
            let f = field(c, name)?;
            f.trim().parse::<u64>().map_err(|_| bad(format!("`{name}` is not an integer: `{f}`")))
        };
        let channel = int(idx[2], REQUIRED[2])?;
        let event = Event {
            selection_id: int(idx[0], REQUIRED[0])? as usize,
            channel: u16::try_from(channel).map_err(|_| bad(format!("channel {channel} out of range")))?,
            begin_time: num(idx[3], REQUIRED[3])?,
            end_time: num(idx[4], REQUIRED[4])?,
            low_freq: num(idx[5], REQUIRED[5])?,
            high_freq: num(idx[6], REQUIRED[6])?,
            score: match score_col {
                Some(c) => num(c, "Score")?,
                None => 0.0,
            },
            detector_id: match detector_col {
                Some(c) => field(c, "Detector")?.to_string(),
                None => String::new(),
            },
        };
        events.push(event);
    }
    Ok(events)
}
