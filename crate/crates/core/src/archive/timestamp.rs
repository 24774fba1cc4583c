//! Deriving file start times.
//!
//! Rules are written on the command line as:
//!
//! * `filename:<format>` with strftime-like fields (`%Y %y %m %d %j %H %M %S`,
//!   `%%` for a literal percent) searched anywhere in the file name,
//! * `cadence:<start_epoch_s>:<interval_s>` assigning start times to files
//!   in sorted path order,
//! * `sidecar` reading `start_time` from `<file>.meta`.
//!
//! With `filename:`, a sidecar is consulted when the name does not match;
//! when both give a time the filename wins.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::{NaiveDate, NaiveDateTime};
use log::warn;
use regex::Regex;
use thiserror::Error;

use crate::parm::{parse_parm_file, ParmValue};

#[derive(Debug, Clone, PartialEq)]
pub enum TimestampRule {
    Filename { format: String },
    Cadence { start: f64, interval_s: f64 },
    Sidecar,
}

#[derive(Debug, Error)]
pub enum TimestampError {
    #[error("bad timestamp rule: {0}")]
    BadRule(String),
    #[error("{path}: timestamp rule matches the name in more than one way ({candidates:?})")]
    Ambiguous { path: PathBuf, candidates: Vec<String> },
}

impl FromStr for TimestampRule {
    type Err = TimestampError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "sidecar" {
            return Ok(TimestampRule::Sidecar);
        }
        if let Some(format) = s.strip_prefix("filename:") {
            // Fail early on unsupported fields.
            compile_format(format)?;
            return Ok(TimestampRule::Filename { format: format.to_string() });
        }
        if let Some(rest) = s.strip_prefix("cadence:") {
            let parsed = rest.split_once(':').and_then(|(a, b)| Some((a.parse::<f64>().ok()?, b.parse::<f64>().ok()?)));
            return match parsed {
                Some((start, interval_s)) if start.is_finite() && interval_s > 0.0 => {
                    Ok(TimestampRule::Cadence { start, interval_s })
                }
                _ => Err(TimestampError::BadRule(format!("cannot parse cadence `{rest}`"))),
            };
        }
        Err(TimestampError::BadRule(format!("`{s}` (expected filename:<fmt>, cadence:<start>:<interval> or sidecar)")))
    }
}

impl fmt::Display for TimestampRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimestampRule::Filename { format } => write!(f, "filename:{format}"),
            TimestampRule::Cadence { start, interval_s } => write!(f, "cadence:{start}:{interval_s}"),
            TimestampRule::Sidecar => f.write_str("sidecar"),
        }
    }
}

fn compile_format(format: &str) -> Result<Regex, TimestampError> {
    let mut pattern = String::from("^(?:");
    let mut chars = format.chars();
    while let Some(c) = chars.next() {
        if c != '%' {
            pattern.push_str(&regex::escape(&c.to_string()));
            continue;
        }
        let field = match chars.next() {
            Some('Y') => r"\d{4}",
            Some('y' | 'm' | 'd' | 'H' | 'M' | 'S') => r"\d{2}",
            Some('j') => r"\d{3}",
            Some('%') => "%",
            Some(other) => return Err(TimestampError::BadRule(format!("unsupported field %{other}"))),
            None => return Err(TimestampError::BadRule("dangling %".into())),
        };
        pattern.push_str(field);
    }
    pattern.push(')');
    Regex::new(&pattern).map_err(|e| TimestampError::BadRule(e.to_string()))
}

/// A rule prepared for repeated use during a scan.
pub(crate) struct Resolver {
    rule: TimestampRule,
    regex: Option<Regex>,
}

impl Resolver {
    pub(crate) fn new(rule: &TimestampRule) -> Result<Self, TimestampError> {
        let regex = match rule {
            TimestampRule::Filename { format } => Some(compile_format(format)?),
            _ => None,
        };
        Ok(Self { rule: rule.clone(), regex })
    }

    /// Start time for the `index`-th file (in sorted order), if derivable.
    pub(crate) fn resolve(&self, path: &Path, index: usize) -> Result<Option<f64>, TimestampError> {
        match &self.rule {
            TimestampRule::Cadence { start, interval_s } => Ok(Some(start + index as f64 * interval_s)),
            TimestampRule::Sidecar => Ok(sidecar_start_time(path)),
            TimestampRule::Filename { format } => {
                let from_name = self.filename_time(path, format)?;
                let from_sidecar = sidecar_start_time(path);
                match (from_name, from_sidecar) {
                    (Some(a), Some(b)) if (a - b).abs() > 1e-6 => {
                        warn!("{}: filename time {a} disagrees with sidecar time {b}; using filename", path.display());
                        Ok(Some(a))
                    }
                    (Some(a), _) => Ok(Some(a)),
                    (None, b) => Ok(b),
                }
            }
        }
    }

    fn filename_time(&self, path: &Path, format: &str) -> Result<Option<f64>, TimestampError> {
        let regex = self.regex.as_ref().expect("filename rule has a regex");
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            return Ok(None);
        };
        let mut found: Vec<(String, f64)> = Vec::new();
        for (pos, _) in name.char_indices() {
            let Some(m) = regex.find(&name[pos..]) else { continue };
            let Some(dt) = parse_datetime(m.as_str(), format) else { continue };
            let t = dt.and_utc().timestamp() as f64;
            if !found.iter().any(|(_, v)| *v == t) {
                found.push((m.as_str().to_string(), t));
            }
        }
        match found.len() {
            0 => Ok(None),
            1 => Ok(Some(found[0].1)),
            _ => Err(TimestampError::Ambiguous {
                path: path.to_path_buf(),
                candidates: found.into_iter().map(|(s, _)| s).collect(),
            }),
        }
    }
}

// Date-only formats mean midnight.
fn parse_datetime(text: &str, format: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(text, format)
        .ok()
        .or_else(|| NaiveDate::parse_from_str(text, format).ok()?.and_hms_opt(0, 0, 0))
}

/// `<file>.meta`, the per-file metadata sidecar.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn sidecar_start_time(path: &Path) -> Option<f64> {
    let meta = sidecar_path(path);
    if !meta.is_file() {
        return None;
    }
    let parms = match parse_parm_file(&meta) {
        Ok(p) => p,
        Err(e) => {
            warn!("{}: {e}", meta.display());
            return None;
        }
    };
    match parms.get("start_time")? {
        ParmValue::Str(s) => chrono::DateTime::parse_from_rfc3339(s)
            .map(|dt| dt.timestamp() as f64 + dt.timestamp_subsec_nanos() as f64 * 1e-9)
            .ok(),
        v => v.as_f64(),
    }
}
