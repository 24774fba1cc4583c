//! Parm-file parsing.
//!
//! A parm-file is UTF-8 text with one `key = value` per line. `#` starts a
//! comment, surrounding whitespace is trimmed and keys are case-sensitive.
//! Values are typed on read: integers match `-?[0-9]+`, other numerics are
//! floats, `true`/`false` are booleans and anything else is kept verbatim as
//! a string.
//!
//! The reserved key `detector` names the detector a file configures; it is
//! lifted into [`ParmSet::detector_id`] rather than kept as an entry.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub const DETECTOR_KEY: &str = "detector";

#[derive(Debug, Clone, PartialEq)]
pub enum ParmValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl ParmValue {
    pub fn infer(raw: &str) -> Self {
        let digits = raw.strip_prefix('-').unwrap_or(raw);
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(v) = raw.parse::<i64>() {
                return ParmValue::Int(v);
            }
        }
        if raw.bytes().any(|b| b.is_ascii_digit()) {
            if let Ok(v) = raw.parse::<f64>() {
                if v.is_finite() {
                    return ParmValue::Float(v);
                }
            }
        }
        match raw {
            "true" => ParmValue::Bool(true),
            "false" => ParmValue::Bool(false),
            _ => ParmValue::Str(raw.to_string()),
        }
    }

    /// Numeric view; integers widen to float.
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParmValue::Int(v) => Some(v as f64),
            ParmValue::Float(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match *self {
            ParmValue::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            ParmValue::Bool(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParmValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            ParmValue::Int(_) => "int",
            ParmValue::Float(_) => "float",
            ParmValue::Bool(_) => "bool",
            ParmValue::Str(_) => "string",
        }
    }
}

impl fmt::Display for ParmValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParmValue::Int(v) => write!(f, "{v}"),
            ParmValue::Float(v) => write!(f, "{v:?}"),
            ParmValue::Bool(v) => write!(f, "{v}"),
            ParmValue::Str(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParmError {
    #[error("cannot read parm-file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { key: String, line: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
}

/// An ordered set of typed settings read from a parm-file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParmSet {
    pub detector_id: String,
    entries: Vec<(String, ParmValue)>,
    pub source_path: Option<PathBuf>,
    validated: bool,
}

impl ParmSet {
    pub fn new(detector_id: impl Into<String>) -> Self {
        Self { detector_id: detector_id.into(), ..Self::default() }
    }

    pub fn get(&self, key: &str) -> Option<&ParmValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    /// Inserts or replaces a value. Clears the validated flag.
    pub fn set(&mut self, key: impl Into<String>, value: ParmValue) {
        let key = key.into();
        self.validated = false;
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &ParmValue)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub(crate) fn mark_validated(&mut self) {
        self.validated = true;
    }
}

pub fn parse_parm_str(text: &str) -> Result<ParmSet, ParmError> {
    let mut set = ParmSet::default();
    let mut seen_detector = false;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ParmError::Syntax {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(ParmError::Syntax { line: line_no, message: "empty key".into() });
        }
        if key.chars().any(char::is_whitespace) {
            return Err(ParmError::Syntax { line: line_no, message: format!("key `{key}` contains whitespace") });
        }
        if value.is_empty() {
            return Err(ParmError::Syntax { line: line_no, message: format!("key `{key}` has no value") });
        }
        if key == DETECTOR_KEY {
            if seen_detector {
                return Err(ParmError::DuplicateKey { key: key.into(), line: line_no });
            }
            seen_detector = true;
            set.detector_id = value.to_string();
            continue;
        }
        if set.contains(key) {
            return Err(ParmError::DuplicateKey { key: key.into(), line: line_no });
        }
        set.entries.push((key.to_string(), ParmValue::infer(value)));
    }
    Ok(set)
}

pub fn parse_parm_file(path: impl AsRef<Path>) -> Result<ParmSet, ParmError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ParmError::Io { path: path.to_path_buf(), source })?;
    let mut set = parse_parm_str(&text)?;
    set.source_path = Some(path.to_path_buf());
    Ok(set)
}
