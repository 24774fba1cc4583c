//! The plugin seam between the engine and detection algorithms.
//!
//! A plugin describes its configuration with a [`DetectorDescriptor`]; the
//! engine validates a parm-file against it before any audio is read, then
//! each worker lane builds a private [`Detector`] instance. Algorithms only
//! ever see the slices the wrapper hands them: with
//! `requires_contiguous_valid_data` set, those slices contain no padding.

mod registry;
mod validate;
mod wrapper;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::parm::{ParmSet, ParmValue};

pub use registry::Registry;
pub use validate::{validate_for_streams, validate_parms, ValidatedParms, Violation};
pub(crate) use wrapper::panic_text;
pub use wrapper::{run_detector, run_instance, DetectorError};

/// A detection in virtual sample indices of its stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDetection {
    pub begin_sample: u64,
    /// Exclusive.
    pub end_sample: u64,
    pub low_freq: f64,
    pub high_freq: f64,
    pub score: f64,
    pub detector_id: String,
}

/// A detection as an algorithm reports it, relative to the slice it was given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub begin: usize,
    /// Exclusive.
    pub end: usize,
    pub low_freq: f64,
    pub high_freq: f64,
    pub score: f64,
}

/// What an algorithm is handed for one invocation.
#[derive(Debug, Clone, Copy)]
pub struct AnalysisInput<'a> {
    pub samples: &'a [f32],
    /// Present only for mask-tolerant detectors; `None` means all valid.
    pub validity: Option<&'a [bool]>,
    /// Virtual index of `samples[0]`.
    pub origin: u64,
    pub sample_rate: u32,
}

#[derive(Debug, Error)]
#[error("{0}")]
pub struct AnalysisError(pub String);

impl From<String> for AnalysisError {
    fn from(s: String) -> Self {
        Self(s)
    }
}

impl From<&str> for AnalysisError {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

/// One configured algorithm instance, owned by a single worker lane.
pub trait Detector: Send {
    /// Shortest slice worth analyzing; shorter valid segments are skipped.
    fn min_window(&self) -> usize;

    fn analyze(&mut self, input: &AnalysisInput<'_>) -> Result<Vec<Detection>, AnalysisError>;
}

pub trait DetectorPlugin: Send + Sync {
    fn descriptor(&self) -> &DetectorDescriptor;

    /// Builds an instance for streams at `sample_rate`. Must be cheap and
    /// free of side effects; the engine calls it once per lane and rate.
    fn instantiate(&self, parms: &ValidatedParms, sample_rate: u32) -> Result<Box<dyn Detector>, AnalysisError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParmType {
    Int,
    Float,
    Bool,
    Str,
}

impl ParmType {
    fn admits(self, value: &ParmValue) -> bool {
        matches!(
            (self, value),
            (ParmType::Int, ParmValue::Int(_))
                | (ParmType::Float, ParmValue::Int(_) | ParmValue::Float(_))
                | (ParmType::Bool, ParmValue::Bool(_))
                | (ParmType::Str, ParmValue::Str(_))
        )
    }
}

impl fmt::Display for ParmType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParmType::Int => "int",
            ParmType::Float => "float",
            ParmType::Bool => "bool",
            ParmType::Str => "string",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Inclusive(f64),
    Exclusive(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeySpec {
    pub key: &'static str,
    pub ty: ParmType,
    pub min: Option<Bound>,
    pub max: Option<Bound>,
    pub default: Option<ParmValue>,
    /// Absent and without default is a violation.
    pub required: bool,
    pub doc: &'static str,
}

impl KeySpec {
    pub fn new(key: &'static str, ty: ParmType, doc: &'static str) -> Self {
        Self { key, ty, min: None, max: None, default: None, required: false, doc }
    }

    pub fn required(mut self) -> Self {
        self.required = true;
        self
    }

    pub fn default(mut self, value: ParmValue) -> Self {
        self.default = Some(value);
        self
    }

    pub fn min(mut self, bound: Bound) -> Self {
        self.min = Some(bound);
        self
    }

    pub fn max(mut self, bound: Bound) -> Self {
        self.max = Some(bound);
        self
    }
}

/// Relations between keys, checked once every key has a value.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    LessOrEqual(&'static str, &'static str),
    LessThan(&'static str, &'static str),
    /// Value must not exceed half the stream's sample rate.
    WithinNyquist(&'static str),
    PowerOfTwo(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectorDescriptor {
    pub detector_id: &'static str,
    pub display_name: &'static str,
    pub keys: Vec<KeySpec>,
    pub constraints: Vec<Constraint>,
    /// Longest event the detector can report, in seconds; sizes block overlap.
    pub max_event_duration_s: f64,
    pub requires_contiguous_valid_data: bool,
    pub min_sample_rate: u32,
}

impl DetectorDescriptor {
    pub fn key(&self, key: &str) -> Option<&KeySpec> {
        self.keys.iter().find(|k| k.key == key)
    }
}

/// A plugin bound to validated parameters. Cheap to clone and share.
#[derive(Clone)]
pub struct DetectorHandle {
    plugin: Arc<dyn DetectorPlugin>,
    parms: Arc<ValidatedParms>,
}

impl DetectorHandle {
    pub fn new(plugin: Arc<dyn DetectorPlugin>, parms: ValidatedParms) -> Self {
        Self { plugin, parms: Arc::new(parms) }
    }

    pub fn descriptor(&self) -> &DetectorDescriptor {
        self.plugin.descriptor()
    }

    pub fn detector_id(&self) -> &str {
        self.descriptor().detector_id
    }

    pub fn parms(&self) -> &ValidatedParms {
        &self.parms
    }

    pub fn instantiate(&self, sample_rate: u32) -> Result<Box<dyn Detector>, AnalysisError> {
        self.plugin.instantiate(&self.parms, sample_rate)
    }
}

impl fmt::Debug for DetectorHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DetectorHandle").field("detector_id", &self.detector_id()).field("parms", &self.parms).finish()
    }
}

/// Parses, validates against `streams` and binds in one step.
pub fn configure(
    registry: &Registry,
    parms: ParmSet,
    streams: &[crate::archive::ChannelStream],
) -> Result<DetectorHandle, Vec<Violation>> {
    let Some(plugin) = registry.get(&parms.detector_id) else {
        return Err(vec![Violation::general(format!(
            "unknown detector `{}` (available: {})",
            parms.detector_id,
            registry.ids().collect::<Vec<_>>().join(", ")
        ))]);
    };
    let validated = validate_for_streams(parms, plugin.descriptor(), streams)?;
    Ok(DetectorHandle::new(plugin, validated))
}
