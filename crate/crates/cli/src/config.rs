//! Run configuration files.
//!
//! A run is described by a JSON file. Relative paths inside it resolve
//! against the file's own directory, so a config and its inputs can move
//! together.

use std::fs;
use std::path::{Path, PathBuf};

use acoustic_miner::IntegrityThresholds;
use anyhow::{bail, Context};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub const DEFAULT_BLOCK_LEN_S: f64 = 600.0;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Worker count as written: a positive integer or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Workers {
    Count(usize),
    #[default]
    Auto,
}

impl Serialize for Workers {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Workers::Count(n) => s.serialize_u64(*n as u64),
            Workers::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for Workers {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Name(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) => Ok(Workers::Count(n)),
            Raw::Name(s) if s.eq_ignore_ascii_case("auto") => Ok(Workers::Auto),
            Raw::Name(s) => {
                Err(de::Error::custom(format!("workers must be a positive integer or \"auto\", got \"{s}\"")))
            }
        }
    }
}

impl Workers {
    /// Auto means every logical CPU.
    pub fn resolve(self) -> anyhow::Result<usize> {
        match self {
            Workers::Count(0) => bail!("workers must be at least 1"),
            Workers::Count(n) => Ok(n),
            Workers::Auto => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Archive map written by `index`.
    pub archive_index: PathBuf,
    /// Overrides the parm-file's `detector` line when given; the two must agree.
    #[serde(default)]
    pub detector_id: Option<String>,
    pub parm_file: PathBuf,
    /// Selection table to write.
    pub output: PathBuf,
    #[serde(default)]
    pub workers: Workers,
    #[serde(default = "default_block_len")]
    pub block_len_s: f64,
    /// Defaults to twice the detector's longest event.
    #[serde(default)]
    pub overlap_s: Option<f64>,
    #[serde(default)]
    pub integrity: IntegrityThresholds,
    #[serde(default = "default_iou")]
    pub iou_threshold: f64,
    /// Per-block progress lines on stderr.
    #[serde(default)]
    pub progress: bool,
}

fn default_block_len() -> f64 {
    DEFAULT_BLOCK_LEN_S
}

fn default_iou() -> f64 {
    DEFAULT_IOU_THRESHOLD
}

impl RunConfig {
    pub fn new(archive_index: impl Into<PathBuf>, parm_file: impl Into<PathBuf>, output: impl Into<PathBuf>) -> Self {
        Self {
            archive_index: archive_index.into(),
            detector_id: None,
            parm_file: parm_file.into(),
            output: output.into(),
            workers: Workers::Auto,
            block_len_s: DEFAULT_BLOCK_LEN_S,
            overlap_s: None,
            integrity: IntegrityThresholds::default(),
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            progress: false,
        }
    }

    /// Reads a config and makes its paths absolute relative to its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.archive_index, &mut cfg.parm_file, &mut cfg.output] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        fs::write(path, text + "\n").with_context(|| format!("cannot write config {}", path.display()))
    }

    /// Checks what can be checked without the archive.
    pub fn check(&self) -> anyhow::Result<()> {
        if !(self.block_len_s > 0.0 && self.block_len_s.is_finite()) {
            bail!("block_len_s must be positive, got {}", self.block_len_s);
        }
        if let Some(o) = self.overlap_s {
            if !(o >= 0.0 && o < self.block_len_s) {
                bail!("overlap_s must be in [0, block_len_s), got {o}");
            }
        }
        if !(self.iou_threshold > 0.0 && self.iou_threshold <= 1.0) {
            bail!("iou_threshold must be in (0, 1], got {}", self.iou_threshold);
        }
        for (what, p) in [("archive_index", &self.archive_index), ("parm_file", &self.parm_file)] {
            if !p.is_file() {
                bail!("{what} {} does not exist", p.display());
            }
        }
        Ok(())
    }

    /// `<dir>/<stem>.report.json` next to the table.
    pub fn report_path(&self) -> PathBuf {
        sibling(&self.output, "report.json")
    }
}

/// Command-line replacements for config fields; flags win over the file.
#[derive(Debug, Clone, Default, PartialEq, clap::Args)]
pub struct Overrides {
    /// Selection table to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub archive_index: Option<PathBuf>,
    #[arg(long)]
    pub parm_file: Option<PathBuf>,
    #[arg(long)]
    pub detector_id: Option<String>,
    #[arg(long)]
    pub block_len_s: Option<f64>,
    #[arg(long)]
    pub overlap_s: Option<f64>,
    #[arg(long)]
    pub iou_threshold: Option<f64>,
    #[arg(long)]
    pub min_valid_fraction: Option<f64>,
    #[arg(long)]
    pub clip_fraction: Option<f64>,
    /// Per-block progress lines on stderr.
    #[arg(long)]
    pub progress: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(p) = &self.out {
            cfg.output = p.clone();
        }
        if let Some(p) = &self.archive_index {
            cfg.archive_index = p.clone();
        }
        if let Some(p) = &self.parm_file {
            cfg.parm_file = p.clone();
        }
        if let Some(id) = &self.detector_id {
            cfg.detector_id = Some(id.clone());
        }
        if let Some(v) = self.block_len_s {
            cfg.block_len_s = v;
        }
        if let Some(v) = self.overlap_s {
            cfg.overlap_s = Some(v);
        }
        if let Some(v) = self.iou_threshold {
            cfg.iou_threshold = v;
        }
        if let Some(v) = self.min_valid_fraction {
            cfg.integrity.min_valid_fraction = v;
        }
        if let Some(v) = self.clip_fraction {
            cfg.integrity.clip_fraction = v;
        }
        cfg.progress |= self.progress;
    }
}

/// Replaces everything after the stem of `path` with `suffix`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "events".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.{suffix}"))
}
