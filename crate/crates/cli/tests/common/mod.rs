//! Fixtures shared by the CLI and acceptance suites.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use acoustic_miner_cli::{index, RunConfig, Workers};
use acoustic_miner_testkit::scenario::STAMP_FORMAT;
use acoustic_miner_testkit::{BurstArchive, BurstSpec};

pub const HOP: usize = 128;

/// Band-energy settings matched to the burst fixture (300 Hz tones, 2 kHz).
pub const BAND_PARMS: &str = "\
detector = band_energy
low_freq = 200
high_freq = 400
nfft = 256
hop = 128
nu_frames = 151
";

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub archive: BurstArchive,
    pub config: PathBuf,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn cfg(&self) -> RunConfig {
        RunConfig::load(&self.config).unwrap()
    }
}

pub fn timestamps() -> String {
    format!("filename:{STAMP_FORMAT}")
}

/// Writes the archive, indexes it and writes `run.json` next to it.
pub fn fixture(spec: &BurstSpec, parms: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let audio = dir.path().join("audio");
    fs::create_dir(&audio).unwrap();
    let archive = BurstArchive::write(&audio, "site", spec).unwrap();
    index(&audio, "*.wav", &timestamps(), &dir.path().join("map.json")).unwrap();
    fs::write(dir.path().join("detector.parm"), parms).unwrap();
    let mut cfg = RunConfig::new("map.json", "detector.parm", "events.txt");
    cfg.workers = Workers::Count(1);
    let config = dir.path().join("run.json");
    cfg.save(&config).unwrap();
    Fixture { dir, archive, config }
}

pub fn bursts() -> Fixture {
    fixture(&BurstSpec::default(), BAND_PARMS)
}

pub fn silence() -> Fixture {
    fixture(&BurstSpec { n_bursts: 0, noise_sigma: 0.0, ..BurstSpec::default() }, BAND_PARMS)
}

pub fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acoustic-miner")).args(args).output().unwrap()
}

pub fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}
