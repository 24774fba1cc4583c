//! Synthetic archives with injected tone bursts and known ground truth.

use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;

use crate::signal::{self, add_tone, to_i16, tone_amplitude_for_band_snr, white_noise};
use crate::wav;

/// 2016-10-01T00:00:00Z, used as the first file's timestamp.
pub const BASE_EPOCH: i64 = 1_475_280_000;

/// Filename timestamp format understood by the `filename:` rule.
pub const STAMP_FORMAT: &str = "%Y%m%d_%H%M%S";

#[derive(Debug, Clone)]
pub struct BurstSpec {
    pub rate: u32,
    pub duration_s: u32,
    pub file_len_s: u32,
    pub n_bursts: usize,
    pub burst_s: f64,
    pub tone_hz: f64,
    pub band_hz: (f64, f64),
    pub snr_db: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for BurstSpec {
    fn default() -> Self {
        Self {
            rate: 2000,
            duration_s: 600,
            file_len_s: 60,
            n_bursts: 20,
            burst_s: 2.0,
            tone_hz: 300.0,
            band_hz: (200.0, 400.0),
            snr_db: 20.0,
            noise_sigma: 0.01,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BurstArchive {
    pub files: Vec<PathBuf>,
    /// Ground-truth burst bounds in samples on the virtual timeline.
    pub bursts: Vec<(usize, usize)>,
    pub rate: u32,
}

impl BurstArchive {
    /// Writes back-to-back mono 16-bit WAV files into `dir`, named
    /// `<prefix>_<YYYYmmdd_HHMMSS>.wav`.
    pub fn write(dir: &Path, prefix: &str, spec: &BurstSpec) -> io::Result<Self> {
        let rate = spec.rate as usize;
        let total = spec.duration_s as usize * rate;
        let mut buf = white_noise(total, spec.noise_sigma, spec.seed);
        let mut bursts = Vec::with_capacity(spec.n_bursts);
        if let Some(slot) = total.checked_div(spec.n_bursts) {
            let amp =
                tone_amplitude_for_band_snr(spec.snr_db, spec.noise_sigma, spec.band_hz.1 - spec.band_hz.0, spec.rate);
            let len = (spec.burst_s * spec.rate as f64).round() as usize;
            let margin = slot / 5;
            let mut r = signal::rng(spec.seed ^ 0x5eed);
            for k in 0..spec.n_bursts {
                let lo = k * slot + margin;
                let hi = (k + 1) * slot - margin - len;
                let start = r.random_range(lo..hi.max(lo + 1));
                add_tone(&mut buf, spec.rate, spec.tone_hz, amp, start, len);
                bursts.push((start, start + len));
            }
        }
        let pcm = to_i16(&buf);
        let per_file = spec.file_len_s as usize * rate;
        let mut files = Vec::new();
        for (i, chunk) in pcm.chunks(per_file).enumerate() {
            let epoch = BASE_EPOCH + (i * spec.file_len_s as usize) as i64;
            let path = dir.join(format!("{prefix}_{}.wav", signal::stamp(epoch)));
            wav::write_mono16(&path, spec.rate, chunk)?;
            files.push(path);
        }
        Ok(Self { files, bursts, rate: spec.rate })
    }
}
