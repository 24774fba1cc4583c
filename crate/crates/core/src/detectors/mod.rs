//! Reference spectrogram detectors.
//!
//! Both detectors place their analysis frames on multiples of `hop` on the
//! stream's virtual axis, not relative to the slice they are handed. A burst
//! is therefore analyzed by the same frames whichever block contains it,
//! which keeps merged results stable across block plans.
//!
//! These are reference implementations of the plugin contract; they make no
//! claim of fidelity to any published detector.

mod band_energy;
mod grouping;
mod noise;
mod power_law;
mod stft;

use std::ops::Range;

pub use band_energy::{band_level_db, BandEnergy, BandEnergyConfig};
pub use grouping::DetectionCurve;
pub use noise::{running_median, running_percentile};
pub use power_law::{power_law_statistic, PowerLaw, PowerLawConfig};
pub use stft::{hann, stft, Spectrogram, Stft, StftError};

use crate::detector::{AnalysisInput, Bound, Constraint, KeySpec, ParmType, ValidatedParms};
use crate::parm::ParmValue;

/// Longest event either reference detector claims to report, in seconds.
pub const MAX_EVENT_DURATION_S: f64 = 30.0;

/// Added to energies before taking ratios so silence gives ratio 1, not NaN.
pub(crate) const FLOOR_EPS: f64 = 1e-30;

/// Frame geometry and grouping shared by both detectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Framing {
    pub nfft: usize,
    pub hop: usize,
    pub nu_frames: usize,
    pub min_duration_s: f64,
    pub hangover_s: f64,
}

impl Default for Framing {
    fn default() -> Self {
        Self { nfft: 512, hop: 256, nu_frames: 61, min_duration_s: 0.5, hangover_s: 0.3 }
    }
}

impl Framing {
    pub(crate) fn from_parms(p: &ValidatedParms) -> Self {
        Self {
            nfft: p.usize("nfft"),
            hop: p.usize("hop"),
            nu_frames: p.usize("nu_frames"),
            min_duration_s: p.f64("min_duration_s"),
            hangover_s: p.f64("hangover_s"),
        }
    }

    pub fn min_frames(&self, sample_rate: u32) -> usize {
        ((self.min_duration_s * sample_rate as f64 / self.hop as f64).ceil() as usize).max(1)
    }

    pub fn hangover_frames(&self, sample_rate: u32) -> usize {
        (self.hangover_s * sample_rate as f64 / self.hop as f64).round() as usize
    }

    /// Shortest slice guaranteed to hold one aligned frame.
    pub fn min_window(&self) -> usize {
        self.nfft + self.hop - 1
    }

    pub(crate) fn curve(&self, values: Vec<f64>, threshold: f64, sample_rate: u32) -> DetectionCurve {
        DetectionCurve {
            values,
            threshold,
            min_duration_frames: self.min_frames(sample_rate),
            hangover_frames: self.hangover_frames(sample_rate),
        }
    }

    /// Samples to skip so frame 0 starts on a multiple of `hop`.
    pub fn lead(&self, origin: u64) -> usize {
        let hop = self.hop as u64;
        ((hop - origin % hop) % hop) as usize
    }

    /// Slice-relative sample bounds of a frame group, with `lead` samples
    /// skipped before frame 0. Each frame stands for the `hop` samples
    /// around its center.
    pub fn sample_bounds(&self, lead: usize, frames: &Range<usize>, len: usize) -> (usize, usize) {
        let center = |f: usize| lead + f * self.hop + self.nfft / 2;
        let begin = center(frames.start) - self.hop / 2;
        let end = (center(frames.end - 1) + self.hop.div_ceil(2)).min(len);
        (begin, end)
    }
}

/// Spectrogram of `input` on the hop-aligned frame grid, with the lead
/// offset, or `None` if no aligned frame fits.
pub(crate) fn aligned_spectrogram(
    stft: &mut Stft,
    framing: &Framing,
    input: &AnalysisInput<'_>,
) -> Option<(usize, Spectrogram)> {
    let lead = framing.lead(input.origin);
    let tail = input.samples.get(lead..)?;
    let spec = stft.compute(tail, input.origin + lead as u64, input.sample_rate).ok()?;
    Some((lead, spec))
}

pub(crate) fn framing_keys() -> Vec<KeySpec> {
    vec![
        KeySpec::new("nfft", ParmType::Int, "FFT length in samples")
            .default(ParmValue::Int(512))
            .min(Bound::Inclusive(16.0))
            .max(Bound::Inclusive(65536.0)),
        KeySpec::new("hop", ParmType::Int, "frame advance in samples")
            .default(ParmValue::Int(256))
            .min(Bound::Inclusive(1.0)),
        KeySpec::new("nu_frames", ParmType::Int, "noise-floor window in frames")
            .default(ParmValue::Int(61))
            .min(Bound::Inclusive(1.0)),
        KeySpec::new("min_duration_s", ParmType::Float, "shortest reported event")
            .default(ParmValue::Float(0.5))
            .min(Bound::Inclusive(0.0))
            .max(Bound::Inclusive(MAX_EVENT_DURATION_S)),
        KeySpec::new("hangover_s", ParmType::Float, "longest dip that does not split an event")
            .default(ParmValue::Float(0.3))
            .min(Bound::Inclusive(0.0)),
    ]
}

pub(crate) fn framing_constraints() -> Vec<Constraint> {
    vec![Constraint::PowerOfTwo("nfft"), Constraint::LessOrEqual("hop", "nfft")]
}
