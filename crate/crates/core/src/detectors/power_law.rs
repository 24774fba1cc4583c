use std::ops::Range;

use super::{
    aligned_spectrogram, framing_constraints, framing_keys, running_median, running_percentile, Framing, Spectrogram,
    Stft, FLOOR_EPS, MAX_EVENT_DURATION_S,
};
use crate::detector::{
    AnalysisError, AnalysisInput, Bound, Constraint, Detection, Detector, DetectorDescriptor, DetectorPlugin, KeySpec,
    ParmType, ValidatedParms,
};
use crate::parm::ParmValue;

// Floor for per-bin noise magnitudes. Far below 16-bit quantization, and
// large enough that whitened values raised to the maximum exponent stay finite.
const WHITEN_EPS: f64 = 1e-12;

const MAX_GAMMA: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawConfig {
    pub gamma: f64,
    /// Statistic over its running median that starts an event.
    pub threshold: f64,
    pub whiten_percentile: f64,
    /// Band edges; `None` means the full band.
    pub low_freq: Option<f64>,
    pub high_freq: Option<f64>,
    pub framing: Framing,
}

impl PowerLawConfig {
    pub fn from_parms(p: &ValidatedParms) -> Self {
        Self {
            gamma: p.f64("gamma"),
            threshold: p.f64("threshold"),
            whiten_percentile: p.f64("whiten_percentile"),
            low_freq: p.opt_f64("low_freq"),
            high_freq: p.opt_f64("high_freq"),
            framing: Framing::from_parms(p),
        }
    }

    fn band(&self, sample_rate: u32) -> (f64, f64) {
        (self.low_freq.unwrap_or(0.0), self.high_freq.unwrap_or(sample_rate as f64 / 2.0))
    }
}

/// Whitened magnitudes of `bins`, frames × bins, row-major. Each bin is
/// divided by its running percentile over time.
fn whiten(spec: &Spectrogram, nu_frames: usize, percentile: f64, bins: &Range<usize>) -> Vec<f64> {
    let nb = bins.len();
    let mut out = vec![0.0; spec.frames * nb];
    let mut series = vec![0.0; spec.frames];
    for (j, b) in bins.clone().enumerate() {
        for (f, v) in series.iter_mut().enumerate() {
            *v = spec.magnitudes[f * spec.bins + b];
        }
        let floor = running_percentile(&series, nu_frames, percentile);
        for f in 0..spec.frames {
            out[f * nb + j] = series[f] / (floor[f] + WHITEN_EPS);
        }
    }
    out
}

/// Per-frame sum over `bins` of whitened magnitude raised to `2·gamma`.
pub fn power_law_statistic(
    spec: &Spectrogram,
    gamma: f64,
    nu_frames: usize,
    percentile: f64,
    bins: Range<usize>,
) -> Vec<f64> {
    let nb = bins.len();
    let w = whiten(spec, nu_frames, percentile, &bins);
    w.chunks(nb).map(|row| row.iter().map(|x| x.powf(2.0 * gamma)).sum()).collect()
}

/// Frame groups above threshold with their peak ratio and frequency bounds.
pub(crate) fn detect_frames(spec: &Spectrogram, cfg: &PowerLawConfig) -> Vec<(Range<usize>, f64, f64, f64)> {
    let (low, high) = cfg.band(spec.sample_rate);
    let bins = spec.band_bins(low, high);
    let nb = bins.len();
    let w = whiten(spec, cfg.framing.nu_frames, cfg.whiten_percentile, &bins);
    let exponent = 2.0 * cfg.gamma;
    let stat: Vec<f64> = w.chunks(nb).map(|row| row.iter().map(|x| x.powf(exponent)).sum()).collect();
    let floor = running_median(&stat, cfg.framing.nu_frames);
    let ratio: Vec<f64> = stat.iter().zip(&floor).map(|(s, n)| s / (n + FLOOR_EPS)).collect();
    let curve = cfg.framing.curve(ratio, cfg.threshold, spec.sample_rate);
    let df = spec.bin_hz();
    let nyquist = spec.sample_rate as f64 / 2.0;
    curve
        .events()
        .into_iter()
        .map(|g| {
            let (peak_frame, peak) = curve.peak(&g);
            let contrib: Vec<f64> =
                w[peak_frame * nb..(peak_frame + 1) * nb].iter().map(|x| x.powf(exponent)).collect();
            let (lo, hi) = dominant_bins(&contrib);
            let f_lo = ((bins.start + lo) as f64 - 0.5) * df;
            let f_hi = ((bins.start + hi) as f64 + 0.5) * df;
            (g, peak, f_lo.clamp(0.0, nyquist), f_hi.clamp(0.0, nyquist))
        })
        .collect()
}

/// Smallest contiguous run grown greedily from the largest entry that holds
/// at least half the total. Inclusive bounds.
fn dominant_bins(contrib: &[f64]) -> (usize, usize) {
    let total: f64 = contrib.iter().sum();
    let start = (0..contrib.len()).fold(0, |best, i| if contrib[i] > contrib[best] { i } else { best });
    let (mut lo, mut hi, mut sum) = (start, start, contrib[start]);
    while sum < 0.5 * total && (lo > 0 || hi + 1 < contrib.len()) {
        let left = if lo > 0 { contrib[lo - 1] } else { f64::NEG_INFINITY };
        let right = if hi + 1 < contrib.len() { contrib[hi + 1] } else { f64::NEG_INFINITY };
        if right > left {
            hi += 1;
            sum += right;
        } else {
            lo -= 1;
            sum += left;
        }
    }
    (lo, hi)
}

pub struct PowerLaw {
    desc: DetectorDescriptor,
}

impl PowerLaw {
    pub fn new() -> Self {
        let mut keys = vec![
            KeySpec::new("gamma", ParmType::Float, "exponent applied to whitened energy")
                .default(ParmValue::Float(2.5))
                .min(Bound::Exclusive(0.0))
                .max(Bound::Inclusive(MAX_GAMMA)),
            KeySpec::new("threshold", ParmType::Float, "statistic over its running median")
                .default(ParmValue::Float(5.0))
                .min(Bound::Exclusive(0.0)),
            KeySpec::new("whiten_percentile", ParmType::Float, "per-bin noise percentile")
                .default(ParmValue::Float(50.0))
                .min(Bound::Exclusive(0.0))
                .max(Bound::Exclusive(100.0)),
            KeySpec::new("low_freq", ParmType::Float, "band lower edge, Hz").min(Bound::Inclusive(0.0)),
            KeySpec::new("high_freq", ParmType::Float, "band upper edge, Hz").min(Bound::Exclusive(0.0)),
        ];
        keys.extend(framing_keys());
        let mut constraints =
            vec![Constraint::LessThan("low_freq", "high_freq"), Constraint::WithinNyquist("high_freq")];
        constraints.extend(framing_constraints());
        Self {
            desc: DetectorDescriptor {
                detector_id: "power_law",
                display_name: "Whitened power-law statistic",
                keys,
                constraints,
                max_event_duration_s: MAX_EVENT_DURATION_S,
                requires_contiguous_valid_data: true,
                min_sample_rate: 1,
            },
        }
    }
}

impl Default for PowerLaw {
    fn default() -> Self {
        Self::new()
    }
}

impl DetectorPlugin for PowerLaw {
    fn descriptor(&self) -> &DetectorDescriptor {
        &self.desc
    }

    fn instantiate(&self, parms: &ValidatedParms, _sample_rate: u32) -> Result<Box<dyn Detector>, AnalysisError> {
        let cfg = PowerLawConfig::from_parms(parms);
        let stft = Stft::new(cfg.framing.nfft, cfg.framing.hop).map_err(|e| AnalysisError(e.to_string()))?;
        Ok(Box::new(PowerLawDetector { cfg, stft }))
    }
}

struct PowerLawDetector {
    cfg: PowerLawConfig,
    stft: Stft,
}

impl Detector for PowerLawDetector {
    fn min_window(&self) -> usize {
        self.cfg.framing.min_window()
    }

    fn analyze(&mut self, input: &AnalysisInput<'_>) -> Result<Vec<Detection>, AnalysisError> {
        let Some((lead, spec)) = aligned_spectrogram(&mut self.stft, &self.cfg.framing, input) else {
            return Ok(Vec::new());
        };
        Ok(detect_frames(&spec, &self.cfg)
            .into_iter()
            .map(|(frames, peak, low_freq, high_freq)| {
                let (begin, end) = self.cfg.framing.sample_bounds(lead, &frames, input.samples.len());
                Detection { begin, end, low_freq, high_freq, score: peak }
            })
            .collect())
    }
}
