use std::ops::Range;

use super::{
    aligned_spectrogram, framing_constraints, framing_keys, running_median, Framing, Spectrogram, Stft, FLOOR_EPS,
    MAX_EVENT_DURATION_S,
};
use crate::detector::{
    AnalysisError, AnalysisInput, Bound, Constraint, Detection, Detector, DetectorDescriptor, DetectorPlugin, KeySpec,
    ParmType, ValidatedParms,
};
use crate::parm::ParmValue;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandEnergyConfig {
    pub low_freq: f64,
    pub high_freq: f64,
    pub threshold_db: f64,
    pub framing: Framing,
}

impl BandEnergyConfig {
    pub fn from_parms(p: &ValidatedParms) -> Self {
        Self {
            low_freq: p.f64("low_freq"),
            high_freq: p.f64("high_freq"),
            threshold_db: p.f64("threshold_db_over_noise"),
            framing: Framing::from_parms(p),
        }
    }
}

/// Per-frame in-band energy in dB over its running-median noise floor.
pub fn band_level_db(spec: &Spectrogram, low: f64, high: f64, nu_frames: usize) -> Vec<f64> {
    let bins = spec.band_bins(low, high);
    let energy: Vec<f64> = (0..spec.frames).map(|f| spec.frame(f)[bins.clone()].iter().map(|m| m * m).sum()).collect();
    let noise = running_median(&energy, nu_frames);
    energy.iter().zip(&noise).map(|(e, n)| 10.0 * ((e + FLOOR_EPS) / (n + FLOOR_EPS)).log10()).collect()
}

/// Frame groups above threshold with their peak level in dB.
pub(crate) fn detect_frames(spec: &Spectrogram, cfg: &BandEnergyConfig) -> Vec<(Range<usize>, f64)> {
    let level = band_level_db(spec, cfg.low_freq, cfg.high_freq, cfg.framing.nu_frames);
    let curve = cfg.framing.curve(level, cfg.threshold_db, spec.sample_rate);
    curve
        .events()
        .into_iter()
        .map(|g| {
            let (_, peak) = curve.peak(&g);
            (g, peak)
        })
        .collect()
}

pub struct BandEnergy {
    desc: DetectorDescriptor,
}

impl BandEnergy {
    pub fn new() -> Self {
        let mut keys = vec![
            KeySpec::new("low_freq", ParmType::Float, "band lower edge, Hz").required().min(Bound::Inclusive(0.0)),
            KeySpec::new("high_freq", ParmType::Float, "band upper edge, Hz").required().min(Bound::Exclusive(0.0)),
            KeySpec::new("threshold_db_over_noise", ParmType::Float, "detection level above the noise floor")
                .default(ParmValue::Float(10.0))
                .min(Bound::Exclusive(0.0)),
        ];
        keys.extend(framing_keys());
        let mut constraints =
            vec![Constraint::LessThan("low_freq", "high_freq"), Constraint::WithinNyquist("high_freq")];
        constraints.extend(framing_constraints());
        Self {
            desc: DetectorDescriptor {
                detector_id: "band_energy",
                display_name: "Band energy over noise",
                keys,
                constraints,
                max_event_duration_s: MAX_EVENT_DURATION_S,
                requires_contiguous_valid_data: true,
                min_sample_rate: 1,
            },
        }
    }
}

impl Default for BandEnergy {
    fn default() -> Self {
        Self::new()
    }
}

impl DetectorPlugin for BandEnergy {
    fn descriptor(&self) -> &DetectorDescriptor {
        &self.desc
    }

    fn instantiate(&self, parms: &ValidatedParms, _sample_rate: u32) -> Result<Box<dyn Detector>, AnalysisError> {
        let cfg = BandEnergyConfig::from_parms(parms);
        let stft = Stft::new(cfg.framing.nfft, cfg.framing.hop).map_err(|e| AnalysisError(e.to_string()))?;
        Ok(Box::new(BandEnergyDetector { cfg, stft }))
    }
}

struct BandEnergyDetector {
    cfg: BandEnergyConfig,
    stft: Stft,
}

impl Detector for BandEnergyDetector {
    fn min_window(&self) -> usize {
        self.cfg.framing.min_window()
    }

    fn analyze(&mut self, input: &AnalysisInput<'_>) -> Result<Vec<Detection>, AnalysisError> {
        let Some((lead, spec)) = aligned_spectrogram(&mut self.stft, &self.cfg.framing, input) else {
            return Ok(Vec::new());
        };
        Ok(detect_frames(&spec, &self.cfg)
            .into_iter()
            .map(|(frames, peak)| {
                let (begin, end) = self.cfg.framing.sample_bounds(lead, &frames, input.samples.len());
                Detection { begin, end, low_freq: self.cfg.low_freq, high_freq: self.cfg.high_freq, score: peak }
            })
            .collect())
    }
}
