use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};

use thiserror::Error;

use super::{AnalysisInput, Detection, Detector, DetectorDescriptor, DetectorHandle, RawDetection};
use crate::audio::SampleBlock;

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("cannot instantiate detector: {0}")]
    Instantiate(String),
    #[error("detector failed: {0}")]
    Failed(String),
    #[error("detector panicked: {0}")]
    Panicked(String),
    #[error("detector returned an invalid detection: {0}")]
    InvalidOutput(String),
}

impl DetectorError {
    /// The instance may hold broken state and should not be reused.
    pub fn poisons_instance(&self) -> bool {
        matches!(self, DetectorError::Panicked(_))
    }
}

/// Runs a fresh instance of `handle` over `block`.
pub fn run_detector(handle: &DetectorHandle, block: &SampleBlock) -> Result<Vec<RawDetection>, DetectorError> {
    let mut det = handle.instantiate(block.sample_rate).map_err(|e| DetectorError::Instantiate(e.0))?;
    run_instance(det.as_mut(), handle.descriptor(), block)
}

/// Runs an existing instance over `block`, keeping invalid samples away from
/// it and converting its output to virtual indices.
///
/// Panics inside the algorithm are caught and returned as errors.
pub fn run_instance(
    det: &mut dyn Detector,
    desc: &DetectorDescriptor,
    block: &SampleBlock,
) -> Result<Vec<RawDetection>, DetectorError> {
    let segments = block.valid_segments();
    let min_window = det.min_window().max(1);
    let mut out = Vec::new();
    if desc.requires_contiguous_valid_data {
        for seg in segments.iter().filter(|s| s.len() >= min_window) {
            let input = AnalysisInput {
                samples: &block.samples[seg.clone()],
                validity: None,
                origin: block.start_sample + seg.start as u64,
                sample_rate: block.sample_rate,
            };
            let found = guarded(det, &input)?;
            for d in found {
                out.extend(convert(d, seg.clone(), block, desc)?);
            }
        }
    } else if !segments.is_empty() && block.len() >= min_window {
        let all_valid = segments.len() == 1 && segments[0] == (0..block.len());
        let input = AnalysisInput {
            samples: &block.samples,
            validity: (!all_valid).then_some(block.validity.as_slice()),
            origin: block.start_sample,
            sample_rate: block.sample_rate,
        };
        let found = guarded(det, &input)?;
        for d in found {
            let Some(whole) = convert(d, 0..block.len(), block, desc)? else { continue };
            // Keep only the parts that lie on recorded data.
            for seg in &segments {
                let lo = whole.begin_sample.max(block.start_sample + seg.start as u64);
                let hi = whole.end_sample.min(block.start_sample + seg.end as u64);
                if lo < hi {
                    out.push(RawDetection { begin_sample: lo, end_sample: hi, ..whole.clone() });
                }
            }
        }
    }
    Ok(out)
}

fn guarded(det: &mut dyn Detector, input: &AnalysisInput<'_>) -> Result<Vec<Detection>, DetectorError> {
    match catch_unwind(AssertUnwindSafe(|| det.analyze(input))) {
        Ok(Ok(found)) => Ok(found),
        Ok(Err(e)) => Err(DetectorError::Failed(e.0)),
        Err(payload) => Err(DetectorError::Panicked(panic_text(&*payload))),
    }
}

pub(crate) fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "non-string panic payload".into())
}

/// Clamps a slice-relative detection into `seg` and offsets it to virtual
/// indices. Empty results are dropped.
fn convert(
    d: Detection,
    seg: Range<usize>,
    block: &SampleBlock,
    desc: &DetectorDescriptor,
) -> Result<Option<RawDetection>, DetectorError> {
    if !d.score.is_finite() || d.low_freq.is_nan() || d.high_freq.is_nan() {
        return Err(DetectorError::InvalidOutput(format!("non-finite value in {d:?}")));
    }
    if d.low_freq > d.high_freq {
        return Err(DetectorError::InvalidOutput(format!("low_freq {} above high_freq {}", d.low_freq, d.high_freq)));
    }
    let len = seg.len();
    let (begin, end) = (d.begin.min(len), d.end.min(len));
    if begin >= end {
        return Ok(None);
    }
    let nyquist = block.sample_rate as f64 / 2.0;
    let base = block.start_sample + seg.start as u64;
    Ok(Some(RawDetection {
        begin_sample: base + begin as u64,
        end_sample: base + end as u64,
        low_freq: d.low_freq.clamp(0.0, nyquist),
        high_freq: d.high_freq.clamp(0.0, nyquist),
        score: d.score,
        detector_id: desc.detector_id.to_string(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::AnalysisError;

    /// Records what it was shown; reports one detection covering each slice.
    struct Probe {
        calls: Vec<(u64, Vec<f32>, bool)>,
        min_window: usize,
        panic_on_call: Option<usize>,
    }

    impl Probe {
        fn new(min_window: usize) -> Self {
            Self { calls: Vec::new(), min_window, panic_on_call: None }
        }
    }

    impl Detector for Probe {
        fn min_window(&self) -> usize {
            self.min_window
        }

        fn analyze(&mut self, input: &AnalysisInput<'_>) -> Result<Vec<Detection>, AnalysisError> {
            if self.panic_on_call == Some(self.calls.len()) {
                panic!("probe exploded");
            }
            self.calls.push((input.origin, input.samples.to_vec(), input.validity.is_some()));
            Ok(vec![Detection { begin: 0, end: input.samples.len() + 5, low_freq: -3.0, high_freq: 1e9, score: 1.0 }])
        }
    }

    fn desc(contiguous: bool) -> DetectorDescriptor {
        DetectorDescriptor {
            detector_id: "probe",
            display_name: "Probe",
            keys: Vec::new(),
            constraints: Vec::new(),
            max_event_duration_s: 1.0,
            requires_contiguous_valid_data: contiguous,
            min_sample_rate: 1,
        }
    }

    /// [valid 30 | gap 10 | valid 20] at 1 Hz, samples never zero where valid.
    fn gapped_block() -> SampleBlock {
        let validity: Vec<bool> = (0..60).map(|i| !(30..40).contains(&i)).collect();
        let samples = validity.iter().enumerate().map(|(i, &ok)| if ok { 1.0 + i as f32 } else { 0.0 }).collect();
        SampleBlock { stream_id: 0, start_sample: 1000, samples, validity, sample_rate: 100 }
    }

    #[test]
    fn gap_splits_into_two_invocations_without_padding() {
        let block = gapped_block();
        let mut probe = Probe::new(1);
        let dets = run_instance(&mut probe, &desc(true), &block).unwrap();
        assert_eq!(probe.calls.len(), 2);
        assert_eq!(probe.calls[0].0, 1000);
        assert_eq!(probe.calls[1].0, 1040);
        for (_, seen, masked) in &probe.calls {
            assert!(!masked);
            assert!(seen.iter().all(|&x| x != 0.0));
        }
        assert_eq!((dets[0].begin_sample, dets[0].end_sample), (1000, 1030));
        assert_eq!((dets[1].begin_sample, dets[1].end_sample), (1040, 1060));
        assert!(dets.iter().all(|d| d.low_freq == 0.0 && d.high_freq == 50.0));
    }

    #[test]
    fn all_invalid_block_is_never_analyzed() {
        let block = SampleBlock {
            stream_id: 0,
            start_sample: 0,
            samples: vec![0.0; 50],
            validity: vec![false; 50],
            sample_rate: 10,
        };
        for contiguous in [true, false] {
            let mut probe = Probe::new(1);
            assert!(run_instance(&mut probe, &desc(contiguous), &block).unwrap().is_empty());
            assert!(probe.calls.is_empty());
        }
    }

    #[test]
    fn short_segments_are_skipped() {
        let mut probe = Probe::new(25);
        let dets = run_instance(&mut probe, &desc(true), &gapped_block()).unwrap();
        assert_eq!(probe.calls.len(), 1);
        assert_eq!(dets.len(), 1);
    }

    #[test]
    fn mask_tolerant_output_is_cut_to_valid_runs() {
        let mut probe = Probe::new(1);
        let dets = run_instance(&mut probe, &desc(false), &gapped_block()).unwrap();
        assert_eq!(probe.calls.len(), 1);
        assert!(probe.calls[0].2);
        let spans: Vec<_> = dets.iter().map(|d| (d.begin_sample, d.end_sample)).collect();
        assert_eq!(spans, vec![(1000, 1030), (1040, 1060)]);
    }

    #[test]
    fn panic_becomes_an_error() {
        let mut probe = Probe::new(1);
        probe.panic_on_call = Some(1);
        let err = run_instance(&mut probe, &desc(true), &gapped_block()).unwrap_err();
        assert!(matches!(&err, DetectorError::Panicked(m) if m == "probe exploded"));
        assert!(err.poisons_instance());
    }

    #[test]
    fn fully_valid_block_matches_direct_call() {
        let samples: Vec<f32> = (0..40).map(|i| i as f32 + 0.5).collect();
        let block = SampleBlock {
            stream_id: 0,
            start_sample: 7,
            samples: samples.clone(),
            validity: vec![true; 40],
            sample_rate: 1000,
        };
        let mut wrapped = Probe::new(1);
        let via_wrapper = run_instance(&mut wrapped, &desc(true), &block).unwrap();
        let mut direct = Probe::new(1);
        let raw =
            direct.analyze(&AnalysisInput { samples: &samples, validity: None, origin: 7, sample_rate: 1000 }).unwrap();
        assert_eq!(wrapped.calls, direct.calls);
        assert_eq!(via_wrapper.len(), raw.len());
        assert_eq!(via_wrapper[0].begin_sample, 7 + raw[0].begin as u64);
    }
}
