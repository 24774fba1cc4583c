use serde::{Deserialize, Serialize};

use super::SampleBlock;

/// Magnitude at or above which a sample counts as clipped (16-bit full scale).
pub const CLIP_LEVEL: f32 = 32767.0 / 32768.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrityThresholds {
    pub min_valid_fraction: f64,
    pub clip_fraction: f64,
}

impl Default for IntegrityThresholds {
    fn default() -> Self {
        Self { min_valid_fraction: 0.5, clip_fraction: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Degraded,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrityReport {
    pub valid_fraction: f64,
    pub nonfinite_count: usize,
    pub clipped_count: usize,
    /// No valid sample is nonzero.
    pub all_zero: bool,
    pub verdict: Verdict,
}

pub fn check_integrity(block: &SampleBlock, thresholds: &IntegrityThresholds) -> IntegrityReport {
    let mut valid = 0usize;
    let mut nonfinite = 0usize;
    let mut clipped = 0usize;
    let mut all_zero = true;
    for (&x, &ok) in block.samples.iter().zip(&block.validity) {
        if !ok {
            continue;
        }
        valid += 1;
        if !x.is_finite() {
            nonfinite += 1;
            all_zero = false;
            continue;
        }
        if x != 0.0 {
            all_zero = false;
        }
        if x.abs() >= CLIP_LEVEL {
            clipped += 1;
        }
    }
    let valid_fraction = if block.is_empty() { 0.0 } else { valid as f64 / block.len() as f64 };
    let verdict = verdict(valid_fraction, nonfinite, clipped, valid, thresholds);
    IntegrityReport { valid_fraction, nonfinite_count: nonfinite, clipped_count: clipped, all_zero, verdict }
}

fn verdict(valid_fraction: f64, nonfinite: usize, clipped: usize, valid: usize, t: &IntegrityThresholds) -> Verdict {
    if valid_fraction < t.min_valid_fraction || nonfinite > 0 {
        Verdict::Fail
    } else if valid > 0 && clipped as f64 / valid as f64 > t.clip_fraction {
        Verdict::Degraded
    } else {
        Verdict::Pass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(samples: Vec<f32>, validity: Vec<bool>) -> SampleBlock {
        SampleBlock { stream_id: 0, start_sample: 0, samples, validity, sample_rate: 2000 }
    }

    fn sine(n: usize) -> Vec<f32> {
        (0..n).map(|i| (0.5 * (i as f64 * 0.1).sin()) as f32).collect()
    }

    #[test]
    fn clean_sine_passes() {
        let r = check_integrity(&block(sine(1000), vec![true; 1000]), &Default::default());
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.valid_fraction, 1.0);
        assert!(!r.all_zero);
    }

    #[test]
    fn one_nan_fails() {
        let mut s = sine(1000);
        s[500] = f32::NAN;
        let r = check_integrity(&block(s, vec![true; 1000]), &Default::default());
        assert_eq!(r.verdict, Verdict::Fail);
        assert_eq!(r.nonfinite_count, 1);
    }

    #[test]
    fn thirty_percent_gap_passes_at_half() {
        let mut s = sine(1000);
        let mut v = vec![true; 1000];
        for i in 200..500 {
            s[i] = 0.0;
            v[i] = false;
        }
        let direct = v.iter().filter(|&&ok| ok).count() as f64 / v.len() as f64;
        let r = check_integrity(&block(s, v), &Default::default());
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.valid_fraction, direct);
        assert!((r.valid_fraction - 0.7).abs() < 1e-12);
    }

    #[test]
    fn mostly_gap_fails() {
        let mut v = vec![false; 100];
        v[..40].fill(true);
        let s = (0..100).map(|i| if i < 40 { 0.1 } else { 0.0 }).collect();
        let r = check_integrity(&block(s, v), &Default::default());
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn heavy_clipping_degrades() {
        let mut s = sine(1000);
        for x in s.iter_mut().take(20) {
            *x = -1.0;
        }
        let r = check_integrity(&block(s, vec![true; 1000]), &Default::default());
        assert_eq!(r.clipped_count, 20);
        assert_eq!(r.verdict, Verdict::Degraded);
        let r = check_integrity(
            &block(sine(1000), vec![true; 1000]),
            &IntegrityThresholds { min_valid_fraction: 0.5, clip_fraction: 0.0 },
        );
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn silence_is_all_zero_but_passes() {
        let r = check_integrity(&block(vec![0.0; 10], vec![true; 10]), &Default::default());
        assert!(r.all_zero);
        assert_eq!(r.verdict, Verdict::Pass);
    }
}
