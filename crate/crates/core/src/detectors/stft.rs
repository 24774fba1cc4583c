use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{RealFftPlanner, RealToComplex};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StftError {
    #[error("nfft {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("hop {hop} must be in 1..={nfft}")]
    BadHop { hop: usize, nfft: usize },
    #[error("{len} samples is shorter than one frame of {nfft}")]
    TooShort { len: usize, nfft: usize },
}

/// Magnitude spectrogram, frames × bins, row-major.
///
/// Frame `f` covers samples `[start_sample + f·hop, start_sample + f·hop + nfft)`.
#[derive(Clone, PartialEq)]
pub struct Spectrogram {
    pub magnitudes: Vec<f64>,
    pub frames: usize,
    pub bins: usize,
    pub hop: usize,
    pub nfft: usize,
    pub sample_rate: u32,
    pub start_sample: u64,
}

impl Spectrogram {
    pub fn frame(&self, f: usize) -> &[f64] {
        &self.magnitudes[f * self.bins..(f + 1) * self.bins]
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.nfft as f64
    }

    /// Bins whose center frequency lies in `[low, high]`; never empty.
    pub fn band_bins(&self, low: f64, high: f64) -> std::ops::Range<usize> {
        let df = self.bin_hz();
        let lo = ((low / df).ceil().max(0.0) as usize).min(self.bins - 1);
        let hi = ((high / df).floor().max(0.0) as usize).min(self.bins - 1);
        if lo <= hi {
            lo..hi + 1
        } else {
            // Band narrower than a bin: use the bin nearest its center.
            let mid = (((low + high) / 2.0 / df).round() as usize).min(self.bins - 1);
            mid..mid + 1
        }
    }
}

impl fmt::Debug for Spectrogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectrogram")
            .field("frames", &self.frames)
            .field("bins", &self.bins)
            .field("hop", &self.hop)
            .field("nfft", &self.nfft)
            .field("sample_rate", &self.sample_rate)
            .field("start_sample", &self.start_sample)
            .finish_non_exhaustive()
    }
}

/// Periodic Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Reusable transform state: FFT plan, window and scratch buffers.
pub struct Stft {
    nfft: usize,
    hop: usize,
    window: Vec<f64>,
    fft: Arc<dyn RealToComplex<f64>>,
    input: Vec<f64>,
    output: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl Stft {
    pub fn new(nfft: usize, hop: usize) -> Result<Self, StftError> {
        if !nfft.is_power_of_two() || nfft < 2 {
            return Err(StftError::NotPowerOfTwo(nfft));
        }
        if hop == 0 || hop > nfft {
            return Err(StftError::BadHop { hop, nfft });
        }
        let fft = RealFftPlanner::<f64>::new().plan_fft_forward(nfft);
        Ok(Self {
            nfft,
            hop,
            window: hann(nfft),
            input: fft.make_input_vec(),
            output: fft.make_output_vec(),
            scratch: fft.make_scratch_vec(),
            fft,
        })
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn compute(&mut self, samples: &[f32], start_sample: u64, sample_rate: u32) -> Result<Spectrogram, StftError> {
        if samples.len() < self.nfft {
            return Err(StftError::TooShort { len: samples.len(), nfft: self.nfft });
        }
        let frames = (samples.len() - self.nfft) / self.hop + 1;
        let bins = self.nfft / 2 + 1;
        let mut magnitudes = Vec::with_capacity(frames * bins);
        for f in 0..frames {
            let frame = &samples[f * self.hop..f * self.hop + self.nfft];
            for ((dst, &x), &w) in self.input.iter_mut().zip(frame).zip(&self.window) {
                *dst = x as f64 * w;
            }
            self.fft
                .process_with_scratch(&mut self.input, &mut self.output, &mut self.scratch)
                .expect("buffers sized by the plan");
            magnitudes.extend(self.output.iter().map(|c| c.norm()));
        }
        Ok(Spectrogram { magnitudes, frames, bins, hop: self.hop, nfft: self.nfft, sample_rate, start_sample })
    }
}

/// One-shot Hann-windowed magnitude STFT.
pub fn stft(samples: &[f32], nfft: usize, hop: usize, sample_rate: u32) -> Result<Spectrogram, StftError> {
    Stft::new(nfft, hop)?.compute(samples, 0, sample_rate)
}
