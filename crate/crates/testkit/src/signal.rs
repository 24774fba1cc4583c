//! Seeded synthetic signals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian white noise with standard deviation `sigma`.
pub fn white_noise(n: usize, sigma: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma must be finite");
    (0..n).map(|_| normal.sample(&mut r)).collect()
}

/// Adds a rectangular-envelope sine burst over `[start, start + len)`.
pub fn add_tone(buf: &mut [f64], rate: u32, freq_hz: f64, amplitude: f64, start: usize, len: usize) {
    let end = (start + len).min(buf.len());
    for (i, s) in buf.iter_mut().enumerate().take(end).skip(start) {
        let t = i as f64 / rate as f64;
        *s += amplitude * (2.0 * std::f64::consts::PI * freq_hz * t).sin();
    }
}

/// Amplitude of a sine whose power is `snr_db` above white noise of std
/// `sigma` restricted to a band of `band_hz` (one-sided, out of `rate / 2`).
pub fn tone_amplitude_for_band_snr(snr_db: f64, sigma: f64, band_hz: f64, rate: u32) -> f64 {
    let band_noise_power = sigma * sigma * band_hz / (rate as f64 / 2.0);
    (2.0 * 10f64.powf(snr_db / 10.0) * band_noise_power).sqrt()
}

/// Rounds to 16-bit PCM codes with saturation.
pub fn to_i16(samples: &[f64]) -> Vec<i16> {
    samples.iter().map(|&x| (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16).collect()
}

/// `(year, month, day)` for a count of days since 1970-01-01.
pub fn civil_from_days(days: i64) -> (i64, u32, u32) {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    let y = yoe + era * 400 + i64::from(m <= 2);
    (y, m, d)
}

/// Formats whole epoch seconds as `YYYYmmdd_HHMMSS`.
pub fn stamp(epoch_s: i64) -> String {
    let (y, mo, d) = civil_from_days(epoch_s.div_euclid(86_400));
    let sod = epoch_s.rem_euclid(86_400);
    format!("{y:04}{mo:02}{d:02}_{:02}{:02}{:02}", sod / 3600, (sod / 60) % 60, sod % 60)
}
