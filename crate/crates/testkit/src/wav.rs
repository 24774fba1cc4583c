//! Minimal RIFF/WAVE writer.

use std::fs;
use std::io;
use std::path::Path;

/// Sample encoding of a written file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Pcm8,
    Pcm16,
    Pcm24,
    Pcm32,
    Float32,
}

impl Encoding {
    fn bytes(self) -> usize {
        match self {
            Encoding::Pcm8 => 1,
            Encoding::Pcm16 => 2,
            Encoding::Pcm24 => 3,
            Encoding::Pcm32 | Encoding::Float32 => 4,
        }
    }
}

fn header(rate: u32, channels: u16, enc: Encoding, data_len: u32) -> Vec<u8> {
    let bytes = enc.bytes() as u16;
    let block_align = channels * bytes;
    let format_code: u16 = if enc == Encoding::Float32 { 3 } else { 1 };
    let mut out = Vec::with_capacity(44);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&format_code.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&(bytes * 8).to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    out
}

/// Writes interleaved integer PCM. Values must fit the encoding's width.
pub fn write_int(path: &Path, rate: u32, channels: u16, enc: Encoding, interleaved: &[i32]) -> io::Result<()> {
    assert!(enc != Encoding::Float32);
    let mut data = Vec::with_capacity(interleaved.len() * enc.bytes());
    for &s in interleaved {
        match enc {
            Encoding::Pcm8 => data.push((s + 128) as u8),
            Encoding::Pcm16 => data.extend_from_slice(&(s as i16).to_le_bytes()),
            Encoding::Pcm24 => data.extend_from_slice(&s.to_le_bytes()[..3]),
            Encoding::Pcm32 => data.extend_from_slice(&s.to_le_bytes()),
            Encoding::Float32 => unreachable!(),
        }
    }
    let mut out = header(rate, channels, enc, data.len() as u32);
    out.extend_from_slice(&data);
    fs::write(path, out)
}

/// Writes interleaved IEEE float samples.
pub fn write_float(path: &Path, rate: u32, channels: u16, interleaved: &[f32]) -> io::Result<()> {
    let mut data = Vec::with_capacity(interleaved.len() * 4);
    for &s in interleaved {
        data.extend_from_slice(&s.to_le_bytes());
    }
    let mut out = header(rate, channels, Encoding::Float32, data.len() as u32);
    out.extend_from_slice(&data);
    fs::write(path, out)
}

/// Mono 16-bit convenience wrapper over [`write_int`].
pub fn write_mono16(path: &Path, rate: u32, samples: &[i16]) -> io::Result<()> {
    let wide: Vec<i32> = samples.iter().map(|&s| s as i32).collect();
    write_int(path, rate, 1, Encoding::Pcm16, &wide)
}

/// Interleaves per-channel buffers of equal length.
pub fn interleave<T: Copy>(channels: &[Vec<T>]) -> Vec<T> {
    let n = channels.first().map_or(0, Vec::len);
    assert!(channels.iter().all(|c| c.len() == n));
    let mut out = Vec::with_capacity(n * channels.len());
    for i in 0..n {
        for c in channels {
            out.push(c[i]);
        }
    }
    out
}
