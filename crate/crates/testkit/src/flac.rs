//! A FLAC writer that emits only VERBATIM subframes.
//!
//! Verbatim coding is lossless by construction, which is all the decode tests
//! need; compression ratio is irrelevant here.

use std::fs;
use std::io;
use std::path::Path;

const BLOCK_SIZE: usize = 4096;

struct BitWriter {
    bytes: Vec<u8>,
    acc: u64,
    nbits: u32,
}

impl BitWriter {
    fn new() -> Self {
        Self { bytes: Vec::new(), acc: 0, nbits: 0 }
    }

    fn put(&mut self, value: u64, bits: u32) {
        for i in (0..bits).rev() {
            self.acc = (self.acc << 1) | ((value >> i) & 1);
            self.nbits += 1;
            if self.nbits == 8 {
                self.bytes.push(self.acc as u8);
                self.acc = 0;
                self.nbits = 0;
            }
        }
    }

    fn align(&mut self) {
        while self.nbits != 0 {
            self.put(0, 1);
        }
    }
}

fn crc8(data: &[u8]) -> u8 {
    let mut crc = 0u8;
    for &b in data {
        crc ^= b;
        for _ in 0..8 {
            crc = if crc & 0x80 != 0 { (crc << 1) ^ 0x07 } else { crc << 1 };
        }
    }
    crc
}

fn crc16(data: &[u8]) -> u16 {
    let mut crc = 0u16;
    for &b in data {
        crc ^= (b as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 { (crc << 1) ^ 0x8005 } else { crc << 1 };
        }
    }
    crc
}

fn utf8_number(n: u64) -> Vec<u8> {
    if n < 0x80 {
        return vec![n as u8];
    }
    let mut cont = Vec::new();
    let mut v = n;
    let mut payload_bits = 6; // bits available in the leading byte
    loop {
        cont.push(0x80 | (v & 0x3f) as u8);
        v >>= 6;
        payload_bits -= 1;
        if v < (1 << payload_bits) {
            break;
        }
    }
    let len = cont.len() + 1;
    let lead_mask: u8 = !(0xffu8 >> len);
    let mut out = vec![lead_mask | v as u8];
    cont.reverse();
    out.extend(cont);
    out
}

/// Frame-header sample size; 0 defers to STREAMINFO, which some decoders reject.
fn sample_size_code(bits: u32) -> u64 {
    match bits {
        8 => 0b001,
        12 => 0b010,
        16 => 0b100,
        20 => 0b101,
        24 => 0b110,
        32 => 0b111,
        _ => 0b000,
    }
}

/// Writes interleaved samples (each within `bits` signed range) as FLAC.
pub fn write(path: &Path, rate: u32, channels: u16, bits: u32, interleaved: &[i32]) -> io::Result<()> {
    assert!((1..=8).contains(&channels));
    assert!((4..=32).contains(&bits));
    let ch = channels as usize;
    let frames = interleaved.len() / ch;

    let mut w = BitWriter::new();
    w.bytes.extend_from_slice(b"fLaC");
    // STREAMINFO, flagged as the last metadata block.
    w.put(1, 1);
    w.put(0, 7);
    w.put(34, 24);
    w.put(BLOCK_SIZE as u64, 16);
    w.put(BLOCK_SIZE as u64, 16);
    w.put(0, 24);
    w.put(0, 24);
    w.put(rate as u64, 20);
    w.put((channels - 1) as u64, 3);
    w.put((bits - 1) as u64, 5);
    w.put(frames as u64, 36);
    for _ in 0..16 {
        w.put(0, 8);
    }
    let mut out = w.bytes;

    for (frame_no, start) in (0..frames).step_by(BLOCK_SIZE).enumerate() {
        let n = BLOCK_SIZE.min(frames - start);
        let mut f = BitWriter::new();
        f.put(0b11_1111_1111_1110, 14);
        f.put(0, 1);
        f.put(0, 1);
        f.put(0b0111, 4);
        f.put(0b0000, 4);
        f.put((channels - 1) as u64, 4);
        f.put(sample_size_code(bits), 3);
        f.put(0, 1);
        for b in utf8_number(frame_no as u64) {
            f.put(b as u64, 8);
        }
        f.put((n - 1) as u64, 16);
        let c8 = crc8(&f.bytes);
        f.put(c8 as u64, 8);
        for c in 0..ch {
            f.put(0, 1);
            f.put(0b000001, 6);
            f.put(0, 1);
            for i in 0..n {
                let s = interleaved[(start + i) * ch + c];
                let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
                f.put((s as i64 as u64) & mask, bits);
            }
        }
        f.align();
        let c16 = crc16(&f.bytes);
        f.put(c16 as u64, 16);
        out.extend_from_slice(&f.bytes);
    }
    fs::write(path, out)
}
