//! Minimal RIFF/WAV reader for 16-bit PCM and 32-bit float, plus a small
//! float writer for producing fixtures.
//!
//! Stereo input is downmixed by averaging the two channels.

use std::fs;
use std::path::Path;

use crate::dsp::Waveform;
use crate::error::{Error, Result};

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(
                format!("truncated wav while reading {what}: need {n} bytes"),
                self.pos as u64,
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Decodes WAV bytes into a mono waveform.
pub fn decode_wav(bytes: &[u8]) -> Result<Waveform> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "riff magic")? != b"RIFF" {
        return Err(Error::format("missing RIFF magic", 0));
    }
    cur.u32("riff size")?;
    if cur.take(4, "wave magic")? != b"WAVE" {
        return Err(Error::format("missing WAVE magic", 8));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    while cur.pos + 8 <= bytes.len() {
        let id_off = cur.pos as u64;
        let id: [u8; 4] = cur.take(4, "chunk id")?.try_into().unwrap();
        let size = cur.u32("chunk size")? as usize;
        let body = cur.take(size, "chunk body")?;
        // Chunks are word-aligned; odd sizes carry a pad byte.
        if size % 2 == 1 && cur.pos < bytes.len() {
            cur.pos += 1;
        }
        match &id {
            b"fmt " => {
                let mut f = Cursor { bytes: body, pos: 0 };
                let mut format = f.u16("audio format")?;
                let channels = f.u16("channels")?;
                let sample_rate = f.u32("sample rate")?;
                f.u32("byte rate")?;
                f.u16("block align")?;
                let bits = f.u16("bits per sample")?;
                if format == FORMAT_EXTENSIBLE {
                    f.u16("extension size")?;
                    f.u16("valid bits")?;
                    f.u32("channel mask")?;
                    format = f.u16("subformat")?;
                }
                fmt = Some(FmtChunk {
                    format,
                    channels,
                    sample_rate,
                    bits,
                });
            }
            b"data" => data = Some(body),
            _ => {
                let _ = id_off;
            }
        }
    }

    let fmt = fmt.ok_or_else(|| Error::format("missing fmt chunk", 12))?;
    let data = data.ok_or_else(|| Error::format("missing data chunk", 12))?;
    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(Error::format(
            format!("unsupported channel count {}", fmt.channels),
            12,
        ));
    }
    let per_sample: Vec<f64> = match (fmt.format, fmt.bits) {
        (FORMAT_PCM, 16) => data
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]) as f64 / 32768.0)
            .collect(),
        (FORMAT_IEEE_FLOAT, 32) => data
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
            .collect(),
        (format, bits) => {
            return Err(Error::format(
                format!("unsupported wav encoding: format {format}, {bits}-bit"),
                12,
            ))
        }
    };
    let samples = if fmt.channels == 2 {
        per_sample
            .chunks_exact(2)
            .map(|lr| (lr[0] + lr[1]) / 2.0)
            .collect()
    } else {
        per_sample
    };
    Waveform::new(samples, fmt.sample_rate)
}

/// Reads a WAV file from disk.
pub fn read_wav(path: &Path) -> Result<Waveform> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_wav(&bytes)
}

/// Encodes a mono waveform as 32-bit float WAV bytes.
pub fn encode_wav_f32(w: &Waveform) -> Vec<u8> {
    let n = w.samples.len() as u32;
    let data_size = n * 4;
    let mut out = Vec::with_capacity(44 + data_size as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_size).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&w.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate_hz * 4).to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&32u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_size.to_le_bytes());
    for &s in &w.samples {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    out
}

/// Writes a mono waveform to disk as 32-bit float WAV.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    fs::write(path, encode_wav_f32(w)).map_err(|e| Error::io(path, e))
}
