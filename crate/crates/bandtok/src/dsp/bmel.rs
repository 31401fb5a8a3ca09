//! "BMEL" binary spectrogram container.
//!
//! Layout: magic "BMEL", u32 version = 1, u32 T, u32 F, u32 sample_rate,
//! u32 hop, u32 win, then T*F little-endian f32 in row-major (time-major)
//! order.

use std::fs;
use std::path::Path;

use crate::dsp::LogMelSpectrogram;
use crate::error::{Error, Result};
use crate::mat::Mat;

pub const BMEL_MAGIC: &[u8; 4] = b"BMEL";
pub const BMEL_VERSION: u32 = 1;

pub fn encode_bmel(spec: &LogMelSpectrogram) -> Vec<u8> {
    let t = spec.values.rows() as u32;
    let f = spec.values.cols() as u32;
    let mut out = Vec::with_capacity(28 + spec.values.len() * 4);
    out.extend_from_slice(BMEL_MAGIC);
    out.extend_from_slice(&BMEL_VERSION.to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&f.to_le_bytes());
    out.extend_from_slice(&spec.sample_rate_hz.to_le_bytes());
    out.extend_from_slice(&(spec.hop_samples as u32).to_le_bytes());
    out.extend_from_slice(&(spec.win_samples as u32).to_le_bytes());
    for &v in spec.values.as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_bmel(bytes: &[u8]) -> Result<LogMelSpectrogram> {
    let need = |end: usize, what: &str, at: usize| -> Result<()> {
        if bytes.len() < end {
            Err(Error::format(
                format!("truncated BMEL while reading {what}: expected {end} bytes"),
                at as u64,
            ))
        } else {
            Ok(())
        }
    };
    need(28, "header", 0)?;
    if &bytes[0..4] != BMEL_MAGIC {
        return Err(Error::format("missing BMEL magic", 0));
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != BMEL_VERSION {
        return Err(Error::format(format!("unknown BMEL version {version}"), 4));
    }
    let t = u32_at(8) as usize;
    let f = u32_at(12) as usize;
    let sample_rate = u32_at(16);
    let hop = u32_at(20) as usize;
    let win = u32_at(24) as usize;
    let expected = 28 + t * f * 4;
    need(expected, "sample data", 28)?;
    let mut data = Vec::with_capacity(t * f);
    for i in 0..t * f {
        let at = 28 + i * 4;
        data.push(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()) as f64);
    }
    Ok(LogMelSpectrogram {
        values: Mat::from_vec(t, f, data)?,
        n_mels: f,
        hop_samples: hop,
        win_samples: win,
        sample_rate_hz: sample_rate,
    })
}

pub fn write_bmel(path: &Path, spec: &LogMelSpectrogram) -> Result<()> {
    fs::write(path, encode_bmel(spec)).map_err(|e| Error::io(path, e))
}

pub fn read_bmel(path: &Path) -> Result<LogMelSpectrogram> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bmel(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_spec() -> LogMelSpectrogram {
        LogMelSpectrogram {
            values: Mat::from_fn(5, 8, |r, c| (r * 8 + c) as f64 * 0.25 - 3.0),
            n_mels: 8,
            hop_samples: 512,
            win_samples: 2048,
            sample_rate_hz: 44100,
        }
    }

    #[test]
    fn write_read_write_is_bitwise_stable() {
        let bytes = encode_bmel(&sample_spec());
        let decoded = decode_bmel(&bytes).unwrap();
        assert_eq!(encode_bmel(&decoded), bytes);
    }

    #[test]
    fn metadata_roundtrips() {
        let spec = sample_spec();
        let decoded = decode_bmel(&encode_bmel(&spec)).unwrap();
        assert_eq!(decoded.values.rows(), 5);
        assert_eq!(decoded.values.cols(), 8);
        assert_eq!(decoded.sample_rate_hz, 44100);
        assert_eq!(decoded.hop_samples, 512);
        assert_eq!(decoded.win_samples, 2048);
    }

    #[test]
    fn unknown_version_rejected() {
        let mut bytes = encode_bmel(&sample_spec());
        bytes[4] = 9;
        let err = decode_bmel(&bytes).unwrap_err();
        assert!(matches!(err, Error::Format { offset: 4, .. }), "got {err}");
    }

    #[test]
    fn truncation_names_expected_byte_count() {
        let bytes = encode_bmel(&sample_spec());
        let err = decode_bmel(&bytes[..bytes.len() - 3]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains(&format!("{}", bytes.len())), "message: {msg}");
    }
}
