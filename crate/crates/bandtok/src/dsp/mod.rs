//! Log-Mel frontend: waveform framing, STFT, Mel filterbank, and the
//! reconstruction distance metrics.
//!
//! Analysis defaults follow the tokenizer's fixed parameters: 2048-sample
//! periodic-Hann window, 512-sample hop, 128 Mel bins at 44.1 kHz, with
//! reflect center padding and a clamp floor applied before the log.

pub mod bmel;
pub mod wav;

use std::sync::Arc;

use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::par;

/// A mono waveform in [-1, 1].
#[derive(Debug, Clone)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("waveform must be non-empty"));
        }
        if sample_rate_hz == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        Ok(Waveform {
            samples,
            sample_rate_hz,
        })
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Mel scale variant used to place filter centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MelScale {
    /// Linear below 1 kHz, logarithmic above.
    #[default]
    Slaney,
    /// 2595 * log10(1 + f/700).
    Htk,
}

/// Analysis parameters for the log-Mel frontend.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FrontendConfig {
    pub n_mels: usize,
    pub win_samples: usize,
    pub hop_samples: usize,
    /// Clamp floor applied to Mel amplitudes before the log.
    pub floor_epsilon: f64,
    pub mel_scale: MelScale,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig {
            n_mels: 128,
            win_samples: 2048,
            hop_samples: 512,
            floor_epsilon: 1e-5,
            mel_scale: MelScale::Slaney,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mels == 0 {
            return Err(Error::config("n_mels must be positive"));
        }
        if self.hop_samples == 0 {
            return Err(Error::config("hop_samples must be positive"));
        }
        if self.win_samples < self.hop_samples {
            return Err(Error::config("window length must be >= hop length"));
        }
        if !(self.floor_epsilon > 0.0) {
            return Err(Error::config("floor_epsilon must be positive"));
        }
        Ok(())
    }

    /// Log-domain clamp floor: no spectrogram entry sits below this.
    pub fn log_floor(&self) -> f64 {
        self.floor_epsilon.ln()
    }
}

/// A T x F matrix of log-Mel amplitudes plus the analysis metadata that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelSpectrogram {
    pub values: Mat,
    pub n_mels: usize,
    pub hop_samples: usize,
    pub win_samples: usize,
    pub sample_rate_hz: u32,
}

impl LogMelSpectrogram {
    pub fn frames(&self) -> usize {
        self.values.rows()
    }
}

/// Frame count under center padding: ceil(n / hop).
pub fn frame_count(num_samples: usize, hop: usize) -> usize {
    num_samples.div_ceil(hop)
}

fn mel_of_hz(hz: f64, scale: MelScale) -> f64 {
    match scale {
        MelScale::Htk => 2595.0 * (1.0 + hz / 700.0).log10(),
        MelScale::Slaney => {
            let f_sp = 200.0 / 3.0;
            let min_log_hz = 1000.0;
            if hz < min_log_hz {
                hz / f_sp
            } else {
                let min_log_mel = min_log_hz / f_sp;
                let logstep = 6.4_f64.ln() / 27.0;
                min_log_mel + (hz / min_log_hz).ln() / logstep
            }
        }
    }
}

fn hz_of_mel(mel: f64, scale: MelScale) -> f64 {
    match scale {
        MelScale::Htk => 700.0 * (10.0_f64.powf(mel / 2595.0) - 1.0),
        MelScale::Slaney => {
            let f_sp = 200.0 / 3.0;
            let min_log_hz = 1000.0;
            let min_log_mel = min_log_hz / f_sp;
            if mel < min_log_mel {
                mel * f_sp
            } else {
                let logstep = 6.4_f64.ln() / 27.0;
                min_log_hz * ((mel - min_log_mel) * logstep).exp()
            }
        }
    }
}

/// Edge frequencies of the triangular filters: n_mels + 2 points evenly
/// spaced on the Mel scale over [0, sr/2].
pub fn mel_edge_frequencies(n_mels: usize, sample_rate_hz: u32, scale: MelScale) -> Vec<f64> {
    let mel_max = mel_of_hz(sample_rate_hz as f64 / 2.0, scale);
    (0..n_mels + 2)
        .map(|i| hz_of_mel(mel_max * i as f64 / (n_mels + 1) as f64, scale))
        .collect()
}

/// Center frequency of each Mel filter, strictly increasing.
pub fn mel_center_frequencies(n_mels: usize, sample_rate_hz: u32, scale: MelScale) -> Vec<f64> {
    mel_edge_frequencies(n_mels, sample_rate_hz, scale)[1..=n_mels].to_vec()
}

/// Triangular Mel filterbank, n_mels x (n_fft/2 + 1), peak-one triangles
/// evaluated at the FFT bin frequencies.
pub fn mel_filterbank(
    n_fft: usize,
    n_mels: usize,
    sample_rate_hz: u32,
    scale: MelScale,
) -> Result<Mat> {
    let n_bins = n_fft / 2 + 1;
    if n_mels == 0 {
        return Err(Error::config("n_mels must be positive"));
    }
    if n_mels >= n_bins {
        return Err(Error::config(format!(
            "n_mels = {} must be < n_fft/2+1 = {}",
            n_mels, n_bins
        )));
    }
    let edges = mel_edge_frequencies(n_mels, sample_rate_hz, scale);
    let bin_hz = sample_rate_hz as f64 / n_fft as f64;
    let bank = Mat::from_fn(n_mels, n_bins, |m, k| {
        let f = k as f64 * bin_hz;
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        if f <= lo || f >= hi {
            0.0
        } else if f <= center {
            (f - lo) / (center - lo)
        } else {
            (hi - f) / (hi - center)
        }
    });
    for m in 0..n_mels {
        if bank.row(m).iter().all(|&w| w == 0.0) {
            return Err(Error::config(format!(
                "mel filter {} has no support at this FFT resolution",
                m
            )));
        }
    }
    Ok(bank)
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

// Reflect index into [0, n), bouncing off both ends without repeating the
// boundary samples (period 2n - 2).
fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

struct StftPlan {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    win: usize,
    hop: usize,
}

impl StftPlan {
    fn new(win: usize, hop: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(win);
        StftPlan {
            fft,
            window: hann_window(win),
            win,
            hop,
        }
    }

    /// Power spectrum (|X|^2 over bins 0..=win/2) of frame `t`, with the
    /// signal reflect-padded by win/2 on each side.
    fn frame_power(&self, samples: &[f64], t: usize) -> Vec<f64> {
        let start = (t * self.hop) as isize - (self.win / 2) as isize;
        let mut buf: Vec<Complex<f64>> = (0..self.win)
            .map(|i| {
                let s = samples[reflect_index(start + i as isize, samples.len())];
                Complex::new(s * self.window[i], 0.0)
            })
            .collect();
        self.fft.process(&mut buf);
        buf[..self.win / 2 + 1].iter().map(|c| c.norm_sqr()).collect()
    }
}

fn log_mel_rows(
    w: &Waveform,
    cfg: &FrontendConfig,
    sequential: bool,
) -> Result<LogMelSpectrogram> {
    w_validate(w)?;
    cfg.validate()?;
    let bank = mel_filterbank(cfg.win_samples, cfg.n_mels, w.sample_rate_hz, cfg.mel_scale)?;
    let plan = StftPlan::new(cfg.win_samples, cfg.hop_samples);
    let frames = frame_count(w.samples.len(), cfg.hop_samples);
    let floor = cfg.floor_epsilon;

    let row_of = |t: usize| -> Vec<f64> {
        let power = plan.frame_power(&w.samples, t);
        (0..cfg.n_mels)
            .map(|m| {
                let mel_power: f64 = bank
                    .row(m)
                    .iter()
                    .zip(&power)
                    .map(|(w, p)| w * p)
                    .sum();
                mel_power.sqrt().max(floor).ln()
            })
            .collect()
    };
    let rows = if sequential {
        par::map_indexed_seq(frames, row_of)
    } else {
        par::map_indexed(frames, row_of)
    };
    Ok(LogMelSpectrogram {
        values: Mat::from_rows(&rows)?,
        n_mels: cfg.n_mels,
        hop_samples: cfg.hop_samples,
        win_samples: cfg.win_samples,
        sample_rate_hz: w.sample_rate_hz,
    })
}

fn w_validate(w: &Waveform) -> Result<()> {
    if w.samples.is_empty() {
        return Err(Error::invalid("waveform must be non-empty"));
    }
    if w.sample_rate_hz == 0 {
        return Err(Error::invalid("sample rate must be positive"));
    }
    Ok(())
}

/// Computes the log-Mel spectrogram of `w`: ceil(n/hop) frames of n_mels
/// log amplitudes, each entry ln(max(sqrt(mel_power), floor_epsilon)).
pub fn compute_log_mel(w: &Waveform, cfg: &FrontendConfig) -> Result<LogMelSpectrogram> {
    log_mel_rows(w, cfg, false)
}

/// Sequential fallback for [`compute_log_mel`]; identical output.
pub fn compute_log_mel_seq(w: &Waveform, cfg: &FrontendConfig) -> Result<LogMelSpectrogram> {
    log_mel_rows(w, cfg, true)
}

/// Mean absolute difference over all entries of two equal-shape spectrograms.
pub fn mel_distance(a: &LogMelSpectrogram, b: &LogMelSpectrogram) -> Result<f64> {
    if !a.values.same_shape(&b.values) {
        return Err(Error::invalid(format!(
            "spectrogram shape mismatch: {}x{} vs {}x{}",
            a.values.rows(),
            a.values.cols(),
            b.values.rows(),
            b.values.cols()
        )));
    }
    let n = a.values.len() as f64;
    let sum: f64 = a
        .values
        .as_slice()
        .iter()
        .zip(b.values.as_slice())
        .map(|(x, y)| (x - y).abs())
        .sum();
    Ok(sum / n)
}

pub const DEFAULT_STFT_SCALES: [usize; 3] = [2048, 1024, 512];

/// Multi-scale log-magnitude STFT distance: for each FFT size in `scales`
/// (hop = size/4), the mean L1 between log magnitudes, averaged over scales.
pub fn stft_distance(a: &Waveform, b: &Waveform, scales: &[usize]) -> Result<f64> {
    w_validate(a)?;
    w_validate(b)?;
    if a.samples.len() != b.samples.len() {
        return Err(Error::invalid("stft_distance requires equal lengths"));
    }
    if scales.is_empty() {
        return Err(Error::invalid("stft_distance requires at least one scale"));
    }
    let floor = 1e-5_f64;
    let mut total = 0.0;
    for &win in scales {
        if win < 4 {
            return Err(Error::invalid("stft scale must be >= 4"));
        }
        let plan = StftPlan::new(win, win / 4);
        let frames = frame_count(a.samples.len(), win / 4);
        let n_bins = win / 2 + 1;
        let mut sum = 0.0;
        for t in 0..frames {
            let pa = plan.frame_power(&a.samples, t);
            let pb = plan.frame_power(&b.samples, t);
            for k in 0..n_bins {
                let la = pa[k].sqrt().max(floor).ln();
                let lb = pb[k].sqrt().max(floor).ln();
                sum += (la - lb).abs();
            }
        }
        total += sum / (frames * n_bins) as f64;
    }
    Ok(total / scales.len() as f64)
}

#[cfg(test)]
mod tests;
