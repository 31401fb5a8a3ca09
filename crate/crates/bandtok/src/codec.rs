//! Convolutional encoder/decoder pair around the Haar patchification.
//!
//! Geometry: Haar patch (x2 per axis) followed by two stride-2
//! convolutions gives a total 8x downsampling in time and frequency, so a
//! 128-bin input yields 16 frequency-band positions. The decoder mirrors
//! the encoder with adjoint convolutions and the inverse Haar transform.

use rand::Rng;

use crate::dsp::{FrontendConfig, LogMelSpectrogram};
use crate::error::{Error, Result};
use crate::haar::{haar_forward, haar_inverse, PatchedSpectrogram};
use crate::mat::{Grid3, Mat};
use crate::nn::{
    conv2d, conv2d_adjoint, conv2d_adjoint_grads, conv2d_grad_input, conv2d_grad_params,
    leaky_relu, leaky_relu_grad, ConvKernel,
};
use crate::store::TensorStore;

/// Total downsampling factor per axis (Haar x2 times two stride-2 convs).
pub const DOWNSAMPLE: usize = 8;

const SUBBAND_CHANNELS: usize = 4;

/// Layer widths of the desk-scale codec.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodecConfig {
    /// Latent channel count C.
    pub channels: usize,
    /// Width of the intermediate convolution.
    pub hidden_channels: usize,
    /// Square kernel size of every convolution.
    pub kernel: usize,
    /// Clamp floor of the log-Mel domain; must match the frontend.
    pub floor_epsilon: f64,
}

impl Default for CodecConfig {
    fn default() -> Self {
        CodecConfig {
            channels: 8,
            hidden_channels: 16,
            kernel: 3,
            floor_epsilon: 1e-5,
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.hidden_channels == 0 {
            return Err(Error::config("codec channel counts must be positive"));
        }
        if self.kernel == 0 {
            return Err(Error::config("codec kernel size must be positive"));
        }
        if !(self.floor_epsilon > 0.0) {
            return Err(Error::config("floor_epsilon must be positive"));
        }
        Ok(())
    }

    pub fn log_floor(&self) -> f64 {
        self.floor_epsilon.ln()
    }
}

/// A C x T' x F' latent grid plus the source-frame metadata needed to
/// reconstruct spectrogram geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentGrid {
    pub values: Grid3,
    pub original_frames: usize,
    pub sample_rate_hz: u32,
    pub hop_samples: usize,
}

impl LatentGrid {
    pub fn channels(&self) -> usize {
        self.values.channels()
    }

    pub fn frames(&self) -> usize {
        self.values.height()
    }

    pub fn bands(&self) -> usize {
        self.values.width()
    }

    /// Latent frames per second: sample_rate / (hop * 8).
    pub fn frame_rate_hz(&self) -> f64 {
        self.sample_rate_hz as f64 / (self.hop_samples as f64 * DOWNSAMPLE as f64)
    }
}

/// Latent frame rate implied by a frontend configuration.
pub fn latent_frame_rate_hz(sample_rate_hz: u32, cfg: &FrontendConfig) -> f64 {
    sample_rate_hz as f64 / (cfg.hop_samples as f64 * DOWNSAMPLE as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub kernel: ConvKernel,
    pub bias: Vec<f64>,
}

/// All encoder/decoder weights. Decoder kernels are stored in convolution
/// orientation (c_out = upsampling input channels).
#[derive(Debug, Clone, PartialEq)]
pub struct CodecParams {
    pub cfg: CodecConfig,
    pub enc1: ConvLayer,
    pub enc2: ConvLayer,
    pub dec1: ConvLayer,
    pub dec2: ConvLayer,
}

impl CodecParams {
    pub fn zeros(cfg: CodecConfig) -> Self {
        let (c, hid, k) = (cfg.channels, cfg.hidden_channels, cfg.kernel);
        CodecParams {
            enc1: ConvLayer {
                kernel: ConvKernel::zeros(hid, SUBBAND_CHANNELS, k),
                bias: vec![0.0; hid],
            },
            enc2: ConvLayer {
                kernel: ConvKernel::zeros(c, hid, k),
                bias: vec![0.0; c],
            },
            dec1: ConvLayer {
                kernel: ConvKernel::zeros(c, hid, k),
                bias: vec![0.0; hid],
            },
            dec2: ConvLayer {
                kernel: ConvKernel::zeros(hid, SUBBAND_CHANNELS, k),
                bias: vec![0.0; SUBBAND_CHANNELS],
            },
            cfg,
        }
    }

    pub fn init(cfg: CodecConfig, rng: &mut impl Rng) -> Self {
        let (c, hid, k) = (cfg.channels, cfg.hidden_channels, cfg.kernel);
        let mut p = CodecParams {
            enc1: ConvLayer {
                kernel: ConvKernel::init(hid, SUBBAND_CHANNELS, k, rng),
                bias: crate::nn::uniform_init(hid, SUBBAND_CHANNELS * k * k, rng),
            },
            enc2: ConvLayer {
                kernel: ConvKernel::init(c, hid, k, rng),
                bias: crate::nn::uniform_init(c, hid * k * k, rng),
            },
            dec1: ConvLayer {
                kernel: ConvKernel::init(c, hid, k, rng),
                bias: crate::nn::uniform_init(hid, c * k * k, rng),
            },
            dec2: ConvLayer {
                kernel: ConvKernel::init(hid, SUBBAND_CHANNELS, k, rng),
                bias: crate::nn::uniform_init(SUBBAND_CHANNELS, hid * k * k, rng),
            },
            cfg,
        };
        // Start the LL bias high enough that initial outputs sit above the
        // output floor, where the reconstruction gradient is nonzero.
        p.dec2.bias[0] += 2.0;
        p
    }

    /// Flattened parameter count; a pure function of the layer spec.
    pub fn param_count(cfg: &CodecConfig) -> usize {
        let (c, hid, k) = (cfg.channels, cfg.hidden_channels, cfg.kernel);
        let conv = |c_out: usize, c_in: usize| c_out * c_in * k * k + c_out;
        conv(hid, SUBBAND_CHANNELS)
            + conv(c, hid)
            + (c * hid * k * k + hid)
            + (hid * SUBBAND_CHANNELS * k * k + SUBBAND_CHANNELS)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(Self::param_count(&self.cfg));
        for layer in [&self.enc1, &self.enc2, &self.dec1, &self.dec2] {
            out.extend_from_slice(&layer.kernel.data);
            out.extend_from_slice(&layer.bias);
        }
        out
    }

    pub fn from_flat(cfg: CodecConfig, flat: &[f64]) -> Result<Self> {
        if flat.len() != Self::param_count(&cfg) {
            return Err(Error::invalid("flat parameter length mismatch"));
        }
        let mut p = CodecParams::zeros(cfg);
        let mut at = 0;
        for layer in [&mut p.enc1, &mut p.enc2, &mut p.dec1, &mut p.dec2] {
            let kn = layer.kernel.data.len();
            layer.kernel.data.copy_from_slice(&flat[at..at + kn]);
            at += kn;
            let bn = layer.bias.len();
            layer.bias.copy_from_slice(&flat[at..at + bn]);
            at += bn;
        }
        Ok(p)
    }

    pub fn save(&self, store: &mut TensorStore) -> Result<()> {
        let k = self.cfg.kernel;
        let dims = |l: &ConvLayer| vec![l.kernel.c_out, l.kernel.c_in, k, k];
        for (name, layer) in [
            ("codec.enc1", &self.enc1),
            ("codec.enc2", &self.enc2),
            ("codec.dec1", &self.dec1),
            ("codec.dec2", &self.dec2),
        ] {
            store.insert(
                &format!("{name}.weight"),
                dims(layer),
                layer.kernel.data.clone(),
            )?;
            store.insert(
                &format!("{name}.bias"),
                vec![layer.bias.len()],
                layer.bias.clone(),
            )?;
        }
        Ok(())
    }

    pub fn load(cfg: CodecConfig, store: &TensorStore) -> Result<Self> {
        let mut p = CodecParams::zeros(cfg);
        for (name, layer) in [
            ("codec.enc1", &mut p.enc1),
            ("codec.enc2", &mut p.enc2),
            ("codec.dec1", &mut p.dec1),
            ("codec.dec2", &mut p.dec2),
        ] {
            let w = store.get(&format!("{name}.weight"))?;
            if w.data.len() != layer.kernel.data.len() {
                return Err(Error::format(
                    format!("tensor {name}.weight has {} values, config expects {}",
                        w.data.len(),
                        layer.kernel.data.len()),
                    8,
                ));
            }
            layer.kernel.data.copy_from_slice(&w.data);
            let b = store.get(&format!("{name}.bias"))?;
            if b.data.len() != layer.bias.len() {
                return Err(Error::format(
                    format!("tensor {name}.bias has {} values, config expects {}",
                        b.data.len(),
                        layer.bias.len()),
                    8,
                ));
            }
            layer.bias.copy_from_slice(&b.data);
        }
        Ok(p)
    }
}

/// Gradients mirroring [`CodecParams`].
#[derive(Debug, Clone)]
pub struct CodecGrads {
    pub enc1_k: ConvKernel,
    pub enc1_b: Vec<f64>,
    pub enc2_k: ConvKernel,
    pub enc2_b: Vec<f64>,
    pub dec1_k: ConvKernel,
    pub dec1_b: Vec<f64>,
    pub dec2_k: ConvKernel,
    pub dec2_b: Vec<f64>,
}

impl CodecGrads {
    pub fn zeros(cfg: &CodecConfig) -> Self {
        let p = CodecParams::zeros(cfg.clone());
        CodecGrads {
            enc1_k: ConvKernel::zeros(p.enc1.kernel.c_out, p.enc1.kernel.c_in, cfg.kernel),
            enc1_b: vec![0.0; p.enc1.bias.len()],
            enc2_k: ConvKernel::zeros(p.enc2.kernel.c_out, p.enc2.kernel.c_in, cfg.kernel),
            enc2_b: vec![0.0; p.enc2.bias.len()],
            dec1_k: ConvKernel::zeros(p.dec1.kernel.c_out, p.dec1.kernel.c_in, cfg.kernel),
            dec1_b: vec![0.0; p.dec1.bias.len()],
            dec2_k: ConvKernel::zeros(p.dec2.kernel.c_out, p.dec2.kernel.c_in, cfg.kernel),
            dec2_b: vec![0.0; p.dec2.bias.len()],
        }
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.enc1_k.data);
        out.extend_from_slice(&self.enc1_b);
        out.extend_from_slice(&self.enc2_k.data);
        out.extend_from_slice(&self.enc2_b);
        out.extend_from_slice(&self.dec1_k.data);
        out.extend_from_slice(&self.dec1_b);
        out.extend_from_slice(&self.dec2_k.data);
        out.extend_from_slice(&self.dec2_b);
        out
    }

    pub fn add_scaled(&mut self, other: &CodecGrads, s: f64) {
        let pairs: [(&mut Vec<f64>, &Vec<f64>); 4] = [
            (&mut self.enc1_b, &other.enc1_b),
            (&mut self.enc2_b, &other.enc2_b),
            (&mut self.dec1_b, &other.dec1_b),
            (&mut self.dec2_b, &other.dec2_b),
        ];
        for (dst, src) in pairs {
            for (d, v) in dst.iter_mut().zip(src) {
                *d += s * v;
            }
        }
        for (dst, src) in [
            (&mut self.enc1_k.data, &other.enc1_k.data),
            (&mut self.enc2_k.data, &other.enc2_k.data),
            (&mut self.dec1_k.data, &other.dec1_k.data),
            (&mut self.dec2_k.data, &other.dec2_k.data),
        ] {
            for (d, v) in dst.iter_mut().zip(src.iter()) {
                *d += s * v;
            }
        }
    }
}

fn patched_to_grid(p: &PatchedSpectrogram) -> Grid3 {
    Grid3::from_channels(&p.subbands).expect("sub-bands share a shape")
}

fn grid_to_patched(g: &Grid3, original_shape: (usize, usize)) -> PatchedSpectrogram {
    debug_assert_eq!(g.channels(), SUBBAND_CHANNELS);
    PatchedSpectrogram {
        subbands: [g.channel(0), g.channel(1), g.channel(2), g.channel(3)],
        original_shape,
    }
}

/// Cached activations of one encoder pass.
#[derive(Debug, Clone)]
pub struct EncodeTrace {
    pub patched: Grid3,
    pub pre1: Grid3,
    pub act1: Grid3,
}

/// Cached activations of one decoder pass.
#[derive(Debug, Clone)]
pub struct DecodeTrace {
    pub latent: Grid3,
    pub pre1: Grid3,
    pub act1: Grid3,
    pub subbands: Grid3,
    /// Inverse-Haar output before the floor transform, cropped to T rows.
    pub raw: Mat,
}

fn check_encode_input(x: &LogMelSpectrogram) -> Result<()> {
    if x.values.is_empty() {
        return Err(Error::invalid("cannot encode an empty spectrogram"));
    }
    if x.values.cols() % DOWNSAMPLE != 0 {
        return Err(Error::config(format!(
            "mel bin count {} must be divisible by {}",
            x.values.cols(),
            DOWNSAMPLE
        )));
    }
    Ok(())
}

/// Encodes a spectrogram into a C x ceil(T/8) x (F/8) latent grid.
pub fn encode(x: &LogMelSpectrogram, params: &CodecParams) -> Result<LatentGrid> {
    encode_trace(x, params).map(|(z, _)| z)
}

pub fn encode_trace(
    x: &LogMelSpectrogram,
    params: &CodecParams,
) -> Result<(LatentGrid, EncodeTrace)> {
    params.cfg.validate()?;
    check_encode_input(x)?;
    let patched = patched_to_grid(&haar_forward(&x.values)?);
    let pre1 = conv2d(&patched, &params.enc1.kernel, &params.enc1.bias, 2);
    let act1 = pre1.map(leaky_relu);
    let latent = conv2d(&act1, &params.enc2.kernel, &params.enc2.bias, 2);
    let grid = LatentGrid {
        values: latent,
        original_frames: x.values.rows(),
        sample_rate_hz: x.sample_rate_hz,
        hop_samples: x.hop_samples,
    };
    Ok((
        grid,
        EncodeTrace {
            patched,
            pre1,
            act1,
        },
    ))
}

/// Decodes a latent grid back to a (T' * 8) x (F' * 8) spectrogram,
/// cropped to the recorded original frame count. Output values are
/// ln(floor_epsilon) + max(raw, 0), so they stay in the log-Mel domain.
pub fn decode(z: &LatentGrid, params: &CodecParams) -> Result<LogMelSpectrogram> {
    decode_trace(z, params).map(|(x, _)| x)
}

pub fn decode_trace(
    z: &LatentGrid,
    params: &CodecParams,
) -> Result<(LogMelSpectrogram, DecodeTrace)> {
    params.cfg.validate()?;
    if z.channels() != params.cfg.channels {
        return Err(Error::config(format!(
            "latent has {} channels, codec expects {}",
            z.channels(),
            params.cfg.channels
        )));
    }
    let latent = z.values.clone();
    let pre1 = conv2d_adjoint(&latent, &params.dec1.kernel, &params.dec1.bias, 2);
    let act1 = pre1.map(leaky_relu);
    let subbands = conv2d_adjoint(&act1, &params.dec2.kernel, &params.dec2.bias, 2);
    let full_shape = (subbands.height() * 2, subbands.width() * 2);
    let full = haar_inverse(&grid_to_patched(&subbands, full_shape))?;

    let t = z.original_frames.min(full.rows());
    let raw = Mat::from_fn(t, full.cols(), |r, c| full.get(r, c));
    let floor = params.cfg.log_floor();
    let values = raw.map(|v| floor + v.max(0.0));
    let spec = LogMelSpectrogram {
        values,
        n_mels: full.cols(),
        hop_samples: z.hop_samples,
        win_samples: 0,
        sample_rate_hz: z.sample_rate_hz,
    };
    Ok((
        spec,
        DecodeTrace {
            latent,
            pre1,
            act1,
            subbands,
            raw,
        },
    ))
}

/// Backward through the decoder: upstream is dL/d(output values) on the
/// cropped T x F output. Returns dL/d(latent) and accumulates decoder
/// parameter gradients.
pub fn decode_backward(
    trace: &DecodeTrace,
    upstream: &Mat,
    params: &CodecParams,
    grads: &mut CodecGrads,
) -> Result<Grid3> {
    if upstream.rows() != trace.raw.rows() || upstream.cols() != trace.raw.cols() {
        return Err(Error::invalid("decode upstream shape mismatch"));
    }
    let full_rows = trace.subbands.height() * 2;
    let cols = trace.raw.cols();
    // Floor transform gradient, then zero-pad the cropped rows back out.
    let mut d_full = Mat::zeros(full_rows, cols);
    for r in 0..upstream.rows() {
        for c in 0..cols {
            if trace.raw.get(r, c) > 0.0 {
                d_full.set(r, c, upstream.get(r, c));
            }
        }
    }
    // Adjoint of the orthonormal inverse Haar is the forward transform.
    let d_subbands = patched_to_grid(&haar_forward(&d_full)?);

    let (d_act1, gk2, gb2) = conv2d_adjoint_grads(&trace.act1, &d_subbands, &params.dec2.kernel, 2);
    grads.dec2_k.data.iter_mut().zip(&gk2.data).for_each(|(a, b)| *a += b);
    grads.dec2_b.iter_mut().zip(&gb2).for_each(|(a, b)| *a += b);

    let mut d_pre1 = d_act1;
    for (g, &p) in d_pre1.as_mut_slice().iter_mut().zip(trace.pre1.as_slice()) {
        *g *= leaky_relu_grad(p);
    }

    let (d_latent, gk1, gb1) = conv2d_adjoint_grads(&trace.latent, &d_pre1, &params.dec1.kernel, 2);
    grads.dec1_k.data.iter_mut().zip(&gk1.data).for_each(|(a, b)| *a += b);
    grads.dec1_b.iter_mut().zip(&gb1).for_each(|(a, b)| *a += b);
    Ok(d_latent)
}

/// Backward through the encoder: upstream is dL/d(latent). Accumulates
/// encoder parameter gradients.
pub fn encode_backward(
    trace: &EncodeTrace,
    d_latent: &Grid3,
    params: &CodecParams,
    grads: &mut CodecGrads,
) {
    let shape2 = (
        params.enc2.kernel.c_out,
        params.enc2.kernel.c_in,
        params.enc2.kernel.k,
    );
    let (gk2, gb2) = conv2d_grad_params(&trace.act1, d_latent, shape2, 2);
    grads.enc2_k.data.iter_mut().zip(&gk2.data).for_each(|(a, b)| *a += b);
    grads.enc2_b.iter_mut().zip(&gb2).for_each(|(a, b)| *a += b);

    let mut d_pre1 = conv2d_grad_input(
        d_latent,
        &params.enc2.kernel,
        2,
        trace.act1.height(),
        trace.act1.width(),
    );
    for (g, &p) in d_pre1.as_mut_slice().iter_mut().zip(trace.pre1.as_slice()) {
        *g *= leaky_relu_grad(p);
    }

    let shape1 = (
        params.enc1.kernel.c_out,
        params.enc1.kernel.c_in,
        params.enc1.kernel.k,
    );
    let (gk1, gb1) = conv2d_grad_params(&trace.patched, &d_pre1, shape1, 2);
    grads.enc1_k.data.iter_mut().zip(&gk1.data).for_each(|(a, b)| *a += b);
    grads.enc1_b.iter_mut().zip(&gb1).for_each(|(a, b)| *a += b);
}
