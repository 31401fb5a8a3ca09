//! Convolution primitives with hand-written gradients, shared by the
//! encoder/decoder pair and the spectrogram critics, plus the Adam
//! optimizer used by every training loop.
//!
//! Convolutions use "same-ceil" geometry: output dims are ceil(in/stride),
//! with padding split evenly (extra on the trailing edge). The upsampling
//! layer is the exact adjoint of a stride-2 convolution, so encoder and
//! decoder geometries mirror each other by construction.

use rand::Rng;

use crate::mat::Grid3;

pub const LEAKY_SLOPE: f64 = 0.2;

#[inline]
pub fn leaky_relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        LEAKY_SLOPE * x
    }
}

#[inline]
pub fn leaky_relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

/// Convolution kernel, indexed [c_out][c_in][ky][kx].
#[derive(Debug, Clone, PartialEq)]
pub struct ConvKernel {
    pub c_out: usize,
    pub c_in: usize,
    pub k: usize,
    pub data: Vec<f64>,
}

impl ConvKernel {
    pub fn zeros(c_out: usize, c_in: usize, k: usize) -> Self {
        ConvKernel {
            c_out,
            c_in,
            k,
            data: vec![0.0; c_out * c_in * k * k],
        }
    }

    /// Seeded uniform init in [-s, s] with s = 1/sqrt(fan_in).
    pub fn init(c_out: usize, c_in: usize, k: usize, rng: &mut impl Rng) -> Self {
        let s = 1.0 / ((c_in * k * k) as f64).sqrt();
        let data = (0..c_out * c_in * k * k)
            .map(|_| rng.random_range(-s..s))
            .collect();
        ConvKernel { c_out, c_in, k, data }
    }

    #[inline]
    pub fn get(&self, co: usize, ci: usize, ky: usize, kx: usize) -> f64 {
        self.data[((co * self.c_in + ci) * self.k + ky) * self.k + kx]
    }

    #[inline]
    pub fn add_at(&mut self, co: usize, ci: usize, ky: usize, kx: usize, v: f64) {
        self.data[((co * self.c_in + ci) * self.k + ky) * self.k + kx] += v;
    }
}

#[inline]
fn pad_before(in_dim: usize, out_dim: usize, k: usize, stride: usize) -> usize {
    let total = ((out_dim - 1) * stride + k).saturating_sub(in_dim);
    total / 2
}

/// Forward convolution: (c_in, h, w) -> (c_out, ceil(h/s), ceil(w/s)).
pub fn conv2d(x: &Grid3, kernel: &ConvKernel, bias: &[f64], stride: usize) -> Grid3 {
    assert_eq!(x.channels(), kernel.c_in, "conv input channels");
    assert_eq!(bias.len(), kernel.c_out, "conv bias length");
    let (h, w) = (x.height(), x.width());
    let (oh, ow) = (h.div_ceil(stride), w.div_ceil(stride));
    let (pt, pl) = (
        pad_before(h, oh, kernel.k, stride),
        pad_before(w, ow, kernel.k, stride),
    );
    let mut out = Grid3::zeros(kernel.c_out, oh, ow);
    for co in 0..kernel.c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias[co];
                for ci in 0..kernel.c_in {
                    for ky in 0..kernel.k {
                        let iy = (oy * stride + ky) as isize - pt as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..kernel.k {
                            let ix = (ox * stride + kx) as isize - pl as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += kernel.get(co, ci, ky, kx)
                                * x.get(ci, iy as usize, ix as usize);
                        }
                    }
                }
                out.set(co, oy, ox, acc);
            }
        }
    }
    out
}

/// Gradient of a convolution with respect to its input.
pub fn conv2d_grad_input(
    upstream: &Grid3,
    kernel: &ConvKernel,
    stride: usize,
    in_h: usize,
    in_w: usize,
) -> Grid3 {
    assert_eq!(upstream.channels(), kernel.c_out);
    let (oh, ow) = (upstream.height(), upstream.width());
    let (pt, pl) = (
        pad_before(in_h, oh, kernel.k, stride),
        pad_before(in_w, ow, kernel.k, stride),
    );
    let mut gx = Grid3::zeros(kernel.c_in, in_h, in_w);
    for co in 0..kernel.c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let u = upstream.get(co, oy, ox);
                if u == 0.0 {
                    continue;
                }
                for ci in 0..kernel.c_in {
                    for ky in 0..kernel.k {
                        let iy = (oy * stride + ky) as isize - pt as isize;
                        if iy < 0 || iy >= in_h as isize {
                            continue;
                        }
                        for kx in 0..kernel.k {
                            let ix = (ox * stride + kx) as isize - pl as isize;
                            if ix < 0 || ix >= in_w as isize {
                                continue;
                            }
                            gx.add_at(ci, iy as usize, ix as usize, kernel.get(co, ci, ky, kx) * u);
                        }
                    }
                }
            }
        }
    }
    gx
}

/// Gradients of a convolution with respect to kernel and bias.
pub fn conv2d_grad_params(
    x: &Grid3,
    upstream: &Grid3,
    kernel_shape: (usize, usize, usize),
    stride: usize,
) -> (ConvKernel, Vec<f64>) {
    let (c_out, c_in, k) = kernel_shape;
    assert_eq!(x.channels(), c_in);
    assert_eq!(upstream.channels(), c_out);
    let (h, w) = (x.height(), x.width());
    let (oh, ow) = (upstream.height(), upstream.width());
    let (pt, pl) = (pad_before(h, oh, k, stride), pad_before(w, ow, k, stride));
    let mut gk = ConvKernel::zeros(c_out, c_in, k);
    let mut gb = vec![0.0; c_out];
    for co in 0..c_out {
        for oy in 0..oh {
            for ox in 0..ow {
                let u = upstream.get(co, oy, ox);
                gb[co] += u;
                if u == 0.0 {
                    continue;
                }
                for ci in 0..c_in {
                    for ky in 0..k {
                        let iy = (oy * stride + ky) as isize - pt as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * stride + kx) as isize - pl as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            gk.add_at(co, ci, ky, kx, u * x.get(ci, iy as usize, ix as usize));
                        }
                    }
                }
            }
        }
    }
    (gk, gb)
}

/// Upsampling layer: the adjoint of a stride-2 convolution, mapping
/// (c_small, h, w) -> (c_big, 2h, 2w), plus a per-channel bias.
///
/// `kernel` is stored in convolution orientation: c_out = c_small,
/// c_in = c_big.
pub fn conv2d_adjoint(x: &Grid3, kernel: &ConvKernel, bias: &[f64], stride: usize) -> Grid3 {
    assert_eq!(x.channels(), kernel.c_out, "adjoint input channels");
    assert_eq!(bias.len(), kernel.c_in, "adjoint bias length");
    let (uh, uw) = (x.height() * stride, x.width() * stride);
    let mut out = conv2d_grad_input(x, kernel, stride, uh, uw);
    for c in 0..kernel.c_in {
        for y in 0..uh {
            for w in 0..uw {
                out.add_at(c, y, w, bias[c]);
            }
        }
    }
    out
}

/// Backward pass of [`conv2d_adjoint`]: returns (input grad, kernel grad,
/// bias grad) given the upstream gradient of its output.
pub fn conv2d_adjoint_grads(
    x: &Grid3,
    upstream: &Grid3,
    kernel: &ConvKernel,
    stride: usize,
) -> (Grid3, ConvKernel, Vec<f64>) {
    let gx = conv2d(upstream, kernel, &vec![0.0; kernel.c_out], stride);
    let (gk, _) = conv2d_grad_params(upstream, x, (kernel.c_out, kernel.c_in, kernel.k), stride);
    let mut gb = vec![0.0; kernel.c_in];
    for c in 0..kernel.c_in {
        let mut s = 0.0;
        for y in 0..upstream.height() {
            for w in 0..upstream.width() {
                s += upstream.get(c, y, w);
            }
        }
        gb[c] = s;
    }
    (gx, gk, gb)
}

/// Adam with bias correction; one instance per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64) -> Self {
        Adam {
            beta1,
            beta2,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, lr: f64, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grads[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Inverse-power learning-rate schedule with exponential warm-up:
/// lr(t) = base * (1 + t/inv_gamma)^(-power) * (1 - warmup^(t+1)).
pub fn scheduled_lr(base: f64, step: u64, inv_gamma: f64, power: f64, warmup: f64) -> f64 {
    let decay = (1.0 + step as f64 / inv_gamma).powf(-power);
    let warm = if warmup > 0.0 {
        1.0 - warmup.powi(step as i32 + 1)
    } else {
        1.0
    };
    base * decay * warm
}

/// Seeded uniform init in [-s, s] with s = 1/sqrt(fan_in).
pub fn uniform_init(n: usize, fan_in: usize, rng: &mut impl Rng) -> Vec<f64> {
    let s = 1.0 / (fan_in.max(1) as f64).sqrt();
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}
