//! Single-level 2D Haar patchification with patch size 2.
//!
//! Each 2x2 block of the input is mapped to one coefficient in each of the
//! LL/LH/HL/HH sub-bands using the orthonormal scaling (divide by 2 per
//! block), so the transform conserves energy and inverts exactly.

use crate::error::{Error, Result};
use crate::mat::Mat;

pub const SUBBAND_NAMES: [&str; 4] = ["LL", "LH", "HL", "HH"];

/// The four sub-bands of a patchified spectrogram, each ceil(T/2) x ceil(F/2).
///
/// Channel order is [LL, LH, HL, HH]. `original_shape` records the source
/// dimensions before odd-size edge replication.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchedSpectrogram {
    pub subbands: [Mat; 4],
    pub original_shape: (usize, usize),
}

impl PatchedSpectrogram {
    pub fn band_rows(&self) -> usize {
        self.subbands[0].rows()
    }

    pub fn band_cols(&self) -> usize {
        self.subbands[0].cols()
    }

    fn validate(&self) -> Result<()> {
        let (r, c) = (self.band_rows(), self.band_cols());
        if self.subbands.iter().any(|s| s.rows() != r || s.cols() != c) {
            return Err(Error::invalid("inconsistent sub-band shapes"));
        }
        let (t, f) = self.original_shape;
        if r != t.div_ceil(2) || c != f.div_ceil(2) {
            return Err(Error::invalid(format!(
                "sub-band shape {}x{} does not match original {}x{}",
                r, c, t, f
            )));
        }
        Ok(())
    }
}

/// Forward transform. Odd dimensions are right/bottom edge-replicated to
/// even before the block decomposition.
pub fn haar_forward(m: &Mat) -> Result<PatchedSpectrogram> {
    if m.is_empty() {
        return Err(Error::invalid("haar_forward on empty matrix"));
    }
    let (t, f) = (m.rows(), m.cols());
    let (bt, bf) = (t.div_ceil(2), f.div_ceil(2));
    // Edge replication clamps reads past the boundary to the last row/col.
    let at = |r: usize, c: usize| m.get(r.min(t - 1), c.min(f - 1));

    let mut ll = Mat::zeros(bt, bf);
    let mut lh = Mat::zeros(bt, bf);
    let mut hl = Mat::zeros(bt, bf);
    let mut hh = Mat::zeros(bt, bf);
    for br in 0..bt {
        for bc in 0..bf {
            let a = at(2 * br, 2 * bc);
            let b = at(2 * br, 2 * bc + 1);
            let c = at(2 * br + 1, 2 * bc);
            let d = at(2 * br + 1, 2 * bc + 1);
            ll.set(br, bc, (a + b + c + d) / 2.0);
            lh.set(br, bc, (a - b + c - d) / 2.0);
            hl.set(br, bc, (a + b - c - d) / 2.0);
            hh.set(br, bc, (a - b - c + d) / 2.0);
        }
    }
    Ok(PatchedSpectrogram {
        subbands: [ll, lh, hl, hh],
        original_shape: (t, f),
    })
}

/// Exact inverse of [`haar_forward`], cropped to the recorded original shape.
pub fn haar_inverse(p: &PatchedSpectrogram) -> Result<Mat> {
    p.validate()?;
    let (t, f) = p.original_shape;
    let [ll, lh, hl, hh] = &p.subbands;
    let mut out = Mat::zeros(t, f);
    for br in 0..p.band_rows() {
        for bc in 0..p.band_cols() {
            let s = ll.get(br, bc);
            let u = lh.get(br, bc);
            let v = hl.get(br, bc);
            let w = hh.get(br, bc);
            let a = (s + u + v + w) / 2.0;
            let b = (s - u + v - w) / 2.0;
            let c = (s + u - v - w) / 2.0;
            let d = (s - u - v + w) / 2.0;
            let mut put = |r: usize, col: usize, val: f64| {
                if r < t && col < f {
                    out.set(r, col, val);
                }
            };
            put(2 * br, 2 * bc, a);
            put(2 * br, 2 * bc + 1, b);
            put(2 * br + 1, 2 * bc, c);
            put(2 * br + 1, 2 * bc + 1, d);
        }
    }
    Ok(out)
}
