//! Band-wise 2D Mel-spectrogram tokenization and desk-scale autoregressive
//! modeling over the resulting time-frequency token grids.
//!
//! The pipeline: log-Mel frontend -> 2D Haar patchification -> small
//! convolutional encoder -> single shared codebook (EMA updates) ->
//! T' x B token grid, flattened band-first for a decoder-only transformer
//! with interleaved 2D rotary attention, classifier-free guidance, and
//! segment-time conditioning. Analysis tools report normalized mutual
//! information across bands, per-band perplexity profiles, and codebook
//! usage.
//!
//! Data-parallel kernels run on rayon when the default `parallel` feature
//! is enabled; every entry point has a sequential fallback with bitwise
//! identical output.

pub mod dsp;
pub mod codec;
pub mod error;
pub mod haar;
pub mod mat;
pub mod nn;
pub mod rng;
pub mod store;

mod par;

pub use error::{Error, Result};
