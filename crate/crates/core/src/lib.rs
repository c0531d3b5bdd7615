//! Sound event detection inference and evaluation.
//!
//! The crate covers the full path from PCM audio to scored event lists:
//!
//! - [`wav`] / [`frontend`]: RIFF decoding, magnitude STFT, HTK mel
//!   filterbank, floored log, per-bin min-max normalization;
//! - [`augment`]: random per-band dB filtering of mel spectrograms (step
//!   and linear profiles) plus mixup, time masking and frame shifting;
//! - [`tensor`] / [`ops`]: dense kernels (convolution with analytic
//!   backward, pooling, batch norm, tempered softmax, GRU cell, affine);
//! - [`fdy`]: frequency-adaptive convolution, whose per-bin kernel is an
//!   attention-weighted mixture of basis kernels, with a verified analytic
//!   backward pass and a finite-difference checker;
//! - [`model`]: the CRNN forward pass (static conv block, six
//!   frequency-adaptive blocks, two BiGRU layers, strong/weak heads) and
//!   the teacher EMA update;
//! - [`postproc`] / [`eval`] / [`pipeline`]: clip-level masking, class-wise
//!   median filtering, event decoding, intersection-criteria matching, ROC
//!   construction, normalized area scores, collar F1 and ensembling;
//! - [`io`]: the `SEDF` / `SEDW` / `SEDP` binary containers;
//! - [`selftest`]: the self-contained acceptance checks.
//!
//! All numeric kernels are generic over [`Scalar`] (`f32` or `f64`); the
//! production path runs in `f32` and gradient verification in `f64`.

pub mod augment;
pub mod error;
pub mod eval;
pub mod fdy;
pub mod frontend;
pub mod io;
pub mod model;
pub mod ops;
pub mod pipeline;
pub mod postproc;
pub mod scalar;
pub mod selftest;
pub mod tensor;
pub mod wav;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::Tensor;

/// Production-precision tensor.
pub type Tensor32 = Tensor<f32>;
/// Wide tensor for gradient verification.
pub type Tensor64 = Tensor<f64>;
/// Production-precision log-mel grid.
pub type LogMel32 = frontend::LogMelSpectrogram<f32>;
/// Production-precision prediction pair.
pub type Predictions32 = model::FramePredictions<f32>;
/// Production-precision weight map.
pub type Weights32 = model::ModelWeights<f32>;
