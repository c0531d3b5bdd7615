//! PCM to normalized log-mel features.
//!
//! Conventions, fixed for reproducibility:
//! - frames are centered: the signal is reflect-padded by `n_fft/2` on each
//!   side, frame `k` starts at `k * hop` in padded coordinates, and the frame
//!   count is `ceil(n_samples / hop)`;
//! - the analysis window is the periodic Hann window;
//! - the mel matrix maps magnitude (not power) spectra, filters are
//!   triangles on the HTK mel scale with peak amplitude 1;
//! - the log is natural, floored at `log_floor` to keep silence finite.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use crate::wav::Waveform;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Spectrogram extraction parameters.
#[derive(Debug, Clone)]
pub struct FrontendConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub sample_rate: u32,
    /// Floor applied to mel amplitudes before the log.
    pub log_floor: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        FrontendConfig {
            n_fft: 2048,
            hop: 256,
            n_mels: 128,
            sample_rate: 16_000,
            log_floor: 1e-10,
        }
    }
}

impl FrontendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft == 0 || self.hop == 0 || self.n_mels == 0 || self.sample_rate == 0 {
            return Err(Error::invalid("frontend", "all config fields must be positive"));
        }
        if self.hop > self.n_fft {
            return Err(Error::invalid(
                "frontend",
                format!("hop {} exceeds n_fft {}", self.hop, self.n_fft),
            ));
        }
        if self.n_mels > self.n_fft / 2 + 1 {
            return Err(Error::invalid(
                "frontend",
                format!("n_mels {} exceeds bin count {}", self.n_mels, self.n_fft / 2 + 1),
            ));
        }
        Ok(())
    }

    /// Number of STFT frames produced for `n_samples` of input.
    pub fn n_frames(&self, n_samples: usize) -> usize {
        n_samples.div_ceil(self.hop)
    }

    pub fn frame_hop_s(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }
}

/// Log-mel feature grid, the interchange type of the whole pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelSpectrogram<T> {
    /// `[n_mels, n_frames]`.
    pub values: Tensor<T>,
    /// Seconds between consecutive frames.
    pub frame_hop_s: f64,
}

impl<T: Scalar> LogMelSpectrogram<T> {
    pub fn n_mels(&self) -> usize {
        self.values.dim(0)
    }

    pub fn n_frames(&self) -> usize {
        self.values.dim(1)
    }
}

/// Reflect an out-of-range index back into `[0, n)` without repeating edges.
fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut j = i.rem_euclid(period);
    if j >= n {
        j = period - j;
    }
    j as usize
}

/// Magnitude STFT: `[n_fft/2 + 1, n_frames]`, non-negative.
pub fn stft_magnitude<T: Scalar>(wave: &Waveform, cfg: &FrontendConfig) -> Result<Tensor<T>> {
    cfg.validate()?;
    let n = wave.samples.len();
    if n == 0 {
        return Err(Error::invalid("stft", "empty waveform"));
    }
    let n_fft = cfg.n_fft;
    let pad = n_fft / 2;
    let n_frames = cfg.n_frames(n);
    let n_bins = n_fft / 2 + 1;

    // Periodic Hann: 0.5 * (1 - cos(2*pi*k / n_fft)).
    let two_pi = T::lit(std::f64::consts::TAU);
    let window: Vec<T> = (0..n_fft)
        .map(|k| {
            T::lit(0.5) * (T::one() - (two_pi * T::from_count(k) / T::from_count(n_fft)).cos())
        })
        .collect();

    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_forward(n_fft);
    let mut out = Tensor::zeros(&[n_bins, n_frames]);
    let mut buf = vec![Complex::new(T::zero(), T::zero()); n_fft];

    for frame in 0..n_frames {
        let start = frame as isize * cfg.hop as isize - pad as isize;
        for (k, slot) in buf.iter_mut().enumerate() {
            let idx = reflect_index(start + k as isize, n);
            let s = T::from_f32(wave.samples[idx]).expect("sample cast");
            *slot = Complex::new(s * window[k], T::zero());
        }
        fft.process(&mut buf);
        for (bin, c) in buf.iter().take(n_bins).enumerate() {
            let off = out.off2(bin, frame);
            out.data_mut()[off] = c.norm();
        }
    }
    Ok(out)
}

fn hz_to_mel<T: Scalar>(f: T) -> T {
    T::lit(2595.0) * (T::one() + f / T::lit(700.0)).log10()
}

fn mel_to_hz<T: Scalar>(m: T) -> T {
    T::lit(700.0) * (T::lit(10.0).powf(m / T::lit(2595.0)) - T::one())
}

/// Triangular mel filterbank `[n_mels, n_fft/2 + 1]` on the HTK scale.
///
/// Breakpoints are `n_mels + 2` equally spaced mel values between 0 Hz and
/// Nyquist; each filter is the triangle through its three breakpoints,
/// evaluated at the FFT bin frequencies.
pub fn mel_filterbank<T: Scalar>(cfg: &FrontendConfig) -> Result<Tensor<T>> {
    cfg.validate()?;
    let n_bins = cfg.n_fft / 2 + 1;
    let nyquist = T::from_count(cfg.sample_rate as usize) / T::lit(2.0);
    let mel_max = hz_to_mel(nyquist);
    let breaks: Vec<T> = (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(mel_max * T::from_count(i) / T::from_count(cfg.n_mels + 1)))
        .collect();

    let bin_hz = |k: usize| {
        T::from_count(k) * T::from_count(cfg.sample_rate as usize) / T::from_count(cfg.n_fft)
    };

    let mut fb = Tensor::zeros(&[cfg.n_mels, n_bins]);
    for m in 0..cfg.n_mels {
        let (left, center, right) = (breaks[m], breaks[m + 1], breaks[m + 2]);
        for k in 0..n_bins {
            let f = bin_hz(k);
            let rising = (f - left) / (center - left);
            let falling = (right - f) / (right - center);
            let w = rising.min(falling).max(T::zero());
            if w > T::zero() {
                let off = fb.off2(m, k);
                fb.data_mut()[off] = w;
            }
        }
    }
    Ok(fb)
}

/// Center frequencies (Hz) of the filterbank a [`FrontendConfig`] describes.
pub fn mel_center_frequencies<T: Scalar>(cfg: &FrontendConfig) -> Vec<T> {
    let nyquist = T::from_count(cfg.sample_rate as usize) / T::lit(2.0);
    let mel_max = hz_to_mel(nyquist);
    (1..=cfg.n_mels)
        .map(|i| mel_to_hz(mel_max * T::from_count(i) / T::from_count(cfg.n_mels + 1)))
        .collect()
}

/// Mel projection and floored natural log: `ln(max(fb . mag, log_floor))`.
pub fn log_mel<T: Scalar>(
    mag: &Tensor<T>,
    fb: &Tensor<T>,
    cfg: &FrontendConfig,
) -> Result<LogMelSpectrogram<T>> {
    if fb.dim(1) != mag.dim(0) {
        return Err(Error::AxisMismatch {
            op: "log_mel",
            axis: "frequency bin",
            expected: fb.dim(1),
            actual: mag.dim(0),
        });
    }
    let (n_mels, n_bins) = (fb.dim(0), fb.dim(1));
    let n_frames = mag.dim(1);
    let floor = T::lit(cfg.log_floor);

    let mut out = Tensor::zeros(&[n_mels, n_frames]);
    for m in 0..n_mels {
        let row = &fb.data()[m * n_bins..(m + 1) * n_bins];
        for t in 0..n_frames {
            let mut acc = T::zero();
            for (k, &w) in row.iter().enumerate() {
                if w != T::zero() {
                    acc += w * mag.at2(k, t);
                }
            }
            let off = out.off2(m, t);
            out.data_mut()[off] = acc.max(floor).ln();
        }
    }
    Ok(LogMelSpectrogram {
        values: out,
        frame_hop_s: cfg.frame_hop_s(),
    })
}

/// Full frontend chain: waveform to log-mel grid.
pub fn extract_logmel<T: Scalar>(
    wave: &Waveform,
    cfg: &FrontendConfig,
) -> Result<LogMelSpectrogram<T>> {
    let mag = stft_magnitude(wave, cfg)?;
    let fb = mel_filterbank(cfg)?;
    log_mel(&mag, &fb, cfg)
}

/// Min-max normalization of a `[batch, n_mels, n_frames]` stack.
///
/// Statistics are taken per mel bin over the batch and time axes, mapping
/// each bin to [0, 1]. A bin with spread below 1e-12 maps to all zeros.
pub fn normalize_minmax<T: Scalar>(batch: &Tensor<T>) -> Result<Tensor<T>> {
    if batch.rank() != 3 {
        return Err(Error::invalid(
            "normalize_minmax",
            format!("expected [batch, mel, time] input, got rank {}", batch.rank()),
        ));
    }
    let (b_n, n_mels, n_t) = (batch.dim(0), batch.dim(1), batch.dim(2));
    let mut out = batch.clone();
    for f in 0..n_mels {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for b in 0..b_n {
            for t in 0..n_t {
                let v = batch.at3(b, f, t);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        let spread = hi - lo;
        let degenerate = spread < T::lit(1e-12);
        for b in 0..b_n {
            for t in 0..n_t {
                let off = out.off3(b, f, t);
                out.data_mut()[off] = if degenerate {
                    T::zero()
                } else {
                    (batch.at3(b, f, t) - lo) / spread
                };
            }
        }
    }
    Ok(out)
}
