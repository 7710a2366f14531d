//! Log-mel front end: 1024-sample Hann frames with 512-sample hop, power
//! spectrum, 40 HTK-scale triangular filters over 0-8000 Hz, natural log.

use std::sync::Arc;

use log::warn;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

pub const SAMPLE_RATE: u32 = 16_000;
pub const WINDOW: usize = 1024;
pub const HOP: usize = 512;
pub const N_BINS: usize = WINDOW / 2 + 1;
pub const N_MELS: usize = 40;
/// Nominal chunk length: 4 s at 16 kHz.
pub const CHUNK_SAMPLES: usize = 64_000;
pub const MAX_SAMPLES: usize = CHUNK_SAMPLES + HOP;
pub const LOG_FLOOR: f64 = 1e-10;
pub const MIN_STD: f64 = 1e-6;

/// Mono 16 kHz audio, samples in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct AudioChunk {
    samples: Vec<f64>,
}

impl AudioChunk {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate != SAMPLE_RATE {
            return Err(Error::Audio(format!("sample_rate={sample_rate}, expected {SAMPLE_RATE}")));
        }
        if samples.is_empty() {
            return Err(Error::Audio("empty audio".into()));
        }
        if samples.len() > MAX_SAMPLES {
            return Err(Error::Audio(format!(
                "{} samples exceeds the maximum of {MAX_SAMPLES}",
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::Audio(format!("sample {i} = {} is outside [-1, 1]", samples[i])));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }
}

/// Frames of a chunk: `T × 40`, one log-mel vector per row.
#[derive(Clone, Debug, PartialEq)]
pub struct MelChunk {
    frames: Matrix,
}

impl MelChunk {
    pub fn new(frames: Matrix) -> Result<Self> {
        if frames.cols() != N_MELS {
            return Err(Error::Shape(format!("mel chunk needs {N_MELS} columns, got {}", frames.cols())));
        }
        if frames.rows() == 0 {
            return Err(Error::Shape("mel chunk has no frames".into()));
        }
        if !frames.is_finite() {
            return Err(Error::NonFinite("mel chunk contains non-finite values".into()));
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &Matrix {
        &self.frames
    }

    pub fn num_frames(&self) -> usize {
        self.frames.rows()
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        self.frames.row(t)
    }

    /// Same frames in a new order; `order[i]` is the source index of row `i`.
    pub fn permuted(&self, order: &[usize]) -> MelChunk {
        let mut m = Matrix::zeros(order.len(), N_MELS);
        for (i, &src) in order.iter().enumerate() {
            m.row_mut(i).copy_from_slice(self.frames.row(src));
        }
        MelChunk { frames: m }
    }
}

/// Number of full frames in a signal of `len` samples.
pub fn frame_count(len: usize) -> usize {
    if len < WINDOW {
        0
    } else {
        (len - WINDOW) / HOP + 1
    }
}

/// Periodic Hann window.
pub fn hann_window() -> Vec<f64> {
    (0..WINDOW)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / WINDOW as f64).cos())
        .collect()
}

/// Splits audio into Hann-windowed frames; the trailing partial window is dropped.
pub fn frame_signal(audio: &AudioChunk) -> Result<Vec<Vec<f64>>> {
    let n = frame_count(audio.len());
    if n == 0 {
        return Err(Error::Audio(format!(
            "{} samples is shorter than one {WINDOW}-sample window",
            audio.len()
        )));
    }
    let window = hann_window();
    Ok((0..n)
        .map(|f| {
            audio.samples[f * HOP..f * HOP + WINDOW]
                .iter()
                .zip(&window)
                .map(|(s, w)| s * w)
                .collect()
        })
        .collect())
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Triangle edges: `N_MELS + 2` frequencies equally spaced on the mel scale.
pub fn mel_edges_hz() -> Vec<f64> {
    let top = hz_to_mel(f64::from(SAMPLE_RATE) / 2.0);
    (0..N_MELS + 2)
        .map(|i| mel_to_hz(top * i as f64 / (N_MELS + 1) as f64))
        .collect()
}

/// Center frequency of each mel filter in Hz.
pub fn mel_centers_hz() -> Vec<f64> {
    mel_edges_hz()[1..=N_MELS].to_vec()
}

/// `N_MELS × N_BINS` filterbank of unit-peak triangles.
pub fn mel_filterbank() -> Matrix {
    let edges = mel_edges_hz();
    let bin_hz = f64::from(SAMPLE_RATE) / WINDOW as f64;
    let mut fb = Matrix::zeros(N_MELS, N_BINS);
    for m in 0..N_MELS {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for k in 0..N_BINS {
            let f = k as f64 * bin_hz;
            let w = if f > lo && f <= center {
                (f - lo) / (center - lo)
            } else if f > center && f < hi {
                (hi - f) / (hi - center)
            } else {
                0.0
            };
            fb.set(m, k, w);
        }
    }
    fb
}

/// Reusable FFT plan and filterbank.
pub struct FeatureExtractor {
    fft: Arc<dyn Fft<f64>>,
    filterbank: Matrix,
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        Self::new()
    }
}

impl FeatureExtractor {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(WINDOW);
        Self { fft, filterbank: mel_filterbank() }
    }

    pub fn filterbank(&self) -> &Matrix {
        &self.filterbank
    }

    /// Power spectrum (`|X_k|²`, `k = 0..=512`) of one windowed frame.
    pub fn power_spectrum(&self, window: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = window.iter().map(|&s| Complex::new(s, 0.0)).collect();
        self.fft.process(&mut buf);
        buf[..N_BINS].iter().map(|c| c.norm_sqr()).collect()
    }

    /// Unnormalized log-mel energies of windowed frames.
    pub fn log_mel(&self, windows: &[Vec<f64>]) -> Result<MelChunk> {
        let mut out = Matrix::zeros(windows.len(), N_MELS);
        for (t, w) in windows.iter().enumerate() {
            if w.len() != WINDOW {
                return Err(Error::Shape(format!("frame {t} has {} samples, expected {WINDOW}", w.len())));
            }
            let power = self.power_spectrum(w);
            for m in 0..N_MELS {
                let energy: f64 = self.filterbank.row(m).iter().zip(&power).map(|(h, p)| h * p).sum();
                out.set(t, m, energy.max(LOG_FLOOR).ln());
            }
        }
        MelChunk::new(out)
    }

    pub fn extract(&self, audio: &AudioChunk) -> Result<MelChunk> {
        self.log_mel(&frame_signal(audio)?)
    }
}

pub fn log_mel(windows: &[Vec<f64>]) -> Result<MelChunk> {
    FeatureExtractor::new().log_mel(windows)
}

/// Per-mel-bin standardization statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    pub fn identity() -> Self {
        Self { mean: vec![0.0; N_MELS], std: vec![1.0; N_MELS] }
    }

    pub fn new(mean: Vec<f64>, std: Vec<f64>) -> Result<Self> {
        if mean.len() != N_MELS || std.len() != N_MELS {
            return Err(Error::Shape(format!(
                "norm stats need {N_MELS} entries, got mean={} std={}",
                mean.len(),
                std.len()
            )));
        }
        if std.iter().any(|s| !(s.is_finite() && *s >= MIN_STD)) || mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonFinite("norm stats must be finite with std >= 1e-6".into()));
        }
        Ok(Self { mean, std })
    }
}

/// Mean and population standard deviation per mel bin over every frame.
pub fn fit_norm(chunks: &[MelChunk]) -> Result<NormStats> {
    if chunks.len() < 2 {
        return Err(Error::Dataset(format!(
            "fitting normalization needs at least 2 chunks, got {}",
            chunks.len()
        )));
    }
    let mut sum = vec![0.0; N_MELS];
    let mut count = 0usize;
    for c in chunks {
        for (s, v) in sum.iter_mut().zip(c.frames.col_sums()) {
            *s += v;
        }
        count += c.num_frames();
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut sq = vec![0.0; N_MELS];
    for c in chunks {
        for t in 0..c.num_frames() {
            for (m, v) in c.frame(t).iter().enumerate() {
                let d = v - mean[m];
                sq[m] += d * d;
            }
        }
    }
    let std = sq
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let sd = (s / count as f64).sqrt();
            if sd < MIN_STD {
                warn!("mel bin {m} is degenerate (std {sd:e}); clamping to {MIN_STD:e}");
                MIN_STD
            } else {
                sd
            }
        })
        .collect();
    Ok(NormStats { mean, std })
}

pub fn apply_norm(chunk: &MelChunk, stats: &NormStats) -> MelChunk {
    let mut frames = chunk.frames.clone();
    for t in 0..frames.rows() {
        for (m, v) in frames.row_mut(t).iter_mut().enumerate() {
            *v = (*v - stats.mean[m]) / stats.std[m];
        }
    }
    MelChunk { frames }
}
