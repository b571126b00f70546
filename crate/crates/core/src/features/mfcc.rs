//! Short-time analysis: framing, mel filterbank, log compression and DCT.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{FeatureError, MfccConfig};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

pub fn hamming(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    (0..len)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos())
        .collect()
}

/// Frame length and hop in samples for `cfg` at `sample_rate`.
pub fn frame_geometry(cfg: &MfccConfig, sample_rate: u32) -> (usize, usize) {
    let rate = f64::from(sample_rate);
    let len = ((cfg.frame_length * rate).round() as usize).max(1);
    let hop = ((cfg.frame_shift * rate).round() as usize).max(1);
    (len, hop)
}

/// Pre-emphasizes, slices into overlapping frames and applies a Hamming window.
///
/// Inputs shorter than one frame are zero-padded to one frame. Trailing
/// samples that do not fill a whole hop are dropped.
pub fn frame_signal(samples: &[f64], sample_rate: u32, cfg: &MfccConfig) -> Result<Vec<Vec<f64>>, FeatureError> {
    if samples.is_empty() {
        return Err(FeatureError::EmptySignal);
    }
    if sample_rate == 0 {
        return Err(FeatureError::InvalidConfig("sample rate must be positive".into()));
    }
    let (len, hop) = frame_geometry(cfg, sample_rate);
    let mut emphasized: Vec<f64> = samples
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            if t == 0 {
                x
            } else {
                x - cfg.pre_emphasis * samples[t - 1]
            }
        })
        .collect();
    if emphasized.len() < len {
        emphasized.resize(len, 0.0);
    }
    let window = hamming(len);
    let count = 1 + (emphasized.len() - len) / hop;
    Ok((0..count)
        .map(|f| {
            emphasized[f * hop..f * hop + len]
                .iter()
                .zip(&window)
                .map(|(x, w)| x * w)
                .collect()
        })
        .collect())
}

/// Orthonormal DCT-II matrix; row `k` holds basis function `k`.
pub fn dct_matrix(n: usize) -> Vec<Vec<f64>> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            (0..n)
                .map(|i| scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos())
                .collect()
        })
        .collect()
}

/// Triangular filters equally spaced on the mel scale from 0 Hz to Nyquist.
#[derive(Debug, Clone)]
pub struct MelFilterbank {
    /// Filter edge/center frequencies in Hz, `n_filters + 2` points.
    points_hz: Vec<f64>,
    /// Per filter: first FFT bin and its weights.
    filters: Vec<(usize, Vec<f64>)>,
}

impl MelFilterbank {
    pub fn new(n_filters: usize, fft_size: usize, sample_rate: u32) -> Self {
        let nyquist = f64::from(sample_rate) / 2.0;
        let top = hz_to_mel(nyquist);
        let points_hz: Vec<f64> = (0..n_filters + 2)
            .map(|i| mel_to_hz(top * i as f64 / (n_filters + 1) as f64))
            .collect();
        let bin_hz = f64::from(sample_rate) / fft_size as f64;
        let n_bins = fft_size / 2 + 1;
        let filters = (0..n_filters)
            .map(|m| {
                let (lo, center, hi) = (points_hz[m], points_hz[m + 1], points_hz[m + 2]);
                let weights: Vec<(usize, f64)> = (0..n_bins)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f > lo && f <= center {
                            (f - lo) / (center - lo)
                        } else if f > center && f < hi {
                            (hi - f) / (hi - center)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                let first = weights.first().map_or(0, |(k, _)| *k);
                (first, weights.into_iter().map(|(_, w)| w).collect())
            })
            .collect();
        MelFilterbank { points_hz, filters }
    }

    pub fn len(&self) -> usize {
        self.filters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.filters.is_empty()
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.points_hz[1..self.points_hz.len() - 1]
    }

    /// Weighted sums of a one-sided power spectrum.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.filters
            .iter()
            .map(|(first, weights)| {
                weights
                    .iter()
                    .enumerate()
                    .map(|(i, w)| w * power.get(first + i).copied().unwrap_or(0.0))
                    .sum()
            })
            .collect()
    }
}

/// Precomputed per-sample-rate state for cepstral analysis.
#[derive(Clone)]
pub struct MfccExtractor {
    cfg: MfccConfig,
    sample_rate: u32,
    fft_size: usize,
    fft: Arc<dyn Fft<f64>>,
    filterbank: MelFilterbank,
    dct: Vec<Vec<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor")
            .field("sample_rate", &self.sample_rate)
            .field("fft_size", &self.fft_size)
            .finish_non_exhaustive()
    }
}

impl MfccExtractor {
    pub fn new(cfg: &MfccConfig, sample_rate: u32) -> Result<Self, FeatureError> {
        cfg.validate()?;
        if sample_rate == 0 {
            return Err(FeatureError::InvalidConfig("sample rate must be positive".into()));
        }
        let (frame_len, _) = frame_geometry(cfg, sample_rate);
        let fft_size = frame_len.next_power_of_two();
        let fft = FftPlanner::new().plan_fft_forward(fft_size);
        Ok(MfccExtractor {
            cfg: cfg.clone(),
            sample_rate,
            fft_size,
            fft,
            filterbank: MelFilterbank::new(cfg.n_mel_filters, fft_size, sample_rate),
            dct: dct_matrix(cfg.n_mel_filters),
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn fft_size(&self) -> usize {
        self.fft_size
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    /// One-sided power spectrum `|X_k|^2`, `k = 0..=fft_size/2`, of a zero-padded frame.
    pub fn power_spectrum(&self, frame: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex<f64>> = frame
            .iter()
            .take(self.fft_size)
            .map(|&x| Complex::new(x, 0.0))
            .collect();
        buf.resize(self.fft_size, Complex::new(0.0, 0.0));
        self.fft.process(&mut buf);
        buf[..=self.fft_size / 2].iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn filterbank_energies(&self, frame: &[f64]) -> Vec<f64> {
        self.filterbank.apply(&self.power_spectrum(frame))
    }

    /// Full cepstrum including order 0.
    pub fn cepstrum(&self, frame: &[f64]) -> Vec<f64> {
        let logs: Vec<f64> = self
            .filterbank_energies(frame)
            .into_iter()
            .map(|e| e.max(self.cfg.log_floor).ln())
            .collect();
        self.dct
            .iter()
            .map(|row| row.iter().zip(&logs).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Coefficients `c1..=c_n`; order 0 is dropped.
    pub fn mfcc_frame(&self, frame: &[f64]) -> Vec<f64> {
        let mut c = self.cepstrum(frame);
        c.truncate(self.cfg.n_cepstra + 1);
        c.remove(0);
        c
    }
}
