//! Short-time magnitude spectrogram restricted to an analysis band.
//!
//! Magnitudes are linear and amplitude-normalized: a full-bin sinusoid of
//! amplitude `A` peaks at approximately `A`. Decibels only appear at the
//! edges (gain deltas, image export).

pub mod image;

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{num_complex::Complex, Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::audio::SampleBuffer;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Hamming,
    Blackman,
}

impl WindowKind {
    /// Periodic window of length `n`, symmetric about `n / 2`.
    pub fn coefficients<T: Real>(self, n: usize) -> Vec<T> {
        let two_pi = 2.0 * std::f64::consts::PI;
        (0..n)
            .map(|i| {
                let a = two_pi * i as f64 / n as f64;
                let w = match self {
                    WindowKind::Hann => 0.5 - 0.5 * a.cos(),
                    WindowKind::Hamming => 0.54 - 0.46 * a.cos(),
                    WindowKind::Blackman => 0.42 - 0.5 * a.cos() + 0.08 * (2.0 * a).cos(),
                };
                T::lit(w)
            })
            .collect()
    }
}

impl std::str::FromStr for WindowKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            "blackman" => Ok(WindowKind::Blackman),
            other => Err(format!("unknown window kind `{other}` (hann, hamming, blackman)")),
        }
    }
}

/// Analysis settings for [`compute_spectrogram`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectroConfig<T> {
    /// FFT length and window length, a power of two.
    pub window_size: usize,
    pub hop_size: usize,
    pub window_kind: WindowKind,
    pub freq_min: T,
    pub freq_max: T,
    /// Upper bound on seconds per frame. When the hop would exceed it at the
    /// buffer's sample rate, the hop is shortened to fit.
    pub target_time_res: Option<T>,
}

impl<T: Real> SpectroConfig<T> {
    /// Fundamental-band tracking for the cello register (60 to 1,400 Hz).
    ///
    /// The 2,048-sample window (46 ms at 44.1 kHz) is short enough that the
    /// peak follows glides of 50 ms instead of clinging to the held notes.
    pub fn fundamental() -> Self {
        SpectroConfig {
            window_size: 2048,
            hop_size: 128,
            window_kind: WindowKind::Hann,
            freq_min: T::lit(60.0),
            freq_max: T::lit(1400.0),
            target_time_res: Some(T::lit(0.0042)),
        }
    }

    /// Overtone display band fixed at 3.6 to 11 kHz, 4,096-sample window.
    pub fn overtone_display() -> Self {
        SpectroConfig {
            window_size: 4096,
            freq_min: T::lit(3600.0),
            freq_max: T::lit(11_000.0),
            ..Self::fundamental()
        }
    }

    /// Hop actually used at `sample_rate` after applying `target_time_res`.
    pub fn effective_hop(&self, sample_rate: u32) -> usize {
        match self.target_time_res {
            Some(res) => {
                let max_hop = (res.to_f64_lossy() * sample_rate as f64).floor() as usize;
                self.hop_size.min(max_hop.max(1))
            }
            None => self.hop_size,
        }
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        if self.window_size < 4 || !self.window_size.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "window size {} is not a power of two >= 4",
                self.window_size
            )));
        }
        if self.hop_size == 0 || self.hop_size > self.window_size {
            return Err(Error::InvalidConfig(format!(
                "hop size {} must satisfy 0 < hop <= window ({})",
                self.hop_size, self.window_size
            )));
        }
        let nyquist = T::lit(sample_rate as f64 / 2.0);
        if !(self.freq_min >= T::zero() && self.freq_min < self.freq_max && self.freq_max <= nyquist) {
            return Err(Error::InvalidConfig(format!(
                "band {} to {} Hz must satisfy 0 <= min < max <= {} Hz",
                self.freq_min, self.freq_max, nyquist
            )));
        }
        if let Some(res) = self.target_time_res {
            if !(res > T::zero()) {
                return Err(Error::InvalidConfig(format!("time resolution {res} must be positive")));
            }
        }
        Ok(())
    }
}

impl<T: Real> Default for SpectroConfig<T> {
    fn default() -> Self {
        Self::fundamental()
    }
}

/// Frame-major magnitude matrix with its axes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrogram<T> {
    /// `frames * bins` values, frame-major.
    magnitudes: Vec<T>,
    n_bins: usize,
    frame_times: Vec<T>,
    bin_freqs: Vec<T>,
    gain_db: T,
    frame_step: T,
    sample_rate: u32,
    hop_size: usize,
    window_size: usize,
    band: (T, T),
}

impl<T: Real> Spectrogram<T> {
    pub fn n_frames(&self) -> usize {
        self.frame_times.len()
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn is_empty(&self) -> bool {
        self.frame_times.is_empty() || self.n_bins == 0
    }

    /// In-band magnitudes of frame `i`.
    pub fn frame(&self, i: usize) -> &[T] {
        &self.magnitudes[i * self.n_bins..(i + 1) * self.n_bins]
    }

    pub fn frames(&self) -> impl Iterator<Item = &[T]> {
        self.magnitudes.chunks_exact(self.n_bins.max(1))
    }

    pub fn magnitudes(&self) -> &[T] {
        &self.magnitudes
    }

    /// Window-centre time of every frame, in seconds.
    pub fn frame_times(&self) -> &[T] {
        &self.frame_times
    }

    pub fn bin_freqs(&self) -> &[T] {
        &self.bin_freqs
    }

    /// Spacing between adjacent bins in Hz.
    pub fn bin_width(&self) -> T {
        T::lit(self.sample_rate as f64) / T::from_usize_lossy(self.window_size)
    }

    pub fn gain_db(&self) -> T {
        self.gain_db
    }

    /// Seconds between consecutive frames (`hop / sample_rate`).
    pub fn frame_step(&self) -> T {
        self.frame_step
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn hop_size(&self) -> usize {
        self.hop_size
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Configured analysis band `(min, max)` in Hz.
    pub fn band(&self) -> (T, T) {
        self.band
    }

    /// Scale every magnitude by `10^(delta_db / 20)`; axes are untouched.
    #[must_use]
    pub fn apply_gain(&self, delta_db: T) -> Self {
        debug_assert!(delta_db.is_finite(), "gain must be finite");
        let factor = T::lit(10.0).powf(delta_db / T::lit(20.0));
        Spectrogram {
            magnitudes: self.magnitudes.iter().map(|&m| m * factor).collect(),
            gain_db: self.gain_db + delta_db,
            ..self.clone_axes()
        }
    }

    fn clone_axes(&self) -> Self {
        Spectrogram {
            magnitudes: Vec::new(),
            n_bins: self.n_bins,
            frame_times: self.frame_times.clone(),
            bin_freqs: self.bin_freqs.clone(),
            gain_db: self.gain_db,
            frame_step: self.frame_step,
            sample_rate: self.sample_rate,
            hop_size: self.hop_size,
            window_size: self.window_size,
            band: self.band,
        }
    }

    #[cfg(test)]
    pub(crate) fn set_magnitudes_for_test(&mut self, magnitudes: Vec<T>) {
        assert_eq!(magnitudes.len(), self.magnitudes.len());
        self.magnitudes = magnitudes;
    }

    /// Shift every frame time by `dt` seconds.
    #[must_use]
    pub fn shifted(&self, dt: T) -> Self {
        let mut s = self.clone();
        for t in &mut s.frame_times {
            *t += dt;
        }
        s
    }
}

/// Free-function form of [`Spectrogram::apply_gain`].
pub fn apply_gain<T: Real>(spec: &Spectrogram<T>, delta_db: T) -> Spectrogram<T> {
    spec.apply_gain(delta_db)
}

/// Short-time Fourier magnitudes of `buffer`, restricted to the config band.
///
/// Frame `i` covers samples `[i * hop, i * hop + window)` and is stamped with
/// its centre time `(i * hop + window / 2) / sample_rate`.
pub fn compute_spectrogram<T: Real>(
    buffer: &SampleBuffer<T>,
    config: &SpectroConfig<T>,
) -> Result<Spectrogram<T>> {
    let sr = buffer.sample_rate();
    config.validate(sr)?;
    let n = config.window_size;
    let hop = config.effective_hop(sr);
    let samples = buffer.samples();
    if samples.len() < n {
        return Err(Error::BufferTooShort { len: samples.len(), window: n });
    }

    let sr_t = T::lit(sr as f64);
    let df = sr_t / T::from_usize_lossy(n);
    let k_lo = (config.freq_min / df).ceil().to_usize().unwrap_or(0);
    let k_hi = (config.freq_max / df).floor().to_usize().unwrap_or(0).min(n / 2);
    if k_lo > k_hi {
        return Err(Error::EmptyBand {
            min: config.freq_min.to_f64_lossy(),
            max: config.freq_max.to_f64_lossy(),
        });
    }
    let n_bins = k_hi - k_lo + 1;
    let bin_freqs: Vec<T> = (k_lo..=k_hi).map(|k| T::from_usize_lossy(k) * df).collect();

    let n_frames = 1 + (samples.len() - n) / hop;
    let half = T::from_usize_lossy(n / 2);
    let frame_times: Vec<T> = (0..n_frames)
        .map(|i| (T::from_usize_lossy(i * hop) + half) / sr_t)
        .collect();

    let window: Vec<T> = config.window_kind.coefficients(n);
    let norm = T::lit(2.0) / window.iter().copied().sum::<T>();
    let fft: Arc<dyn Fft<T>> = FftPlanner::new().plan_fft_forward(n);

    let magnitudes: Vec<T> = (0..n_frames)
        .into_par_iter()
        .flat_map_iter(|i| {
            let start = i * hop;
            let mut buf: Vec<Complex<T>> = samples[start..start + n]
                .iter()
                .zip(&window)
                .map(|(&s, &w)| Complex::new(s * w, T::zero()))
                .collect();
            fft.process(&mut buf);
            buf[k_lo..=k_hi]
                .iter()
                .map(|c| c.norm() * norm)
                .collect::<Vec<T>>()
        })
        .collect();

    Ok(Spectrogram {
        magnitudes,
        n_bins,
        frame_times,
        bin_freqs,
        gain_db: T::zero(),
        frame_step: T::from_usize_lossy(hop) / sr_t,
        sample_rate: sr,
        hop_size: hop,
        window_size: n,
        band: (config.freq_min, config.freq_max),
    })
}
