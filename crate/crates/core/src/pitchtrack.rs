//! Dominant-frequency trajectory of a monophonic signal.
//!
//! Each frame's strongest in-band bin is refined by a parabola through the
//! log-magnitudes of the peak and its two neighbours. A frame is voiced when
//! its peak clears `max(absolute_floor, relative_floor * frame median)`.
//! Jumps of more than `max_jump_octaves` from the previous voiced frame are
//! re-searched near the previous estimate before being accepted as voiced.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::scalar::{median, Real};
use crate::spectro::Spectrogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingParams<T> {
    /// Linear magnitude below which nothing is voiced.
    pub absolute_floor: T,
    /// Peak must exceed this multiple of the frame's median in-band magnitude.
    pub relative_floor: T,
    pub max_jump_octaves: T,
}

impl<T: Real> Default for TrackingParams<T> {
    fn default() -> Self {
        TrackingParams {
            absolute_floor: T::lit(1e-4),
            relative_floor: T::lit(6.0),
            max_jump_octaves: T::lit(1.0 / 3.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitchTrack<T> {
    pub times: Vec<T>,
    pub freqs: Vec<T>,
    pub voiced: Vec<bool>,
    pub confidence: Vec<T>,
    /// Seconds between frames.
    pub frame_step: T,
    /// Analysis band `(min, max)` the estimates are confined to.
    pub band: (T, T),
}

impl<T: Real> PitchTrack<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.voiced.iter().filter(|&&v| v).count()
    }

    /// Same track with every time shifted by `dt`.
    #[must_use]
    pub fn shifted(&self, dt: T) -> Self {
        PitchTrack {
            times: self.times.iter().map(|&t| t + dt).collect(),
            ..self.clone()
        }
    }

    /// CSV dump: `time_s,freq_hz,voiced,confidence`. Unvoiced rows carry 0 Hz.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "time_s,freq_hz,voiced,confidence")?;
        for i in 0..self.len() {
            let f = if self.voiced[i] { self.freqs[i] } else { T::zero() };
            writeln!(w, "{},{},{},{}", self.times[i], f, self.voiced[i], self.confidence[i])?;
        }
        Ok(())
    }
}

/// Track the dominant frequency of every frame of `spec`.
pub fn track_pitch<T: Real>(spec: &Spectrogram<T>, params: &TrackingParams<T>) -> PitchTrack<T> {
    let n = spec.n_frames();
    let mut track = PitchTrack {
        times: spec.frame_times().to_vec(),
        freqs: vec![T::zero(); n],
        voiced: vec![false; n],
        confidence: vec![T::zero(); n],
        frame_step: spec.frame_step(),
        band: spec.band(),
    };
    if spec.n_bins() == 0 {
        return track;
    }
    let freqs = spec.bin_freqs();
    let bw = spec.bin_width();
    let (band_lo, band_hi) = spec.band();
    let jump = T::lit(2.0).powf(params.max_jump_octaves);
    let half = T::lit(0.5);
    let mut prev: Option<T> = None;

    for i in 0..n {
        let frame = spec.frame(i);
        let (k, peak) = argmax(frame, 0, frame.len());
        let med = median(frame).unwrap_or(T::zero());
        let floor = params.absolute_floor.max(params.relative_floor * med);
        let mut estimate = None;
        if peak >= floor && peak > T::zero() {
            let f = refine(frame, k, freqs[0], bw);
            match prev {
                Some(p) if f > p * jump || f < p / jump => {
                    // Re-search near the previous estimate, local maxima only.
                    let lo = bin_at(p / jump, freqs[0], bw, frame.len());
                    let hi = bin_at(p * jump, freqs[0], bw, frame.len()) + 1;
                    if let Some(kk) = local_max_in(frame, lo, hi) {
                        if frame[kk] >= floor * half {
                            estimate = Some((refine(frame, kk, freqs[0], bw), frame[kk]));
                        }
                    }
                }
                _ => estimate = Some((f, peak)),
            }
        }
        match estimate {
            Some((f, m)) => {
                track.freqs[i] = f.max(band_lo).min(band_hi);
                track.voiced[i] = true;
                track.confidence[i] = if m > T::zero() {
                    (T::one() - med / m).max(T::zero()).min(T::one())
                } else {
                    T::zero()
                };
                prev = Some(track.freqs[i]);
            }
            None => prev = None,
        }
    }
    track
}

fn argmax<T: Real>(frame: &[T], lo: usize, hi: usize) -> (usize, T) {
    let mut best = (lo, frame[lo]);
    for (k, &m) in frame.iter().enumerate().take(hi).skip(lo + 1) {
        if m > best.1 {
            best = (k, m);
        }
    }
    best
}

fn local_max_in<T: Real>(frame: &[T], lo: usize, hi: usize) -> Option<usize> {
    let hi = hi.min(frame.len());
    let mut best: Option<usize> = None;
    for k in lo..hi {
        let left = if k > 0 { frame[k - 1] } else { T::zero() };
        let right = if k + 1 < frame.len() { frame[k + 1] } else { T::zero() };
        if frame[k] >= left && frame[k] >= right && best.is_none_or(|b| frame[k] > frame[b]) {
            best = Some(k);
        }
    }
    best
}

fn bin_at<T: Real>(f: T, f0: T, bw: T, n: usize) -> usize {
    let u = ((f - f0) / bw).round();
    if u <= T::zero() {
        0
    } else {
        u.to_usize().unwrap_or(n - 1).min(n - 1)
    }
}

/// Parabolic interpolation on log-magnitudes around bin `k`.
fn refine<T: Real>(frame: &[T], k: usize, f0: T, bw: T) -> T {
    let base = f0 + T::from_usize_lossy(k) * bw;
    if k == 0 || k + 1 >= frame.len() {
        return base;
    }
    let (l, c, r) = (frame[k - 1], frame[k], frame[k + 1]);
    if l <= T::zero() || c <= T::zero() || r <= T::zero() {
        return base;
    }
    let (a, b, g) = (l.ln(), c.ln(), r.ln());
    let denom = a - T::lit(2.0) * b + g;
    if denom >= T::zero() {
        return base;
    }
    let half = T::lit(0.5);
    let delta = (half * (a - g) / denom).max(-half).min(half);
    base + delta * bw
}
