//! Synthetic cello-like test signals with analytically known glide parameters.
//!
//! Signals are harmonic complexes driven by an integrated instantaneous
//! frequency, so the waveform is phase-continuous through every hold, ramp
//! and jump. The returned ground truth comes straight from the spec and is
//! the oracle for the end-to-end tests.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::audio::SampleBuffer;
use crate::error::{Error, Result};
use crate::events::{EventKind, CLEAN_SHIFT_MAX_S};
use crate::scalar::Real;

/// Shape of the frequency ramp between the two holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    /// Frequency linear in Hz; the gradient is constant along the glide.
    #[default]
    LinearHz,
    /// Frequency linear in cents; ground truth is then the chord slope.
    LinearCents,
}

/// Timbre, noise and rendering settings shared by every generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timbre<T> {
    pub n_harmonics: usize,
    pub harmonic_rolloff_db_per_partial: T,
    /// Peak vibrato depth in cents; 0 disables vibrato.
    pub vibrato_cents: T,
    pub vibrato_rate_hz: T,
    /// Broadband SNR over the whole buffer; `None` means no noise.
    pub snr_db: Option<T>,
    pub sample_rate: u32,
    /// Peak amplitude of the noiseless signal.
    pub amplitude: T,
    pub seed: u64,
}

impl<T: Real> Default for Timbre<T> {
    fn default() -> Self {
        Timbre {
            n_harmonics: 4,
            harmonic_rolloff_db_per_partial: T::lit(6.0),
            vibrato_cents: T::zero(),
            vibrato_rate_hz: T::lit(5.5),
            snr_db: None,
            sample_rate: 44_100,
            amplitude: T::lit(0.5),
            seed: 0,
        }
    }
}

impl<T: Real> Timbre<T> {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSynth(m));
        if self.n_harmonics == 0 {
            return bad("at least one harmonic is required".into());
        }
        if self.sample_rate == 0 {
            return bad("sample rate must be positive".into());
        }
        if !(self.amplitude > T::zero() && self.amplitude <= T::one()) {
            return bad(format!("amplitude {} must lie in (0, 1]", self.amplitude));
        }
        if !(self.vibrato_cents >= T::zero()) || !(self.vibrato_rate_hz >= T::zero()) {
            return bad("vibrato depth and rate must be non-negative".into());
        }
        if !self.harmonic_rolloff_db_per_partial.is_finite() {
            return bad("harmonic rolloff must be finite".into());
        }
        if let Some(snr) = self.snr_db {
            if snr.is_nan() {
                return bad("SNR must be a number".into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlideSpec<T> {
    pub f_start: T,
    pub f_end: T,
    pub pre_hold_s: T,
    pub glide_s: T,
    pub post_hold_s: T,
    #[serde(default)]
    pub ramp: RampShape,
    #[serde(flatten)]
    pub timbre: Timbre<T>,
}

impl<T: Real> GlideSpec<T> {
    /// Hold `f_start` for 0.5 s, glide to `f_end` over `glide_s`, hold 0.5 s.
    pub fn new(f_start: T, f_end: T, glide_s: T) -> Self {
        GlideSpec {
            f_start,
            f_end,
            pre_hold_s: T::lit(0.5),
            glide_s,
            post_hold_s: T::lit(0.5),
            ramp: RampShape::LinearHz,
            timbre: Timbre::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.timbre.validate()?;
        let nyquist = T::lit(self.timbre.sample_rate as f64 / 2.0);
        for (name, f) in [("f_start", self.f_start), ("f_end", self.f_end)] {
            if !(f > T::zero() && f < nyquist) {
                return Err(Error::InvalidSynth(format!("{name} = {f} Hz must lie in (0, {nyquist}) Hz")));
            }
        }
        if !(self.glide_s > T::zero()) {
            return Err(Error::InvalidSynth(format!("glide_s = {} must be positive", self.glide_s)));
        }
        if !(self.pre_hold_s >= T::zero() && self.post_hold_s >= T::zero()) {
            return Err(Error::InvalidSynth("hold durations must be non-negative".into()));
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> GlideTruth<T> {
        let delta_f = (self.f_end - self.f_start).abs();
        GlideTruth {
            gradient: delta_f / self.glide_s,
            onset: self.pre_hold_s,
            termination: self.pre_hold_s + self.glide_s,
            delta_f,
        }
    }

    /// Vibrato-free fundamental at time `t`.
    pub fn base_frequency(&self, t: T) -> T {
        if t <= self.pre_hold_s {
            return self.f_start;
        }
        let u = (t - self.pre_hold_s) / self.glide_s;
        if u >= T::one() {
            return self.f_end;
        }
        match self.ramp {
            RampShape::LinearHz => self.f_start + (self.f_end - self.f_start) * u,
            RampShape::LinearCents => self.f_start * (self.f_end / self.f_start).powf(u),
        }
    }

    pub fn duration(&self) -> T {
        self.pre_hold_s + self.glide_s + self.post_hold_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlideTruth<T> {
    /// Hz/s, `|f_end - f_start| / glide_s`.
    pub gradient: T,
    pub onset: T,
    pub termination: T,
    pub delta_f: T,
}

/// Render a glide and return it with its exact ground truth.
pub fn synth_glide<T: Real>(spec: &GlideSpec<T>) -> Result<(SampleBuffer<T>, GlideTruth<T>)> {
    spec.validate()?;
    let sr = spec.timbre.sample_rate as f64;
    let n = (spec.duration().to_f64_lossy() * sr).round() as usize;
    let freq = |t: f64| spec.base_frequency(T::lit(t)).to_f64_lossy();
    let samples = render(&spec.timbre, n, freq, |_| 1.0);
    Ok((samples, spec.ground_truth()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSpec<T> {
    pub f1: T,
    pub f2: T,
    /// Silence between the two notes; 0 gives an instantaneous jump.
    pub gap_s: T,
    /// Duration of each note.
    pub hold_s: T,
    #[serde(flatten)]
    pub timbre: Timbre<T>,
}

impl<T: Real> StepSpec<T> {
    pub fn new(f1: T, f2: T, gap_s: T) -> Self {
        StepSpec { f1, f2, gap_s, hold_s: T::lit(0.5), timbre: Timbre::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.timbre.validate()?;
        let nyquist = T::lit(self.timbre.sample_rate as f64 / 2.0);
        for (name, f) in [("f1", self.f1), ("f2", self.f2)] {
            if !(f > T::zero() && f < nyquist) {
                return Err(Error::InvalidSynth(format!("{name} = {f} Hz must lie in (0, {nyquist}) Hz")));
            }
        }
        if !(self.gap_s >= T::zero()) {
            return Err(Error::InvalidSynth(format!("gap_s = {} must be non-negative", self.gap_s)));
        }
        if !(self.hold_s > T::zero()) {
            return Err(Error::InvalidSynth(format!("hold_s = {} must be positive", self.hold_s)));
        }
        Ok(())
    }

    pub fn ground_truth(&self) -> StepTruth<T> {
        let kind = if self.gap_s < T::lit(CLEAN_SHIFT_MAX_S) {
            Some(EventKind::CleanShift)
        } else {
            None
        };
        StepTruth {
            kind,
            onset: self.hold_s,
            termination: self.hold_s + self.gap_s,
            delta_f: (self.f2 - self.f1).abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepTruth<T> {
    /// `CleanShift` below the clean-shift bound; `None` when the gap is long
    /// enough that event pairing depends on segmentation settings.
    pub kind: Option<EventKind>,
    pub onset: T,
    pub termination: T,
    pub delta_f: T,
}

const FADE_S: f64 = 0.001;

/// Tone at `f1`, silence for `gap_s`, tone at `f2`.
pub fn synth_step<T: Real>(spec: &StepSpec<T>) -> Result<(SampleBuffer<T>, StepTruth<T>)> {
    spec.validate()?;
    let sr = spec.timbre.sample_rate as f64;
    let hold = spec.hold_s.to_f64_lossy();
    let gap = spec.gap_s.to_f64_lossy();
    let (f1, f2) = (spec.f1.to_f64_lossy(), spec.f2.to_f64_lossy());
    let n = ((2.0 * hold + gap) * sr).round() as usize;
    let freq = |t: f64| if t < hold + 0.5 * gap { f1 } else { f2 };
    let envelope = |t: f64| {
        if gap <= 0.0 {
            return 1.0;
        }
        let (a, b) = (hold, hold + gap);
        if t >= a && t < b {
            0.0
        } else if t < a && t > a - FADE_S {
            raised_cosine((a - t) / FADE_S)
        } else if t >= b && t < b + FADE_S {
            raised_cosine((t - b) / FADE_S)
        } else {
            1.0
        }
    };
    let samples = render(&spec.timbre, n, freq, envelope);
    Ok((samples, spec.ground_truth()))
}

fn raised_cosine(u: f64) -> f64 {
    0.5 - 0.5 * (std::f64::consts::PI * u.clamp(0.0, 1.0)).cos()
}

fn render<T: Real>(
    timbre: &Timbre<T>,
    n: usize,
    base_freq: impl Fn(f64) -> f64,
    envelope: impl Fn(f64) -> f64,
) -> SampleBuffer<T> {
    let sr = timbre.sample_rate as f64;
    let nyquist = sr / 2.0;
    let rolloff = timbre.harmonic_rolloff_db_per_partial.to_f64_lossy();
    let weights: Vec<f64> = (0..timbre.n_harmonics)
        .map(|k| 10f64.powf(-rolloff * k as f64 / 20.0))
        .collect();
    let total: f64 = weights.iter().sum();
    let amp = timbre.amplitude.to_f64_lossy() / total;
    let vib_depth = timbre.vibrato_cents.to_f64_lossy() / 1200.0;
    let vib_rate = timbre.vibrato_rate_hz.to_f64_lossy();
    let two_pi = 2.0 * std::f64::consts::PI;

    let inst = |t: f64| {
        let f = base_freq(t);
        if vib_depth > 0.0 {
            f * (vib_depth * (two_pi * vib_rate * t).sin()).exp2()
        } else {
            f
        }
    };

    let mut phase = 0.0f64;
    let mut clean = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / sr;
        let f = inst(t);
        let mut s = 0.0;
        for (k, w) in weights.iter().enumerate() {
            let h = (k + 1) as f64;
            if h * f >= nyquist {
                break;
            }
            s += w * (h * phase).sin();
        }
        clean.push(amp * envelope(t) * s);
        // Midpoint rule keeps the phase integral second-order accurate.
        phase = (phase + two_pi * inst(t + 0.5 / sr) / sr) % (two_pi * 1e6);
    }

    if let Some(snr) = timbre.snr_db {
        let snr = snr.to_f64_lossy();
        if snr.is_finite() && n > 0 {
            let power = clean.iter().map(|s| s * s).sum::<f64>() / n as f64;
            let sigma = (power / 10f64.powf(snr / 10.0)).sqrt();
            if sigma > 0.0 {
                let mut rng = ChaCha8Rng::seed_from_u64(timbre.seed);
                let normal = Normal::new(0.0, sigma).expect("finite sigma");
                for s in clean.iter_mut() {
                    *s += normal.sample(&mut rng);
                }
            }
        }
    }
    SampleBuffer::new(clean.into_iter().map(T::lit).collect(), timbre.sample_rate)
}

/// Seeded white Gaussian noise, no tone. Useful as a negative control.
pub fn synth_noise<T: Real>(seconds: T, sigma: T, sample_rate: u32, seed: u64) -> SampleBuffer<T> {
    let n = (seconds.to_f64_lossy() * sample_rate as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma.to_f64_lossy().max(0.0)).expect("finite sigma");
    SampleBuffer::new((0..n).map(|_| T::lit(normal.sample(&mut rng))).collect(), sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_examples() {
        let g = GlideSpec::new(440.0f64, 640.0, 0.1).ground_truth();
        assert!((g.gradient - 2000.0).abs() < 1e-9);
        assert_eq!(g.delta_f, 200.0);
        assert_eq!(g.onset, 0.5);
        assert!((g.termination - 0.6).abs() < 1e-15);

        let flat = GlideSpec::new(300.0f64, 300.0, 0.2).ground_truth();
        assert_eq!(flat.gradient, 0.0);

        let third = GlideSpec::new(220.0f64, 261.6, 0.33).ground_truth();
        assert!((third.gradient - 41.6 / 0.33).abs() < 1e-9);
        assert!((third.gradient - 126.0).abs() < 0.2);
    }

    #[test]
    fn oracle_self_consistency() {
        for &(a, b, d) in &[(220.0f64, 330.0, 0.2), (500.0, 210.0, 0.07), (100.0, 101.0, 1.3)] {
            let g = GlideSpec::new(a, b, d).ground_truth();
            assert!((g.gradient * d - (b - a).abs()).abs() <= 4.0 * f64::EPSILON * (b - a).abs());
        }
    }

    #[test]
    fn seeded_noise_is_bit_identical() {
        let mut spec = GlideSpec::new(220.0f64, 330.0, 0.2);
        spec.timbre.snr_db = Some(20.0);
        spec.timbre.seed = 42;
        let (a, _) = synth_glide(&spec).unwrap();
        let (b, _) = synth_glide(&spec).unwrap();
        assert_eq!(a, b);
        spec.timbre.seed = 43;
        let (c, _) = synth_glide(&spec).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn snr_is_measured_over_the_buffer() {
        let mut spec = GlideSpec::new(220.0f64, 330.0, 0.2);
        let (clean, _) = synth_glide(&spec).unwrap();
        spec.timbre.snr_db = Some(10.0);
        let (noisy, _) = synth_glide(&spec).unwrap();
        let p_sig: f64 = clean.samples().iter().map(|s| s * s).sum();
        let p_noise: f64 = clean
            .samples()
            .iter()
            .zip(noisy.samples())
            .map(|(c, n)| (n - c).powi(2))
            .sum();
        let snr = 10.0 * (p_sig / p_noise).log10();
        assert!((snr - 10.0).abs() < 0.2, "{snr}");
    }

    #[test]
    fn phase_is_continuous() {
        let mut spec = GlideSpec::new(200.0f64, 400.0, 0.05);
        spec.timbre.n_harmonics = 1;
        let (buf, _) = synth_glide(&spec).unwrap();
        let s = buf.samples();
        // Largest sample-to-sample step is bounded by the top frequency.
        let bound = 2.0 * std::f64::consts::PI * 400.0 / 44_100.0 * 0.5 * 1.01;
        let worst = s.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
        assert!(worst <= bound, "{worst} > {bound}");
    }

    #[test]
    fn base_frequency_profile() {
        let spec = GlideSpec::new(200.0f64, 300.0, 0.2);
        assert_eq!(spec.base_frequency(0.1), 200.0);
        assert!((spec.base_frequency(0.6) - 250.0).abs() < 1e-9);
        assert_eq!(spec.base_frequency(0.9), 300.0);
        let cents = GlideSpec { ramp: RampShape::LinearCents, ..spec };
        assert!((cents.base_frequency(0.6) - (200.0f64 * 300.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn step_ground_truth() {
        let (buf, t) = synth_step(&StepSpec::new(220.0f64, 261.6, 0.03)).unwrap();
        assert_eq!(t.kind, Some(EventKind::CleanShift));
        assert_eq!(buf.len(), ((1.03) * 44_100.0f64).round() as usize);
        let (_, t0) = synth_step(&StepSpec::new(220.0f64, 261.6, 0.0)).unwrap();
        assert_eq!(t0.kind, Some(EventKind::CleanShift));
        let (_, long) = synth_step(&StepSpec::new(220.0f64, 261.6, 0.2)).unwrap();
        assert_eq!(long.kind, None);
        // The gap itself is silent.
        let s = buf.samples();
        let mid = ((0.5 + 0.015) * 44_100.0) as usize;
        assert!(s[mid - 200..mid + 200].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(synth_glide(&GlideSpec::new(220.0f64, 330.0, 0.0)).is_err());
        assert!(synth_glide(&GlideSpec::new(-1.0f64, 330.0, 0.1)).is_err());
        assert!(synth_glide(&GlideSpec::new(220.0f64, 30_000.0, 0.1)).is_err());
        let mut s = GlideSpec::new(220.0f64, 330.0, 0.1);
        s.timbre.n_harmonics = 0;
        assert!(synth_glide(&s).is_err());
        assert!(synth_step(&StepSpec::new(220.0f64, 330.0, -0.1)).is_err());
    }
}
