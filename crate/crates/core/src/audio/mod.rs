//! WAV decoding into normalized mono buffers.

pub mod resample;

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Decoded mono audio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleBuffer<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Real> SampleBuffer<T> {
    /// Wrap samples, peak-normalizing if any value leaves [-1, 1].
    ///
    /// Panics if `sample_rate` is zero.
    pub fn new(mut samples: Vec<T>, sample_rate: u32) -> Self {
        assert!(sample_rate > 0, "sample rate must be positive");
        normalize_if_clipping(&mut samples);
        SampleBuffer { samples, sample_rate }
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> T {
        T::from_usize_lossy(self.samples.len()) / T::lit(self.sample_rate as f64)
    }

    /// Band-limited conversion to `rate`; a no-op when the rate already matches.
    pub fn resampled(&self, rate: u32) -> Self {
        if rate == self.sample_rate {
            return self.clone();
        }
        SampleBuffer::new(resample::resample(&self.samples, self.sample_rate, rate), rate)
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }
}

fn normalize_if_clipping<T: Real>(samples: &mut [T]) {
    let peak = samples.iter().fold(T::zero(), |m, s| m.max(s.abs()));
    if peak > T::one() {
        for s in samples.iter_mut() {
            *s /= peak;
        }
    }
}

/// Load a PCM WAV file as a mono buffer.
///
/// Stereo frames are averaged. Integer formats are scaled by `2^(bits-1)`;
/// the result is only peak-normalized when a sample exceeds unit range
/// (possible for float files). With `target_rate` set and different from the
/// file's rate, the buffer is resampled.
pub fn load_audio<T: Real>(path: &Path, target_rate: Option<u32>) -> Result<SampleBuffer<T>> {
    let reader = WavReader::open(path).map_err(|e| classify_hound(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 || channels > 2 {
        return Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("{channels} channels (only mono and stereo are accepted)"),
        });
    }
    let interleaved = read_interleaved::<T>(reader, &spec, path)?;
    if interleaved.is_empty() {
        return Err(Error::EmptyAudio { path: path.to_path_buf() });
    }
    let mono: Vec<T> = if channels == 1 {
        interleaved
    } else {
        let half = T::lit(0.5);
        interleaved
            .chunks_exact(2)
            .map(|f| (f[0] + f[1]) * half)
            .collect()
    };
    let buffer = SampleBuffer::new(mono, spec.sample_rate);
    Ok(match target_rate {
        Some(rate) if rate != spec.sample_rate => buffer.resampled(rate),
        _ => buffer,
    })
}

fn read_interleaved<T: Real>(
    mut reader: WavReader<std::io::BufReader<std::fs::File>>,
    spec: &WavSpec,
    path: &Path,
) -> Result<Vec<T>> {
    let err = |e| classify_hound(path, e);
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| T::lit(v as f64)).map_err(err))
            .collect(),
        (SampleFormat::Int, bits @ (8 | 16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| T::lit(v as f64 * scale)).map_err(err))
                .collect()
        }
        (format, bits) => Err(Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: format!("{bits}-bit {format:?} samples"),
        }),
    }
}

fn classify_hound(path: &Path, e: hound::Error) -> Error {
    match e {
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            detail: "format not supported by the WAV decoder".into(),
        },
        other => Error::AudioUnreadable { path: path.to_path_buf(), source: other },
    }
}

/// Write a mono 32-bit float WAV.
pub fn write_wav<T: Real>(buffer: &SampleBuffer<T>, path: &Path) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let werr = |e| Error::AudioWrite { path: path.to_path_buf(), source: e };
    let mut writer = WavWriter::create(path, spec).map_err(werr)?;
    for s in buffer.samples() {
        writer.write_sample(s.to_f64_lossy() as f32).map_err(werr)?;
    }
    writer.finalize().map_err(werr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_int(path: &Path, channels: u16, bits: u16, frames: &[Vec<i32>], rate: u32) {
        let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: bits, sample_format: SampleFormat::Int };
        let mut w = WavWriter::create(path, spec).unwrap();
        for f in frames {
            for &s in f {
                match bits {
                    8 => w.write_sample(s as i8).unwrap(),
                    16 => w.write_sample(s as i16).unwrap(),
                    _ => w.write_sample(s).unwrap(),
                }
            }
        }
        w.finalize().unwrap();
    }

    fn write_float(path: &Path, channels: u16, samples: &[f32], rate: u32) {
        let spec = WavSpec { channels, sample_rate: rate, bits_per_sample: 32, sample_format: SampleFormat::Float };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in samples {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn stereo_mixdown_preserves_frame_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("st.wav");
        let frames: Vec<Vec<i32>> = (0..1000).map(|i| vec![i * 10, -i * 10]).collect();
        write_int(&p, 2, 16, &frames, 44_100);
        let buf: SampleBuffer<f64> = load_audio(&p, None).unwrap();
        assert_eq!(buf.len(), 1000);
        assert!(buf.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn integer_widths_scale_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        for &(bits, v) in &[(8u16, 64i32), (16, 16_384), (24, 4_194_304), (32, 1_073_741_824)] {
            let p = dir.path().join(format!("b{bits}.wav"));
            write_int(&p, 1, bits, &[vec![v], vec![-v]], 8_000);
            let buf: SampleBuffer<f64> = load_audio(&p, None).unwrap();
            assert_eq!(buf.samples(), &[0.5, -0.5], "{bits}-bit");
        }
    }

    #[test]
    fn silent_file_gives_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.wav");
        write_float(&p, 1, &[0.0; 4096], 44_100);
        let buf: SampleBuffer<f32> = load_audio(&p, None).unwrap();
        assert_eq!(buf.len(), 4096);
        assert!(buf.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn resamples_to_target_rate() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.wav");
        let n = 4_800;
        let x: Vec<f32> = (0..n).map(|i| (i as f32 * 0.0576).sin() * 0.3).collect();
        write_float(&p, 1, &x, 48_000);
        let buf: SampleBuffer<f64> = load_audio(&p, Some(44_100)).unwrap();
        let expected = (n as f64 * 44_100.0 / 48_000.0).round() as i64;
        assert!((buf.len() as i64 - expected).abs() <= 1);
        assert_eq!(buf.sample_rate(), 44_100);
    }

    #[test]
    fn float_overshoot_is_peak_normalized() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("hot.wav");
        write_float(&p, 1, &[2.0, -1.0, 0.5], 8_000);
        let buf: SampleBuffer<f64> = load_audio(&p, None).unwrap();
        assert_eq!(buf.samples(), &[1.0, -0.5, 0.25]);
    }

    #[test]
    fn errors_are_distinct_and_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("missing.wav");
        let e = load_audio::<f64>(&missing, None).unwrap_err();
        assert!(matches!(e, Error::AudioUnreadable { .. }));
        assert!(e.to_string().contains("missing.wav"));

        let empty = dir.path().join("empty.wav");
        write_float(&empty, 1, &[], 8_000);
        let e = load_audio::<f64>(&empty, None).unwrap_err();
        assert!(matches!(e, Error::EmptyAudio { .. }));
        assert!(e.to_string().contains("empty.wav"));

        let quad = dir.path().join("quad.wav");
        write_float(&quad, 4, &[0.0; 8], 8_000);
        let e = load_audio::<f64>(&quad, None).unwrap_err();
        assert!(matches!(e, Error::UnsupportedEncoding { .. }));
        assert!(e.to_string().contains("quad.wav"));

        let junk = dir.path().join("junk.wav");
        std::fs::write(&junk, b"definitely not a riff file").unwrap();
        assert!(load_audio::<f64>(&junk, None).is_err());
    }

    #[test]
    fn duration_relation_is_exact() {
        let b = SampleBuffer::new(vec![0.0f64; 22_050], 44_100);
        assert_eq!(b.duration_seconds(), 0.5);
    }
}
