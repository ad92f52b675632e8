//! Rendering a spectrogram to an 8-bit grayscale image and PGM (P5) I/O.
//!
//! Image convention: row 0 is the highest frequency, so smaller `y` means
//! higher pitch. Row `y` is centred on `freq_max - (y + 0.5) * s_f`, column
//! `x` on `start_time + (x + 0.5) / s_t`.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::Spectrogram;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Pixel geometry of an exported spectrogram view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImageGeometry<T> {
    pub freq_min: T,
    pub freq_max: T,
    pub height: usize,
    pub width: usize,
    /// Seconds of audio spanned by the full image width.
    pub window_seconds: T,
    pub start_time: T,
    /// Gray level 0 sits this many dB below full scale.
    pub dynamic_range_db: T,
}

impl<T: Real> ImageGeometry<T> {
    /// 3.6 to 11 kHz over 800 rows, 5 s over 1,200 columns.
    pub fn overtone_display() -> Self {
        ImageGeometry {
            freq_min: T::lit(3600.0),
            freq_max: T::lit(11_000.0),
            height: 800,
            width: 1200,
            window_seconds: T::lit(5.0),
            start_time: T::zero(),
            dynamic_range_db: T::lit(90.0),
        }
    }

    /// Hz per pixel row.
    pub fn hz_per_px(&self) -> T {
        (self.freq_max - self.freq_min) / T::from_usize_lossy(self.height)
    }

    /// Pixel columns per second.
    pub fn px_per_second(&self) -> T {
        T::from_usize_lossy(self.width) / self.window_seconds
    }

    pub fn row_freq(&self, y: T) -> T {
        self.freq_max - y * self.hz_per_px()
    }

    pub fn column_time(&self, x: T) -> T {
        self.start_time + x / self.px_per_second()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    /// Row-major, row 0 at the top.
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn column(&self, x: usize) -> impl Iterator<Item = u8> + '_ {
        (0..self.height).map(move |y| self.get(x, y))
    }
}

/// Draw `spec` into `geom`, mapping `20 log10(magnitude)` linearly from
/// `-dynamic_range_db` (black) to 0 dBFS (white). Pixels outside the
/// spectrogram's time or frequency coverage are black.
pub fn render<T: Real>(spec: &Spectrogram<T>, geom: &ImageGeometry<T>) -> GrayImage {
    let half = T::lit(0.5);
    let freqs = spec.bin_freqs();
    let times = spec.frame_times();
    let range = geom.dynamic_range_db;
    let mut pixels = vec![0u8; geom.width * geom.height];
    if spec.is_empty() {
        return GrayImage { width: geom.width, height: geom.height, pixels };
    }
    let bw = spec.bin_width();
    let step = spec.frame_step();
    for x in 0..geom.width {
        let t = geom.column_time(T::from_usize_lossy(x) + half);
        let pos = ((t - times[0]) / step).round();
        if pos < T::zero() || pos > T::from_usize_lossy(times.len() - 1) {
            continue;
        }
        let frame = spec.frame(pos.to_usize().unwrap_or(0));
        for y in 0..geom.height {
            let f = geom.row_freq(T::from_usize_lossy(y) + half);
            let u = (f - freqs[0]) / bw;
            if u < T::zero() || u > T::from_usize_lossy(freqs.len() - 1) {
                continue;
            }
            let k = u.floor().to_usize().unwrap_or(0).min(freqs.len() - 1);
            let frac = u - T::from_usize_lossy(k);
            let m = if k + 1 < freqs.len() {
                frame[k] * (T::one() - frac) + frame[k + 1] * frac
            } else {
                frame[k]
            };
            if m <= T::zero() {
                continue;
            }
            let db = T::lit(20.0) * m.log10();
            let level = ((db + range) / range * T::lit(255.0)).round();
            pixels[y * geom.width + x] = level.max(T::zero()).min(T::lit(255.0)).to_u8().unwrap_or(0);
        }
    }
    GrayImage { width: geom.width, height: geom.height, pixels }
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.pixels);
    out
}

pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let io = |e| Error::Io { path: path.to_path_buf(), source: e };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(&encode_pgm(img)).map_err(io)
}

/// Parse a binary 8-bit PGM (P5). Comments in the header are skipped.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    let mut pos = 0;
    let mut fields = Vec::with_capacity(4);
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if fields[0] != "P5" {
        return Err(format!("magic `{}` is not P5", fields[0]));
    }
    let parse = |s: &str, what: &str| s.parse::<usize>().map_err(|_| format!("bad {what} `{s}`"));
    let width = parse(&fields[1], "width")?;
    let height = parse(&fields[2], "height")?;
    if parse(&fields[3], "maxval")? != 255 {
        return Err("only maxval 255 is supported".into());
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let need = width * height;
    if bytes.len() < pos + need {
        return Err(format!("raster holds {} bytes, expected {need}", bytes.len().saturating_sub(pos)));
    }
    Ok(GrayImage { width, height, pixels: bytes[pos..pos + need].to_vec() })
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    decode_pgm(&bytes).map_err(|reason| Error::Image { path: path.to_path_buf(), reason })
}
