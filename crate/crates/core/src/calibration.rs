//! Pixel-space gradient measurement and its conversion to Hz/s.
//!
//! `s_f` (Hz per pixel row) comes from the exported frequency range over the
//! image height, `s_t` (pixel columns per second) from the image width over
//! the window duration. A pixel ratio `|dy|/dx` times `s_f * s_t` is a
//! gradient in Hz/s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectro::image::{GrayImage, ImageGeometry};

/// Image coordinate; `y = 0` is the top row (highest frequency).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelPoint<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> PixelPoint<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(x >= T::zero() && y >= T::zero()) || !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidCalibration(format!("pixel ({x}, {y}) must be non-negative")));
        }
        Ok(PixelPoint { x, y })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams<T> {
    pub freq_range_hz: (T, T),
    pub image_height_px: T,
    pub image_width_px: T,
    pub window_seconds: T,
    /// Hz per pixel row.
    pub s_f: T,
    /// Pixel columns per second.
    pub s_t: T,
    pub factor: T,
}

impl<T: Real> Default for CalibrationParams<T> {
    /// 3.6 to 11 kHz over 800 rows, 1,200 columns spanning 5 s.
    fn default() -> Self {
        make_calibration((T::lit(3600.0), T::lit(11_000.0)), T::lit(800.0), T::lit(1200.0), T::lit(5.0))
            .expect("default geometry is valid")
    }
}

impl<T: Real> CalibrationParams<T> {
    /// Calibration matching a rendered image geometry.
    pub fn from_geometry(g: &ImageGeometry<T>) -> Result<Self> {
        make_calibration(
            (g.freq_min, g.freq_max),
            T::from_usize_lossy(g.height),
            T::from_usize_lossy(g.width),
            g.window_seconds,
        )
    }
}

pub fn make_calibration<T: Real>(
    freq_range: (T, T),
    height: T,
    width: T,
    window: T,
) -> Result<CalibrationParams<T>> {
    let (lo, hi) = freq_range;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidCalibration(format!("frequency range {lo}..{hi} is empty or inverted")));
    }
    for (name, v) in [("height", height), ("width", width), ("window", window)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(Error::InvalidCalibration(format!("{name} must be positive, got {v}")));
        }
    }
    let s_f = (hi - lo) / height;
    let s_t = width / window;
    Ok(CalibrationParams {
        freq_range_hz: freq_range,
        image_height_px: height,
        image_width_px: width,
        window_seconds: window,
        s_f,
        s_t,
        factor: s_f * s_t,
    })
}

/// `|y2 - y1| / (x2 - x1)`; the second point must lie strictly to the right.
pub fn pixel_gradient<T: Real>(p1: PixelPoint<T>, p2: PixelPoint<T>) -> Result<T> {
    let dx = p2.x - p1.x;
    if !(dx > T::zero()) {
        return Err(Error::NonPositiveSpan { dx: dx.to_f64_lossy() });
    }
    Ok((p2.y - p1.y).abs() / dx)
}

pub fn calibrate_gradient<T: Real>(g_px: T, cal: &CalibrationParams<T>) -> Result<T> {
    if !(g_px >= T::zero()) {
        return Err(Error::NegativeGradient(g_px.to_f64_lossy()));
    }
    Ok(g_px * cal.factor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PixelMeasurement<T> {
    pub gradient_hz_s: T,
    pub duration_s: T,
    pub delta_f_hz: T,
    pub gradient_px: T,
}

pub fn measure_from_pixels<T: Real>(
    p1: PixelPoint<T>,
    p2: PixelPoint<T>,
    cal: &CalibrationParams<T>,
) -> Result<PixelMeasurement<T>> {
    let g_px = pixel_gradient(p1, p2)?;
    Ok(PixelMeasurement {
        gradient_hz_s: calibrate_gradient(g_px, cal)?,
        duration_s: (p2.x - p1.x) / cal.s_t,
        delta_f_hz: (p2.y - p1.y).abs() * cal.s_f,
        gradient_px: g_px,
    })
}

/// Brightest row of column `x`, refined to sub-pixel precision with a
/// parabola through it and its neighbours. `None` for an all-black column.
pub fn column_peak<T: Real>(img: &GrayImage, x: usize) -> Option<T> {
    if x >= img.width || img.height == 0 {
        return None;
    }
    let (y, v) = img.column(x).enumerate().max_by_key(|&(y, v)| (v, std::cmp::Reverse(y)))?;
    if v == 0 {
        return None;
    }
    let base = T::from_usize_lossy(y);
    if y == 0 || y + 1 >= img.height {
        return Some(base);
    }
    let l = T::lit(f64::from(img.get(x, y - 1)));
    let c = T::lit(f64::from(v));
    let r = T::lit(f64::from(img.get(x, y + 1)));
    let denom = l - T::lit(2.0) * c + r;
    if denom >= T::zero() {
        return Some(base);
    }
    let half = T::lit(0.5);
    Some(base + (half * (l - r) / denom).max(-half).min(half))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> PixelPoint<f64> {
        PixelPoint::new(x, y).unwrap()
    }

    #[test]
    fn defaults_are_exact() {
        let c = CalibrationParams::<f64>::default();
        assert_eq!(c.s_f, 9.25);
        assert_eq!(c.s_t, 240.0);
        assert_eq!(c.factor, 2220.0);
        let c32 = CalibrationParams::<f32>::default();
        assert_eq!(c32.factor, 2220.0);
    }

    #[test]
    fn calibration_examples() {
        let id = make_calibration((0.0, 800.0), 800.0, 1.0, 1.0).unwrap();
        assert_eq!((id.s_f, id.s_t, id.factor), (1.0, 1.0, 1.0));
        let half = make_calibration((3600.0, 11_000.0), 400.0, 1200.0, 5.0).unwrap();
        assert_eq!(half.s_f, 18.5);
        assert_eq!(half.factor, 4440.0);
        assert!(make_calibration((11_000.0, 3600.0), 800.0, 1200.0, 5.0).is_err());
        assert!(make_calibration((0.0, 1.0), 0.0, 1200.0, 5.0).is_err());
        assert!(make_calibration((0.0, 1.0), 800.0, 1200.0, -5.0).is_err());
    }

    #[test]
    fn pixel_gradient_examples() {
        assert_eq!(pixel_gradient(pt(100.0, 300.0), pt(110.0, 280.0)).unwrap(), 2.0);
        assert_eq!(pixel_gradient(pt(0.0, 500.0), pt(50.0, 500.0)).unwrap(), 0.0);
        assert!(matches!(
            pixel_gradient(pt(10.0, 100.0), pt(10.0, 50.0)),
            Err(Error::NonPositiveSpan { .. })
        ));
        assert!(PixelPoint::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn calibrate_examples() {
        let c = CalibrationParams::default();
        assert_eq!(calibrate_gradient(2.0, &c).unwrap(), 4440.0);
        assert_eq!(calibrate_gradient(0.0, &c).unwrap(), 0.0);
        assert_eq!(calibrate_gradient(1.0, &c).unwrap(), 2220.0);
        assert!(calibrate_gradient(-0.5, &c).is_err());
    }

    #[test]
    fn measure_examples() {
        let c = CalibrationParams::default();
        let m = measure_from_pixels(pt(100.0, 300.0), pt(110.0, 280.0), &c).unwrap();
        assert_eq!(m.gradient_hz_s, 4440.0);
        assert!((m.duration_s - 10.0 / 240.0).abs() < 1e-15);
        assert_eq!(m.delta_f_hz, 185.0);
        let m = measure_from_pixels(pt(0.0, 100.0), pt(80.0, 120.0), &c).unwrap();
        assert!((m.duration_s - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.gradient_hz_s, 555.0);
        let flat = measure_from_pixels(pt(3.0, 7.0), pt(9.0, 7.0), &c).unwrap();
        assert_eq!((flat.gradient_hz_s, flat.delta_f_hz), (0.0, 0.0));
    }

    #[test]
    fn column_peak_interpolates() {
        let mut img = GrayImage { width: 1, height: 5, pixels: vec![0, 100, 200, 100, 0] };
        assert_eq!(column_peak::<f64>(&img, 0), Some(2.0));
        img.pixels = vec![0, 100, 200, 200, 0];
        let y = column_peak::<f64>(&img, 0).unwrap();
        assert!(y > 2.0 && y <= 2.5);
        img.pixels = vec![0; 5];
        assert_eq!(column_peak::<f64>(&img, 0), None);
    }
}
