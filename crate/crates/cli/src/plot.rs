//! Plot data as a two-column CSV and a bare SVG scatter.

use std::fmt::Write as _;

use portagrad::RegressionResult;

pub fn csv(x_label: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("{x_label},gradient_hz_s\n");
    for (x, y) in points {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = (hi - lo) * 0.05;
        (lo - pad, hi + pad)
    } else {
        (lo - 1.0, hi + 1.0)
    }
}

/// Scatter of `points` with the fitted line across the x range.
pub fn svg(x_label: &str, points: &[(f64, f64)], fit: &RegressionResult<f64>) -> String {
    let range = |f: fn(&(f64, f64)) -> f64| {
        points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (x0, x1) = padded(range(|p| p.0).0, range(|p| p.0).1);
    let (y0, y1) = padded(range(|p| p.1).0.min(0.0), range(|p| p.1).1);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, bottom) = (MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{}" y2="{bottom}" stroke="black"/>"#, W - MARGIN);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{left}" y2="{MARGIN}" stroke="black"/>"#);
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="middle">{fx:.0}</text>"#, sx(fx), bottom + 16.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{fy:.0}</text>"#, left - 6.0, sy(fy) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="13" text-anchor="middle">{x_label}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" font-size="13" text-anchor="middle" transform="rotate(-90 14 {:.1})">gradient (Hz/s)</text>"#,
        H / 2.0,
        H / 2.0
    );
    for &(x, y) in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(x), sy(y));
    }
    let line = |x: f64| fit.intercept + fit.slope * x;
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="firebrick" stroke-width="1.5"/>"#,
        sx(x0),
        sy(line(x0)),
        sx(x1),
        sy(line(x1))
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">slope {:.3}, r² {:.3}, n {}</text>"#,
        W - MARGIN,
        MARGIN - 10.0,
        fit.slope,
        fit.r_squared,
        fit.n
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_rows() {
        assert_eq!(csv("bpm", &[(60.0, 4500.0), (90.5, 3000.0)]), "bpm,gradient_hz_s\n60,4500\n90.5,3000\n");
    }

    #[test]
    fn svg_draws_every_point() {
        let fit = RegressionResult { slope: -25.0, intercept: 6000.0, r_squared: 0.9, n: 3 };
        let s = svg("bpm", &[(60.0, 4500.0), (80.0, 4000.0), (100.0, 3500.0)], &fit);
        assert_eq!(s.matches("<circle").count(), 3);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
    }
}
