//! Model-based refinement of slide endpoints.
//!
//! A window tens of milliseconds long blurs the corners of a short glide,
//! so the tracked frequencies near onset and termination are pulled toward
//! the held notes and a line through them misjudges the slope. Refinement
//! fits the endpoints by analysis-by-synthesis: a sinusoid following the
//! ideal piecewise-linear path is pushed through the same spectrogram and
//! tracker, and onset/termination are adjusted until its track matches the
//! observed one over the transition.

use crate::error::Result;
use crate::events::{event_gradient, EventKind, TransitionEvent};
use crate::pitchtrack::{track_pitch, PitchTrack, TrackingParams};
use crate::scalar::Real;
use crate::spectro::{compute_spectrogram, SpectroConfig};
use crate::SampleBuffer;

/// Largest endpoint move accepted from the fit, in seconds. Anything larger
/// means the model does not describe the transition.
const MAX_SHIFT_S: f64 = 0.02;

/// Refine a sliding event in place of the line-fit estimate.
///
/// Returns the event unchanged when it is not sliding, when the fit does not
/// improve the match or when the refined duration would fall below
/// `min_duration` (the classification already made stands).
pub fn refine_slide<T: Real>(
    event: &TransitionEvent<T>,
    track: &PitchTrack<T>,
    cfg: &SpectroConfig<T>,
    sample_rate: u32,
    min_duration: T,
) -> Result<TransitionEvent<T>> {
    if event.kind != EventKind::Sliding || track.is_empty() {
        return Ok(event.clone());
    }
    let sr = T::lit(f64::from(sample_rate));
    let n = cfg.window_size;
    let hop = cfg.effective_hop(sample_rate);
    let reach = T::from_usize_lossy(n) / sr;
    let t_lo = event.onset_time - reach;
    let t_hi = event.termination_time + reach;
    let frames: Vec<usize> = (0..track.len()).filter(|&i| track.times[i] >= t_lo && track.times[i] <= t_hi).collect();
    let (Some(&k0), Some(&k1)) = (frames.first(), frames.last()) else {
        return Ok(event.clone());
    };
    let n_model = (k1 - k0) * hop + n;
    let t0 = track.times[k0] - T::from_usize_lossy(n / 2) / sr;
    let model_cfg = SpectroConfig { hop_size: hop, target_time_res: None, ..cfg.clone() };
    let tracking = TrackingParams { absolute_floor: T::lit(1e-9), ..TrackingParams::default() };
    let render = |on: T, off: T, fa: T, fb: T| -> Result<PitchTrack<T>> {
        let span = off - on;
        let dt = T::one() / sr;
        let half = T::lit(0.5);
        let mut phase = T::zero();
        let mut samples = Vec::with_capacity(n_model);
        for i in 0..n_model {
            let t = t0 + (T::from_usize_lossy(i) + half) * dt;
            let f = if t <= on {
                fa
            } else if t >= off {
                fb
            } else {
                fa + (fb - fa) * (t - on) / span
            };
            samples.push(half * phase.sin());
            phase = (phase + T::TAU() * f * dt) % (T::TAU() * T::lit(1e6));
        }
        let spec = compute_spectrogram(&SampleBuffer::new(samples, sample_rate), &model_cfg)?;
        Ok(track_pitch(&spec, &tracking))
    };

    // The tracker itself misreads a steady tone by a fraction of a bin, so the
    // observed plateau medians already carry that error. Undo it before
    // synthesising, otherwise the model would carry it twice.
    let steady = |f: T| -> Result<T> {
        let t = render(t0 - T::one(), t0 - T::lit(0.5), f, f)?;
        Ok(crate::scalar::median(&t.freqs).unwrap_or(f) - f)
    };
    let fa = event.onset_freq - steady(event.onset_freq)?;
    let fb = event.termination_freq - steady(event.termination_freq)?;
    let model_track = |on: T, off: T| render(on, off, fa, fb);

    let cost = |p: [T; 2]| -> T {
        let (on, off) = (p[0], p[1]);
        if !(off - on > T::lit(1e-4)) {
            return T::infinity();
        }
        let Ok(m) = model_track(on, off) else {
            return T::infinity();
        };
        let mut sum = T::zero();
        for &k in &frames {
            let j = k - k0;
            if j < m.len() && track.voiced[k] && m.voiced[j] {
                let d = T::lit(1200.0) * (track.freqs[k] / m.freqs[j]).log2();
                sum += d * d;
            }
        }
        sum
    };

    let start = [event.onset_time, event.termination_time];
    let c0 = cost(start);
    let (best, c_best) = nelder_mead(cost, start, T::lit(0.002), T::lit(1e-6), 300);
    let limit = T::lit(MAX_SHIFT_S);
    let moved = (best[0] - start[0]).abs().max((best[1] - start[1]).abs());
    let duration = best[1] - best[0];
    if !(c_best < c0) || moved > limit || duration < min_duration {
        return Ok(event.clone());
    }
    Ok(TransitionEvent {
        onset_time: best[0],
        termination_time: best[1],
        onset_freq: fa,
        termination_freq: fb,
        gradient_hz_per_s: event_gradient(fa, fb, duration)?,
        duration_s: duration,
        ..event.clone()
    })
}

/// Two-parameter Nelder-Mead simplex search.
fn nelder_mead<T: Real>(f: impl Fn([T; 2]) -> T, x0: [T; 2], step: T, tol: T, max_evals: usize) -> ([T; 2], T) {
    let mut pts = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut vals = [f(pts[0]), f(pts[1]), f(pts[2])];
    let mut evals = 3;
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let lerp = |a: [T; 2], b: [T; 2], t: T| [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
    while evals < max_evals {
        let mut idx = [0, 1, 2];
        idx.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap_or(std::cmp::Ordering::Equal));
        pts = [pts[idx[0]], pts[idx[1]], pts[idx[2]]];
        vals = [vals[idx[0]], vals[idx[1]], vals[idx[2]]];
        let size = (0..2)
            .map(|d| (pts[1][d] - pts[0][d]).abs().max((pts[2][d] - pts[0][d]).abs()))
            .fold(T::zero(), T::max);
        if size < tol {
            break;
        }
        let centroid = lerp(pts[0], pts[1], half);
        // Reflect the worst vertex through the centroid of the other two.
        let reflected = lerp(pts[2], centroid, two);
        let fr = f(reflected);
        evals += 1;
        if fr < vals[0] {
            let expanded = lerp(pts[2], centroid, T::lit(3.0));
            let fe = f(expanded);
            evals += 1;
            if fe < fr {
                pts[2] = expanded;
                vals[2] = fe;
            } else {
                pts[2] = reflected;
                vals[2] = fr;
            }
        } else if fr < vals[1] {
            pts[2] = reflected;
            vals[2] = fr;
        } else {
            let contracted = if fr < vals[2] { lerp(centroid, reflected, half) } else { lerp(centroid, pts[2], half) };
            let fc = f(contracted);
            evals += 1;
            if fc < vals[2].min(fr) {
                pts[2] = contracted;
                vals[2] = fc;
            } else {
                for i in 1..3 {
                    pts[i] = lerp(pts[0], pts[i], half);
                    vals[i] = f(pts[i]);
                }
                evals += 2;
            }
        }
    }
    let (mut bi, mut bv) = (0, vals[0]);
    for (i, &v) in vals.iter().enumerate().skip(1) {
        if v < bv {
            bi = i;
            bv = v;
        }
    }
    (pts[bi], bv)
}
