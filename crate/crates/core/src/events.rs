//! Plateau/transition segmentation of a pitch track and the two-way
//! sliding / clean-shift taxonomy.
//!
//! Pipeline:
//! 1. Pitch is converted to cents and demodulated with a moving median one
//!    vibrato period wide (`1 / vibrato_rate_min_hz`). A moving median leaves
//!    monotone ramps untouched, so glide corners survive demodulation.
//! 2. Stable cores are grown greedily: a run stays a core while every value
//!    is within `plateau_tol_cents` of the run median. Cores of at least
//!    `min_plateau_s` are kept, merged when they describe the same pitch, and
//!    widened frame by frame until the trace leaves the tolerance band.
//! 3. Each consecutive plateau pair at least `min_slide_interval_cents` apart
//!    yields one transition. Voiced frames strictly between the two bands are
//!    fitted with a straight line in Hz; its crossings of the two plateau
//!    medians give onset and termination, i.e. where the trace departs from
//!    one pitch centre and arrives at the next.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pitchtrack::PitchTrack;
use crate::scalar::{median, Real};

/// Transitions whose voiced span is strictly shorter than this are clean shifts.
pub const CLEAN_SHIFT_MAX_S: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Sliding,
    CleanShift,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Sliding => "sliding",
            EventKind::CleanShift => "clean_shift",
        })
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sliding" => Ok(EventKind::Sliding),
            "clean_shift" => Ok(EventKind::CleanShift),
            other => Err(format!("unknown kind `{other}` (expected sliding or clean_shift)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionEvent<T> {
    pub onset_time: T,
    pub termination_time: T,
    pub onset_freq: T,
    pub termination_freq: T,
    pub kind: EventKind,
    /// Hz/s; zero for clean shifts.
    pub gradient_hz_per_s: T,
    pub duration_s: T,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentationParams<T> {
    pub plateau_tol_cents: T,
    pub min_plateau_s: T,
    pub min_slide_interval_cents: T,
    pub clean_shift_max_s: T,
    pub vibrato_rate_min_hz: T,
    /// Plateau pairs further apart than this are separate notes, not a shift.
    pub max_transition_s: T,
}

impl<T: Real> Default for SegmentationParams<T> {
    fn default() -> Self {
        SegmentationParams {
            plateau_tol_cents: T::lit(35.0),
            min_plateau_s: T::lit(0.08),
            min_slide_interval_cents: T::lit(70.0),
            clean_shift_max_s: T::lit(CLEAN_SHIFT_MAX_S),
            vibrato_rate_min_hz: T::lit(4.0),
            max_transition_s: T::lit(1.0),
        }
    }
}

impl<T: Real> SegmentationParams<T> {
    pub fn validate(&self) -> std::result::Result<(), String> {
        let fields = [
            ("plateau_tol_cents", self.plateau_tol_cents),
            ("min_plateau_s", self.min_plateau_s),
            ("min_slide_interval_cents", self.min_slide_interval_cents),
            ("clean_shift_max_s", self.clean_shift_max_s),
            ("vibrato_rate_min_hz", self.vibrato_rate_min_hz),
            ("max_transition_s", self.max_transition_s),
        ];
        for (name, v) in fields {
            if !(v > T::zero() && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.clean_shift_max_s >= self.min_plateau_s {
            return Err(format!(
                "clean_shift_max_s ({}) must be below min_plateau_s ({})",
                self.clean_shift_max_s, self.min_plateau_s
            ));
        }
        Ok(())
    }
}

/// `|termination_freq - onset_freq| / duration` in Hz/s.
pub fn event_gradient<T: Real>(onset_freq: T, termination_freq: T, duration: T) -> Result<T> {
    if !(duration > T::zero()) {
        return Err(Error::NonPositiveDuration(duration.to_f64_lossy()));
    }
    Ok((termination_freq - onset_freq).abs() / duration)
}

/// What [`classify_event`] needs to know about a transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionCandidate<T> {
    /// Voiced time between departure and arrival, unvoiced gap frames excluded.
    pub voiced_span_s: T,
    /// No voiced frame at all between the two plateaus.
    pub fully_unvoiced: bool,
}

pub fn classify_event<T: Real>(candidate: &TransitionCandidate<T>, params: &SegmentationParams<T>) -> EventKind {
    if candidate.fully_unvoiced || candidate.voiced_span_s < params.clean_shift_max_s {
        EventKind::CleanShift
    } else {
        EventKind::Sliding
    }
}

/// A stable pitch stretch, frames `start..=end` of the track.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plateau<T> {
    pub start: usize,
    pub end: usize,
    pub median_hz: T,
    pub median_cents: T,
}

/// Full segmentation result; `transitions[i]` is the inclusive frame range
/// between the plateaus of `events[i]` (empty ranges encoded as `start > end`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segmentation<T> {
    pub plateaus: Vec<Plateau<T>>,
    pub events: Vec<TransitionEvent<T>>,
    pub transitions: Vec<(usize, usize)>,
}

impl<T: Real> Segmentation<T> {
    /// Fraction of voiced frames that belong to neither a plateau nor a transition.
    pub fn stray_voiced_fraction(&self, track: &PitchTrack<T>) -> T {
        let voiced = track.voiced_count();
        if voiced == 0 {
            return T::zero();
        }
        let mut covered = vec![false; track.len()];
        for p in &self.plateaus {
            covered[p.start..=p.end].iter_mut().for_each(|c| *c = true);
        }
        for &(a, b) in &self.transitions {
            if a <= b {
                covered[a..=b].iter_mut().for_each(|c| *c = true);
            }
        }
        let stray = (0..track.len()).filter(|&i| track.voiced[i] && !covered[i]).count();
        T::from_usize_lossy(stray) / T::from_usize_lossy(voiced)
    }
}

/// Detected transitions of `track`, time-ordered and non-overlapping.
pub fn segment_events<T: Real>(track: &PitchTrack<T>, params: &SegmentationParams<T>) -> Vec<TransitionEvent<T>> {
    segment(track, params).events
}

pub fn segment<T: Real>(track: &PitchTrack<T>, params: &SegmentationParams<T>) -> Segmentation<T> {
    let plateaus = find_plateaus(track, params);
    let mut events = Vec::new();
    let mut transitions = Vec::new();
    for pair in plateaus.windows(2) {
        if let Some(ev) = measure_transition(track, &pair[0], &pair[1], params) {
            events.push(ev);
            transitions.push((pair[0].end + 1, pair[1].start.saturating_sub(1)));
        }
    }
    Segmentation { plateaus, events, transitions }
}

fn to_cents<T: Real>(f: T) -> T {
    T::lit(1200.0) * (f / T::lit(440.0)).log2()
}

fn from_cents<T: Real>(c: T) -> T {
    T::lit(440.0) * (c / T::lit(1200.0)).exp2()
}

/// Maximal runs `(start, end)` of voiced frames.
fn voiced_runs(voiced: &[bool]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut i = 0;
    while i < voiced.len() {
        if voiced[i] {
            let s = i;
            while i + 1 < voiced.len() && voiced[i + 1] {
                i += 1;
            }
            runs.push((s, i));
        }
        i += 1;
    }
    runs
}

/// Symmetric moving median of `x[a..=b]`, shrinking the window at run edges.
fn moving_median<T: Real>(x: &[T], a: usize, b: usize, half: usize) -> Vec<T> {
    let mut window = Vec::with_capacity(2 * half + 1);
    (a..=b)
        .map(|i| {
            let h = half.min(i - a).min(b - i);
            window.clear();
            window.extend_from_slice(&x[i - h..=i + h]);
            window.sort_by(|p, q| p.partial_cmp(q).unwrap_or(Ordering::Equal));
            window[h]
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq)]
struct Key<T>(T);

impl<T: PartialOrd> Eq for Key<T> {}

impl<T: PartialOrd> PartialOrd for Key<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or(Ordering::Equal)
    }
}

/// Insert-only running median over two heaps.
struct RunningMedian<T> {
    low: BinaryHeap<Key<T>>,
    high: BinaryHeap<Reverse<Key<T>>>,
}

impl<T: Real> RunningMedian<T> {
    fn new() -> Self {
        RunningMedian { low: BinaryHeap::new(), high: BinaryHeap::new() }
    }

    fn push(&mut self, v: T) {
        match self.low.peek() {
            Some(top) if v > top.0 => self.high.push(Reverse(Key(v))),
            _ => self.low.push(Key(v)),
        }
        if self.low.len() > self.high.len() + 1 {
            let m = self.low.pop().expect("non-empty");
            self.high.push(Reverse(m));
        } else if self.high.len() > self.low.len() {
            let Reverse(m) = self.high.pop().expect("non-empty");
            self.low.push(m);
        }
    }

    fn median(&self) -> T {
        let lo = self.low.peek().expect("non-empty").0;
        if self.low.len() > self.high.len() {
            lo
        } else {
            let hi = self.high.peek().expect("non-empty").0 .0;
            (lo + hi) / T::lit(2.0)
        }
    }
}

fn frames_for<T: Real>(seconds: T, step: T) -> usize {
    (seconds / step).ceil().to_usize().unwrap_or(usize::MAX).max(1)
}

/// Stable pitch plateaus of `track`, in time order.
pub fn find_plateaus<T: Real>(track: &PitchTrack<T>, params: &SegmentationParams<T>) -> Vec<Plateau<T>> {
    let n = track.len();
    if n == 0 || !(track.frame_step > T::zero()) {
        return Vec::new();
    }
    let step = track.frame_step;
    let tol = params.plateau_tol_cents;
    let cents: Vec<T> = track
        .freqs
        .iter()
        .zip(&track.voiced)
        .map(|(&f, &v)| if v && f > T::zero() { to_cents(f) } else { T::zero() })
        .collect();
    let half = (T::lit(0.5) / (params.vibrato_rate_min_hz * step)).round().to_usize().unwrap_or(0);
    let min_len = frames_for(params.min_plateau_s, step);

    let mut plateaus: Vec<Plateau<T>> = Vec::new();
    for (a, b) in voiced_runs(&track.voiced) {
        let demod = moving_median(&cents, a, b, half);
        let d = |i: usize| demod[i - a];

        // Greedy stable cores.
        let mut cores: Vec<(usize, usize)> = Vec::new();
        let mut s = a;
        while s <= b {
            let mut rm = RunningMedian::new();
            let (mut lo, mut hi) = (d(s), d(s));
            rm.push(d(s));
            let mut e = s;
            while e < b {
                let v = d(e + 1);
                let mut trial = RunningMedian { low: rm.low.clone(), high: rm.high.clone() };
                trial.push(v);
                let med = trial.median();
                let (nlo, nhi) = (lo.min(v), hi.max(v));
                if nhi - med > tol || med - nlo > tol {
                    break;
                }
                rm = trial;
                lo = nlo;
                hi = nhi;
                e += 1;
            }
            if e - s + 1 >= min_len && drift(&demod[s - a..=e - a]) <= tol {
                cores.push((s, e));
            }
            s = e + 1;
        }

        // Merge neighbouring cores on the same pitch.
        let mut merged: Vec<(usize, usize, T)> = Vec::new();
        for (s, e) in cores {
            let med = median(&demod[s - a..=e - a]).expect("non-empty core");
            if let Some(last) = merged.last_mut() {
                if (med - last.2).abs() <= tol {
                    last.1 = e;
                    last.2 = median(&demod[last.0 - a..=e - a]).expect("non-empty core");
                    continue;
                }
            }
            merged.push((s, e, med));
        }

        // Widen each core until the demodulated trace leaves its band.
        let count = merged.len();
        for j in 0..count {
            let (mut s, mut e, med) = merged[j];
            let left_limit = if j == 0 { a } else { merged[j - 1].1 + 1 };
            let right_limit = if j + 1 == count { b } else { merged[j + 1].0 - 1 };
            while s > left_limit && (d(s - 1) - med).abs() <= tol {
                s -= 1;
            }
            while e < right_limit && (d(e + 1) - med).abs() <= tol {
                e += 1;
            }
            merged[j].0 = s;
            merged[j].1 = e;
        }
        for (s, e, _) in merged {
            let hz = median(&track.freqs[s..=e]).expect("non-empty plateau");
            plateaus.push(Plateau { start: s, end: e, median_hz: hz, median_cents: to_cents(hz) });
        }
    }
    plateaus
}

/// Total change across `x` of its least-squares line, in the units of `x`.
/// A slow ramp fits inside the tolerance band yet drifts by nearly twice the
/// tolerance; a held note, even with residual vibrato, barely drifts.
fn drift<T: Real>(x: &[T]) -> T {
    let pts: Vec<(T, T)> = x.iter().enumerate().map(|(i, &v)| (T::from_usize_lossy(i), v)).collect();
    match fit_line(&pts, T::zero()) {
        Some((_, slope)) => (slope * T::from_usize_lossy(x.len() - 1)).abs(),
        None => T::zero(),
    }
}

/// Least-squares line `f = intercept + slope * (t - t_ref)`.
fn fit_line<T: Real>(pts: &[(T, T)], t_ref: T) -> Option<(T, T)> {
    let n = T::from_usize_lossy(pts.len());
    if pts.len() < 2 {
        return None;
    }
    let mt = pts.iter().map(|p| p.0 - t_ref).sum::<T>() / n;
    let mf = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx = pts.iter().map(|p| (p.0 - t_ref - mt).powi(2)).sum::<T>();
    if !(sxx > T::zero()) {
        return None;
    }
    let sxy = pts.iter().map(|p| (p.0 - t_ref - mt) * (p.1 - mf)).sum::<T>();
    let slope = sxy / sxx;
    Some((mf - slope * mt, slope))
}

/// Minimum number of in-between frames needed to fit the slide line.
const MIN_FIT_FRAMES: usize = 3;

/// Fraction of the fitted in-between stretch the fit frames must span.
const MIN_COVERAGE: f64 = 0.5;

fn measure_transition<T: Real>(
    track: &PitchTrack<T>,
    a: &Plateau<T>,
    b: &Plateau<T>,
    params: &SegmentationParams<T>,
) -> Option<TransitionEvent<T>> {
    let interval = b.median_cents - a.median_cents;
    if interval.abs() < params.min_slide_interval_cents {
        return None;
    }
    let (t_last, t_first) = (track.times[a.end], track.times[b.start]);
    if t_first - t_last > params.max_transition_s {
        return None;
    }
    let direction = if interval > T::zero() { Direction::Ascending } else { Direction::Descending };
    let sign = if interval > T::zero() { T::one() } else { -T::one() };
    let tol = params.plateau_tol_cents;
    let step = track.frame_step;

    let region = a.end + 1..b.start;
    let voiced: Vec<usize> = region.clone().filter(|&i| track.voiced[i]).collect();
    let unvoiced = region.len() - voiced.len();

    let clean = |span: T, fully_unvoiced: bool| {
        let cand = TransitionCandidate { voiced_span_s: span, fully_unvoiced };
        (classify_event(&cand, params) == EventKind::CleanShift).then(|| TransitionEvent {
            onset_time: t_last,
            termination_time: t_first,
            onset_freq: a.median_hz,
            termination_freq: b.median_hz,
            kind: EventKind::CleanShift,
            gradient_hz_per_s: T::zero(),
            duration_s: t_first - t_last,
            direction,
        })
    };

    if voiced.is_empty() {
        return clean(T::zero(), true);
    }

    // Frames strictly between the two tolerance bands.
    let lo_edge = a.median_cents + sign * tol;
    let hi_edge = b.median_cents - sign * tol;
    let pts: Vec<(T, T)> = voiced
        .iter()
        .filter(|&&i| {
            let c = to_cents(track.freqs[i]);
            sign * (c - lo_edge) > T::zero() && sign * (hi_edge - c) > T::zero()
        })
        .map(|&i| (track.times[i], track.freqs[i]))
        .collect();

    let raw_span = T::from_usize_lossy(voiced.len()) * step;
    let fit = (pts.len() >= MIN_FIT_FRAMES)
        .then(|| fit_line(&pts, pts[0].0))
        .flatten()
        .filter(|&(_, slope)| sign * slope > T::zero());
    let Some((intercept, slope)) = fit else {
        return clean(raw_span, false).or_else(|| sliding_from_frames(track, a, b, direction, &voiced));
    };

    let t_ref = pts[0].0;
    let mut onset = t_ref + (a.median_hz - intercept) / slope;
    let mut termination = t_ref + (b.median_hz - intercept) / slope;
    onset = onset.max(track.times[a.start]);
    termination = termination.min(track.times[b.end]);
    if !(termination > onset) {
        return clean(raw_span, false).or_else(|| sliding_from_frames(track, a, b, direction, &voiced));
    }
    // The fit frames of a real slide fill the stretch between the two bands.
    // A few stray frames bridging a step reach a long line only by extrapolation.
    let extent = pts[pts.len() - 1].0 - pts[0].0 + step;
    let between = (from_cents(hi_edge) - from_cents(lo_edge)) / (b.median_hz - a.median_hz);
    if extent < T::lit(MIN_COVERAGE) * between * (termination - onset) {
        return clean(extent, false).or_else(|| sliding_from_frames(track, a, b, direction, &voiced));
    }
    let span = (termination - onset - T::from_usize_lossy(unvoiced) * step).max(T::zero());
    if let Some(ev) = clean(span, false) {
        return Some(ev);
    }
    let duration = termination - onset;
    Some(TransitionEvent {
        onset_time: onset,
        termination_time: termination,
        onset_freq: a.median_hz,
        termination_freq: b.median_hz,
        kind: EventKind::Sliding,
        gradient_hz_per_s: event_gradient(a.median_hz, b.median_hz, duration).ok()?,
        duration_s: duration,
        direction,
    })
}

/// Fallback when no line can be fitted: span the voiced transition frames.
fn sliding_from_frames<T: Real>(
    track: &PitchTrack<T>,
    a: &Plateau<T>,
    b: &Plateau<T>,
    direction: Direction,
    voiced: &[usize],
) -> Option<TransitionEvent<T>> {
    let onset = track.times[a.end];
    let termination = track.times[b.start];
    let _ = voiced;
    let duration = termination - onset;
    Some(TransitionEvent {
        onset_time: onset,
        termination_time: termination,
        onset_freq: a.median_hz,
        termination_freq: b.median_hz,
        kind: EventKind::Sliding,
        gradient_hz_per_s: event_gradient(a.median_hz, b.median_hz, duration).ok()?,
        duration_s: duration,
        direction,
    })
}
