//! Gain-sweep recovery of faint glide traces.
//!
//! Uniform gain cannot improve SNR. What it changes is where the trace sits
//! relative to a fixed absolute visibility floor, the stand-in for a display
//! whose colour map hides everything below a certain level. The sweep raises
//! gain in fixed steps until the tracker sees a coherent slide and stops
//! before noise crossing the floor dominates the voiced frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::{segment, EventKind, SegmentationParams, TransitionEvent};
use crate::pitchtrack::{track_pitch, TrackingParams};
use crate::scalar::Real;
use crate::spectro::Spectrogram;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryParams<T> {
    pub step_db: T,
    pub max_gain_db: T,
    /// Absolute linear magnitude a peak must reach to count as voiced.
    pub visibility_floor: T,
    /// Largest tolerated fraction of voiced frames outside plateaus and transitions.
    pub artefact_ratio_max: T,
}

impl<T: Real> Default for RecoveryParams<T> {
    fn default() -> Self {
        RecoveryParams {
            step_db: T::lit(3.0),
            max_gain_db: T::lit(15.0),
            visibility_floor: T::lit(1e-3),
            artefact_ratio_max: T::lit(0.25),
        }
    }
}

impl<T: Real> RecoveryParams<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.step_db > T::zero()) {
            return bad(format!("step_db must be positive, got {}", self.step_db));
        }
        if !(self.max_gain_db >= self.step_db) {
            return bad(format!("max_gain_db ({}) must be at least step_db ({})", self.max_gain_db, self.step_db));
        }
        if !(self.visibility_floor > T::zero()) {
            return bad(format!("visibility_floor must be positive, got {}", self.visibility_floor));
        }
        if !(self.artefact_ratio_max >= T::zero() && self.artefact_ratio_max <= T::one()) {
            return bad(format!("artefact_ratio_max must lie in [0, 1], got {}", self.artefact_ratio_max));
        }
        Ok(())
    }

    /// Gains visited by the sweep: `0, step, 2 step, ...` up to the cap.
    pub fn gains(&self) -> Vec<T> {
        let mut out = Vec::new();
        let mut k = 0usize;
        loop {
            let g = T::from_usize_lossy(k) * self.step_db;
            // Tolerate rounding at the cap, e.g. 5 x 3.0 vs 15.0.
            if g > self.max_gain_db * (T::one() + T::lit(1e-12)) {
                break;
            }
            out.push(g);
            k += 1;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryStep<T> {
    pub gain_db: T,
    pub voiced_fraction: T,
    pub artefact_ratio: T,
    pub sliding_events: usize,
    pub clean_shifts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryResult<T> {
    pub gain_used_db: T,
    pub recovered: bool,
    pub events: Vec<TransitionEvent<T>>,
    pub diagnostics: Vec<RecoveryStep<T>>,
}

/// Sweep gain until a sliding event appears with an acceptable artefact ratio.
///
/// `tracking` supplies the relative floor and jump limit; its absolute floor
/// is replaced by `rec.visibility_floor`.
pub fn recover_trace<T: Real>(
    spec: &Spectrogram<T>,
    seg: &SegmentationParams<T>,
    rec: &RecoveryParams<T>,
    tracking: &TrackingParams<T>,
) -> RecoveryResult<T> {
    let params = TrackingParams { absolute_floor: rec.visibility_floor, ..tracking.clone() };
    let gains = rec.gains();
    let mut diagnostics = Vec::with_capacity(gains.len());
    for &g in &gains {
        let lifted = spec.apply_gain(g);
        let track = track_pitch(&lifted, &params);
        let s = segment(&track, seg);
        let n = track.len().max(1);
        let artefact_ratio = s.stray_voiced_fraction(&track);
        let sliding = s.events.iter().filter(|e| e.kind == EventKind::Sliding).count();
        diagnostics.push(RecoveryStep {
            gain_db: g,
            voiced_fraction: T::from_usize_lossy(track.voiced_count()) / T::from_usize_lossy(n),
            artefact_ratio,
            sliding_events: sliding,
            clean_shifts: s.events.len() - sliding,
        });
        if sliding > 0 && artefact_ratio <= rec.artefact_ratio_max {
            return RecoveryResult { gain_used_db: g, recovered: true, events: s.events, diagnostics };
        }
    }
    RecoveryResult {
        gain_used_db: gains.last().copied().unwrap_or(T::zero()),
        recovered: false,
        events: Vec::new(),
        diagnostics,
    }
}
