//! Ingest to events in one call.

use serde::{Deserialize, Serialize};

use crate::audio::SampleBuffer;
use crate::error::Result;
use crate::events::{segment, SegmentationParams, TransitionEvent};
use crate::pitchtrack::{track_pitch, PitchTrack, TrackingParams};
use crate::refine::refine_slide;
use crate::recovery::{recover_trace, RecoveryParams, RecoveryResult};
use crate::scalar::Real;
use crate::spectro::{compute_spectrogram, SpectroConfig, Spectrogram};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig<T> {
    pub spectro: SpectroConfig<T>,
    pub tracking: TrackingParams<T>,
    pub segmentation: SegmentationParams<T>,
    /// Route through the gain sweep when set.
    pub recovery: Option<RecoveryParams<T>>,
    /// Fit slide endpoints by analysis-by-synthesis after segmentation.
    pub refine_slides: bool,
}

impl<T: Real> Default for AnalysisConfig<T> {
    fn default() -> Self {
        AnalysisConfig {
            spectro: SpectroConfig::default(),
            tracking: TrackingParams::default(),
            segmentation: SegmentationParams::default(),
            recovery: None,
            refine_slides: true,
        }
    }
}

impl<T: Real> AnalysisConfig<T> {
    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        self.spectro.validate(sample_rate)?;
        self.segmentation.validate().map_err(crate::error::Error::InvalidConfig)?;
        if let Some(r) = &self.recovery {
            r.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Analysis<T> {
    pub spectrogram: Spectrogram<T>,
    /// Track at the gain that produced `events`.
    pub track: PitchTrack<T>,
    pub events: Vec<TransitionEvent<T>>,
    pub recovery: Option<RecoveryResult<T>>,
}

pub fn analyze_buffer<T: Real>(buffer: &SampleBuffer<T>, cfg: &AnalysisConfig<T>) -> Result<Analysis<T>> {
    cfg.validate(buffer.sample_rate())?;
    let spectrogram = compute_spectrogram(buffer, &cfg.spectro)?;
    let mut analysis = run(spectrogram, cfg)?;
    if cfg.refine_slides {
        let sr = buffer.sample_rate();
        let min = cfg.segmentation.clean_shift_max_s;
        let refined = analysis
            .events
            .iter()
            .map(|e| refine_slide(e, &analysis.track, &cfg.spectro, sr, min))
            .collect::<Result<Vec<_>>>()?;
        if let Some(r) = analysis.recovery.as_mut() {
            r.events = refined.clone();
        }
        analysis.events = refined;
    }
    Ok(analysis)
}

fn run<T: Real>(spectrogram: Spectrogram<T>, cfg: &AnalysisConfig<T>) -> Result<Analysis<T>> {
    match &cfg.recovery {
        None => {
            let track = track_pitch(&spectrogram, &cfg.tracking);
            let events = segment(&track, &cfg.segmentation).events;
            Ok(Analysis { spectrogram, track, events, recovery: None })
        }
        Some(rec) => {
            let result = recover_trace(&spectrogram, &cfg.segmentation, rec, &cfg.tracking);
            let tracking = TrackingParams { absolute_floor: rec.visibility_floor, ..cfg.tracking.clone() };
            let track = track_pitch(&spectrogram.apply_gain(result.gain_used_db), &tracking);
            Ok(Analysis { spectrogram, track, events: result.events.clone(), recovery: Some(result) })
        }
    }
}
