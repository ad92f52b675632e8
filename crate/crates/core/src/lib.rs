//! Portamento detection and calibrated gradient measurement.
//!
//! The pipeline runs audio ingest, a magnitude spectrogram, dominant-peak
//! pitch tracking and plateau/transition segmentation. Each detected glide
//! gets a gradient in Hz/s. Alongside it live the pixel calibration math
//! for exported spectrogram images, a gain-sweep recovery protocol for
//! faint traces, a synthetic-signal oracle and the corpus statistics.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar for the common case.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audio;
pub mod calibration;
pub mod corpus;
pub mod error;
pub mod events;
pub mod pipeline;
pub mod pitchtrack;
pub mod recovery;
pub mod refine;
pub mod scalar;
pub mod spectro;
pub mod synth;

pub use audio::{load_audio, write_wav, SampleBuffer};
pub use calibration::{
    calibrate_gradient, make_calibration, measure_from_pixels, pixel_gradient, CalibrationParams, PixelPoint,
};
pub use corpus::{
    era_summary, gradient_vs_tempo, gradient_vs_year, linear_regression, load_corpus, save_corpus, CorpusRecord,
    EraSummary, RegressionResult, Sonata,
};
pub use error::{Error, Result};
pub use events::{
    classify_event, event_gradient, segment_events, Direction, EventKind, SegmentationParams, TransitionEvent,
};
pub use pipeline::{analyze_buffer, Analysis, AnalysisConfig};
pub use pitchtrack::{track_pitch, PitchTrack, TrackingParams};
pub use recovery::{recover_trace, RecoveryParams, RecoveryResult};
pub use scalar::Real;
pub use spectro::{apply_gain, compute_spectrogram, SpectroConfig, Spectrogram, WindowKind};
pub use synth::{synth_glide, synth_step, GlideSpec, GlideTruth, StepSpec, Timbre};

pub type SampleBuffer64 = SampleBuffer<f64>;
pub type SampleBuffer32 = SampleBuffer<f32>;
pub type Spectrogram64 = Spectrogram<f64>;
pub type Spectrogram32 = Spectrogram<f32>;
pub type PitchTrack64 = PitchTrack<f64>;
pub type PitchTrack32 = PitchTrack<f32>;
pub type TransitionEvent64 = TransitionEvent<f64>;
pub type TransitionEvent32 = TransitionEvent<f32>;
pub type CalibrationParams64 = CalibrationParams<f64>;
pub type CalibrationParams32 = CalibrationParams<f32>;
pub type GlideSpec64 = GlideSpec<f64>;
pub type AnalysisConfig64 = AnalysisConfig<f64>;
pub type RegressionResult64 = RegressionResult<f64>;
