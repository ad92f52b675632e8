use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read audio file {path}: {source}")]
    AudioUnreadable {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("unsupported audio encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("audio file {path} contains no samples")]
    EmptyAudio { path: PathBuf },

    #[error("cannot write audio file {path}: {source}")]
    AudioWrite {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },

    #[error("buffer of {len} samples is shorter than one window ({window} samples)")]
    BufferTooShort { len: usize, window: usize },

    #[error("no frequency bins fall inside {min} to {max} Hz")]
    EmptyBand { min: f64, max: f64 },

    #[error("invalid spectrogram configuration: {0}")]
    InvalidConfig(String),

    #[error("duration must be positive, got {0} s")]
    NonPositiveDuration(f64),

    #[error("slide termination must follow onset: horizontal span {dx} px is not positive")]
    NonPositiveSpan { dx: f64 },

    #[error("invalid calibration: {0}")]
    InvalidCalibration(String),

    #[error("pixel gradient must be non-negative, got {0}")]
    NegativeGradient(f64),

    #[error("invalid synthesis parameters: {0}")]
    InvalidSynth(String),

    #[error("corpus {path}: header mismatch: expected `{expected}`, found `{found}`")]
    CorpusHeader {
        path: PathBuf,
        expected: String,
        found: String,
    },

    #[error("corpus {path}, row {row}: {reason}")]
    CorpusRow {
        path: PathBuf,
        row: usize,
        reason: String,
    },

    #[error("invalid corpus record: {0}")]
    InvalidRecord(String),

    #[error("corpus {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("image {path}: {reason}")]
    Image { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("regression needs at least 2 points, got {0}")]
    TooFewPoints(usize),

    #[error("regression is degenerate: all x values are equal")]
    DegenerateX,

    #[error("no portamento-present subset: fewer than 2 sliding events ({0} found)")]
    NoSlidingSubset(usize),

    #[error("invalid era bounds: {0}")]
    InvalidEras(String),
}
