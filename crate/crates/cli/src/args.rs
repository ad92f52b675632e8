use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use portagrad::{AnalysisConfig, RecoveryParams, SegmentationParams, SpectroConfig, TrackingParams, WindowKind};

#[derive(Debug, Parser)]
#[command(name = "portagrad", version, about = "Detect portamento glides and measure their gradient in Hz/s")]
pub struct Cli {
    /// Config file of `key = value` lines (defaults: $PORTAGRAD_CONFIG, then ./portagrad.conf).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Detect transitions in WAV files and report them as JSON lines.
    #[command(args_override_self = true)]
    Analyze(AnalyzeArgs),
    /// Same as `analyze --recover`.
    #[command(args_override_self = true)]
    Recover(AnalyzeArgs),
    /// Gradient from two pixel positions on an exported spectrogram.
    #[command(args_override_self = true)]
    Measure(MeasureArgs),
    /// Write a synthetic test signal and its ground truth.
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Regress gradient on tempo or recording year.
    #[command(args_override_self = true)]
    Regress(RegressArgs),
    /// Per-era gradient summary.
    #[command(args_override_self = true)]
    Era(EraArgs),
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// WAV files; reports follow this order.
    #[arg(required = true, value_name = "WAV")]
    pub inputs: Vec<PathBuf>,

    /// Resample to this rate before analysis.
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<u32>,
    /// Worker threads (default: one per core).
    #[arg(long)]
    pub jobs: Option<usize>,

    #[arg(long, default_value_t = 2048, help_heading = "Spectrogram")]
    pub window_size: usize,
    #[arg(long, default_value_t = 128, help_heading = "Spectrogram")]
    pub hop_size: usize,
    #[arg(long, default_value = "hann", value_parser = parse_window, help_heading = "Spectrogram")]
    pub window_kind: WindowKind,
    #[arg(long, default_value_t = 60.0, help_heading = "Spectrogram")]
    pub freq_min: f64,
    #[arg(long, default_value_t = 1400.0, help_heading = "Spectrogram")]
    pub freq_max: f64,
    /// Upper bound on seconds per frame; 0 keeps the hop as given.
    #[arg(long, default_value_t = 0.0042, help_heading = "Spectrogram")]
    pub time_res: f64,

    #[arg(long, default_value_t = 1e-4, help_heading = "Tracking")]
    pub absolute_floor: f64,
    #[arg(long, default_value_t = 6.0, help_heading = "Tracking")]
    pub relative_floor: f64,
    #[arg(long, default_value_t = 1.0 / 3.0, help_heading = "Tracking")]
    pub max_jump_octaves: f64,

    #[arg(long, default_value_t = 35.0, help_heading = "Segmentation")]
    pub plateau_tol_cents: f64,
    #[arg(long, default_value_t = 0.08, help_heading = "Segmentation")]
    pub min_plateau_s: f64,
    #[arg(long, default_value_t = 70.0, help_heading = "Segmentation")]
    pub min_interval_cents: f64,
    #[arg(long, default_value_t = 0.05, help_heading = "Segmentation")]
    pub clean_shift_max_s: f64,
    #[arg(long, default_value_t = 4.0, help_heading = "Segmentation")]
    pub vibrato_rate_hz: f64,
    #[arg(long, default_value_t = 1.0, help_heading = "Segmentation")]
    pub max_transition_s: f64,
    /// Keep the line-fit endpoints instead of refining them against a model.
    #[arg(long, help_heading = "Segmentation")]
    pub no_refine: bool,

    /// Sweep gain until a faint trace clears the visibility floor.
    #[arg(long, help_heading = "Recovery")]
    pub recover: bool,
    #[arg(long, default_value_t = 3.0, help_heading = "Recovery")]
    pub step_db: f64,
    #[arg(long, default_value_t = 15.0, help_heading = "Recovery")]
    pub max_gain_db: f64,
    #[arg(long, default_value_t = 1e-3, help_heading = "Recovery")]
    pub visibility_floor: f64,
    #[arg(long, default_value_t = 0.25, help_heading = "Recovery")]
    pub artefact_ratio_max: f64,

    /// Append every event to this corpus CSV.
    #[arg(long, value_name = "CSV", requires_all = ["performer", "year", "bpm"], help_heading = "Corpus")]
    pub corpus: Option<PathBuf>,
    #[arg(long, help_heading = "Corpus")]
    pub performer: Option<String>,
    #[arg(long, help_heading = "Corpus")]
    pub year: Option<i32>,
    #[arg(long, default_value = "op69", help_heading = "Corpus")]
    pub sonata: String,
    #[arg(long, default_value_t = 1, help_heading = "Corpus")]
    pub bar: u32,
    #[arg(long, help_heading = "Corpus")]
    pub bpm: Option<f64>,

    /// Export the overtone display as PGM (a directory when several inputs are given).
    #[arg(long, value_name = "PATH", help_heading = "Outputs")]
    pub pgm: Option<PathBuf>,
    /// Start time of the exported image, seconds.
    #[arg(long, default_value_t = 0.0, help_heading = "Outputs")]
    pub pgm_start: f64,
    /// Write the pitch track as CSV (a directory when several inputs are given).
    #[arg(long, value_name = "PATH", help_heading = "Outputs")]
    pub track_csv: Option<PathBuf>,
}

fn parse_window(s: &str) -> Result<WindowKind, String> {
    s.parse()
}

impl AnalyzeArgs {
    pub fn analysis_config(&self) -> AnalysisConfig<f64> {
        let spectro = SpectroConfig {
            window_size: self.window_size,
            hop_size: self.hop_size,
            window_kind: self.window_kind,
            freq_min: self.freq_min,
            freq_max: self.freq_max,
            target_time_res: (self.time_res > 0.0).then_some(self.time_res),
        };
        let tracking = TrackingParams {
            absolute_floor: self.absolute_floor,
            relative_floor: self.relative_floor,
            max_jump_octaves: self.max_jump_octaves,
        };
        let segmentation = SegmentationParams {
            plateau_tol_cents: self.plateau_tol_cents,
            min_plateau_s: self.min_plateau_s,
            min_slide_interval_cents: self.min_interval_cents,
            clean_shift_max_s: self.clean_shift_max_s,
            vibrato_rate_min_hz: self.vibrato_rate_hz,
            max_transition_s: self.max_transition_s,
        };
        let recovery = self.recover.then_some(RecoveryParams {
            step_db: self.step_db,
            max_gain_db: self.max_gain_db,
            visibility_floor: self.visibility_floor,
            artefact_ratio_max: self.artefact_ratio_max,
        });
        AnalysisConfig { spectro, tracking, segmentation, recovery, refine_slides: !self.no_refine }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// Onset pixel `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub p1: (f64, f64),
    /// Termination pixel `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub p2: (f64, f64),
    /// Exported frequency range `lo:hi`, Hz.
    #[arg(long, default_value = "3600:11000", value_parser = parse_range)]
    pub range: (f64, f64),
    #[arg(long, default_value_t = 800.0)]
    pub height: f64,
    #[arg(long, default_value_t = 1200.0)]
    pub width: f64,
    /// Seconds spanned by the image width.
    #[arg(long, default_value_t = 5.0)]
    pub window: f64,
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(sep).ok_or_else(|| format!("expected {what}, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("`{v}` is not a number"));
    Ok((num(a)?, num(b)?))
}

fn parse_point(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s, ',', "x,y")
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s, ':', "lo:hi")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SignalKind {
    /// Hold, linear glide, hold.
    Glide,
    /// Tone, silent gap, tone.
    Step,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ramp {
    LinearHz,
    LinearCents,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// WAV to write.
    #[arg(long, value_name = "WAV")]
    pub out: PathBuf,
    /// Ground-truth JSON (default: next to the WAV with a .json extension).
    #[arg(long, value_name = "JSON")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SignalKind::Glide)]
    pub kind: SignalKind,
    #[arg(long, default_value_t = 220.0)]
    pub f_start: f64,
    #[arg(long, default_value_t = 261.6)]
    pub f_end: f64,
    #[arg(long, default_value_t = 0.2)]
    pub glide_s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub pre_hold_s: f64,
    #[arg(long, default_value_t = 0.5)]
    pub post_hold_s: f64,
    #[arg(long, value_enum, default_value_t = Ramp::LinearHz)]
    pub ramp: Ramp,
    /// Silence between the notes of a step.
    #[arg(long, default_value_t = 0.0)]
    pub gap_s: f64,
    /// Length of each note of a step.
    #[arg(long, default_value_t = 0.5)]
    pub hold_s: f64,
    #[arg(long, default_value_t = 4)]
    pub harmonics: usize,
    #[arg(long, default_value_t = 6.0)]
    pub rolloff_db: f64,
    #[arg(long, default_value_t = 0.0)]
    pub vibrato_cents: f64,
    #[arg(long, default_value_t = 5.5)]
    pub vibrato_rate: f64,
    /// Broadband SNR; omit for a noiseless signal.
    #[arg(long)]
    pub snr_db: Option<f64>,
    #[arg(long = "rate", default_value_t = 44_100)]
    pub sample_rate: u32,
    #[arg(long, default_value_t = 0.5)]
    pub amplitude: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegressMode {
    Tempo,
    Year,
}

#[derive(Debug, Clone, Args)]
pub struct RegressArgs {
    #[arg(value_name = "CSV")]
    pub corpus: PathBuf,
    #[arg(long, value_enum, default_value_t = RegressMode::Tempo)]
    pub mode: RegressMode,
    /// Two-column CSV of the fitted points.
    #[arg(long, value_name = "PATH")]
    pub plot_csv: Option<PathBuf>,
    /// Scatter plot with the fitted line.
    #[arg(long, value_name = "PATH")]
    pub plot_svg: Option<PathBuf>,
    /// Add the per-era table to the report.
    #[arg(long)]
    pub era_summary: bool,
    #[command(flatten)]
    pub eras: EraFlags,
}

#[derive(Debug, Clone, Args)]
pub struct EraFlags {
    /// Era bounds, e.g. `1930-1950,1950-1970`; each era excludes its end year except the last.
    #[arg(long)]
    pub eras: Option<String>,
    /// Keep eras with no sliding events.
    #[arg(long)]
    pub include_empty: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EraArgs {
    #[arg(value_name = "CSV")]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub eras: EraFlags,
}
