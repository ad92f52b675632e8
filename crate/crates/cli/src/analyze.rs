use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use portagrad::corpus::append_corpus;
use portagrad::events::TransitionEvent;
use portagrad::spectro::image::{render, write_pgm, ImageGeometry};
use portagrad::{
    analyze_buffer, compute_spectrogram, load_audio, Analysis, AnalysisConfig, CalibrationParams, CorpusRecord,
    EventKind, RecoveryResult, Sonata, SpectroConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::AnalyzeArgs;
use crate::error::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub input: String,
    /// Resolved flags in config-file vocabulary.
    pub config: BTreeMap<String, String>,
    pub resolved: AnalysisConfig<f64>,
    pub sample_rate: u32,
    pub duration_s: f64,
    pub events: Vec<TransitionEvent<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery: Option<RecoveryResult<f64>>,
    /// Wall-clock metadata; the only part that varies between runs.
    pub timing: Timing,
}

#[derive(Debug, Serialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

/// Output path for one input: the path itself for a single input, else a
/// file named after the input inside the directory `base`.
fn output_for(base: &Path, input: &Path, ext: &str, many: bool) -> PathBuf {
    if many || base.is_dir() {
        let stem = input.file_stem().map(|s| s.to_os_string()).unwrap_or_else(|| "out".into());
        base.join(stem).with_extension(ext)
    } else {
        base.to_path_buf()
    }
}

/// Analysis with the buffer's sample rate and duration.
type Loaded = (Analysis<f64>, u32, f64);

fn analyze_one(path: &Path, args: &AnalyzeArgs, cfg: &AnalysisConfig<f64>, many: bool) -> CliResult<Loaded> {
    let buffer = load_audio::<f64>(path, args.sample_rate).map_err(|e| CliError::at(path, e))?;
    let analysis = analyze_buffer(&buffer, cfg).map_err(|e| CliError::at(path, e))?;
    if let Some(base) = &args.pgm {
        let overtone = compute_spectrogram(&buffer, &SpectroConfig::overtone_display()).map_err(|e| CliError::at(path, e))?;
        let geom = ImageGeometry { start_time: args.pgm_start, ..ImageGeometry::overtone_display() };
        let out = output_for(base, path, "pgm", many);
        write_pgm(&render(&overtone, &geom), &out).map_err(|e| CliError::at(&out, e))?;
    }
    if let Some(base) = &args.track_csv {
        let out = output_for(base, path, "csv", many);
        let file = std::fs::File::create(&out).map_err(|e| CliError::io(&out, e))?;
        analysis.track.write_csv(std::io::BufWriter::new(file)).map_err(|e| CliError::io(&out, e))?;
    }
    Ok((analysis, buffer.sample_rate(), buffer.duration_seconds()))
}

fn corpus_records(args: &AnalyzeArgs, events: &[TransitionEvent<f64>]) -> CliResult<Vec<CorpusRecord>> {
    let (Some(performer), Some(year), Some(bpm)) = (&args.performer, args.year, args.bpm) else {
        return Err(CliError::Usage("--corpus needs --performer, --year and --bpm".into()));
    };
    let factor = CalibrationParams::<f64>::default().factor;
    events
        .iter()
        .map(|e| {
            let g = if e.kind == EventKind::Sliding { e.gradient_hz_per_s } else { 0.0 };
            let r = CorpusRecord {
                performer: performer.clone(),
                year,
                sonata: Sonata::parse(&args.sonata),
                bar: args.bar,
                kind: e.kind,
                gradient_px: g / factor,
                gradient_hz_s: g,
                duration_s: e.duration_s,
                bpm,
            };
            r.validate().map(|_| r).map_err(|m| CliError::Usage(format!("corpus record: {m}")))
        })
        .collect()
}

/// Run every input and print one JSON report per line, in input order.
pub fn run(args: &AnalyzeArgs, config: BTreeMap<String, String>) -> CliResult<()> {
    let cfg = args.analysis_config();
    cfg.validate(args.sample_rate.unwrap_or(44_100)).map_err(CliError::from_core)?;
    let many = args.inputs.len() > 1;
    for base in [&args.pgm, &args.track_csv].into_iter().flatten() {
        if many {
            std::fs::create_dir_all(base).map_err(|e| CliError::io(base, e))?;
        }
    }
    let work = || -> Vec<(CliResult<Loaded>, f64)> {
        args.inputs
            .par_iter()
            .map(|p| {
                let t = Instant::now();
                let r = analyze_one(p, args, &cfg, many);
                (r, t.elapsed().as_secs_f64() * 1e3)
            })
            .collect()
    };
    let results = match args.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Usage(format!("--jobs: {e}")))?
            .install(work),
        None => work(),
    };

    // Every failure is reported; the first one decides the exit code.
    let mut first: Option<i32> = None;
    let mut keep = |e: CliError| {
        eprintln!("error: {e}");
        first.get_or_insert(e.exit_code());
    };
    for (path, (result, elapsed_ms)) in args.inputs.iter().zip(results) {
        let (analysis, sample_rate, duration_s) = match result {
            Ok(r) => r,
            Err(e) => {
                keep(e);
                continue;
            }
        };
        if let Some(corpus) = &args.corpus {
            match corpus_records(args, &analysis.events) {
                Ok(records) => {
                    if let Err(e) = append_corpus(&records, corpus) {
                        keep(CliError::at(corpus, e));
                    }
                }
                Err(e) => keep(e),
            }
        }
        let exhausted = analysis.recovery.as_ref().is_some_and(|r| !r.recovered);
        let report = AnalysisReport {
            input: path.display().to_string(),
            config: config.clone(),
            resolved: cfg.clone(),
            sample_rate,
            duration_s,
            events: analysis.events,
            recovery: analysis.recovery,
            timing: Timing { elapsed_ms },
        };
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
        if exhausted {
            keep(CliError::Analysis(format!(
                "{}: no sliding trace recovered up to {} dB of gain",
                path.display(),
                args.max_gain_db
            )));
        }
    }
    first.map_or(Ok(()), |code| Err(CliError::Reported(code)))
}
