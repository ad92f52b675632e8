use std::path::Path;

use portagrad::corpus::{default_eras, parse_eras, CorpusRegression, Era};
use portagrad::{era_summary, gradient_vs_tempo, gradient_vs_year, load_corpus, CorpusRecord, EraSummary};
use serde::Serialize;

use crate::args::{EraArgs, EraFlags, RegressArgs, RegressMode};
use crate::error::{CliError, CliResult};
use crate::plot;

#[derive(Debug, Serialize)]
struct RegressReport<'a> {
    corpus: String,
    mode: &'static str,
    records: usize,
    #[serde(flatten)]
    fit: &'a CorpusRegression,
    #[serde(skip_serializing_if = "Option::is_none")]
    eras: Option<Vec<EraSummary>>,
}

fn load(path: &Path) -> CliResult<Vec<CorpusRecord>> {
    load_corpus(path).map_err(|e| CliError::at(path, e))
}

fn eras(flags: &EraFlags) -> CliResult<Vec<Era>> {
    match &flags.eras {
        Some(s) => parse_eras(s).map_err(|e| CliError::Usage(format!("--eras: {e}"))),
        None => Ok(default_eras()),
    }
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn run_regress(args: &RegressArgs) -> CliResult<()> {
    let records = load(&args.corpus)?;
    let (mode, x_label) = match args.mode {
        RegressMode::Tempo => ("tempo", "bpm"),
        RegressMode::Year => ("year", "year"),
    };
    let fit = match args.mode {
        RegressMode::Tempo => gradient_vs_tempo(&records),
        RegressMode::Year => gradient_vs_year(&records),
    }
    .map_err(|e| CliError::at(&args.corpus, e))?;
    let summary = if args.era_summary {
        let eras = eras(&args.eras)?;
        Some(era_summary(&records, &eras, args.eras.include_empty).map_err(CliError::from_core)?)
    } else {
        None
    };
    if let Some(p) = &args.plot_csv {
        write(p, &plot::csv(x_label, &fit.points))?;
    }
    if let Some(p) = &args.plot_svg {
        write(p, &plot::svg(x_label, &fit.points, &fit.regression))?;
    }
    let report = RegressReport {
        corpus: args.corpus.display().to_string(),
        mode,
        records: records.len(),
        fit: &fit,
        eras: summary,
    };
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    Ok(())
}

pub fn run_era(args: &EraArgs) -> CliResult<()> {
    let records = load(&args.corpus)?;
    let eras = eras(&args.eras)?;
    let rows = era_summary(&records, &eras, args.eras.include_empty).map_err(CliError::from_core)?;
    println!("{}", serde_json::to_string(&rows).expect("summary serializes"));
    Ok(())
}
