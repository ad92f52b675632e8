mod analyze;
mod args;
mod config;
mod error;
mod measure;
mod plot;
mod regress;
mod synth;

use clap::{CommandFactory, FromArgMatches};

use crate::args::{Cli, Cmd};
use crate::error::{CliError, CliResult};

fn run() -> CliResult<()> {
    let cmd = Cli::command();
    let argv = config::apply(&cmd, std::env::args_os().collect())?;
    let matches = match cmd.clone().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(CliError::Usage(e.render().to_string().trim_end().to_string()));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| CliError::Usage(e.to_string()))?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand is required");
    let echo = config::echo(cmd.find_subcommand(name).expect("parsed subcommand exists"), sub_matches);
    match cli.command {
        Cmd::Analyze(a) => analyze::run(&a, echo),
        Cmd::Recover(mut a) => {
            a.recover = true;
            let mut echo = echo;
            echo.insert("recover".into(), "true".into());
            analyze::run(&a, echo)
        }
        Cmd::Measure(m) => measure::run(&m),
        Cmd::Synth(s) => synth::run(&s),
        Cmd::Regress(r) => regress::run_regress(&r),
        Cmd::Era(e) => regress::run_era(&e),
    }
}

fn main() {
    if let Err(e) = run() {
        match &e {
            CliError::Reported(_) => {}
            CliError::Usage(m) if m.starts_with("error:") => eprintln!("{m}"),
            _ => eprintln!("error: {e}"),
        }
        std::process::exit(e.exit_code());
    }
}

#[cfg(test)]
mod tests {
    use clap::Parser;

    use super::*;

    fn analyze_args(extra: &[&str]) -> args::AnalyzeArgs {
        let mut argv = vec!["portagrad", "analyze", "x.wav"];
        argv.extend_from_slice(extra);
        match Cli::parse_from(argv).command {
            Cmd::Analyze(a) => a,
            other => panic!("parsed {other:?}"),
        }
    }

    #[test]
    fn flag_defaults_match_library_defaults() {
        assert_eq!(analyze_args(&[]).analysis_config(), portagrad::AnalysisConfig::<f64>::default());
        let rec = analyze_args(&["--recover"]).analysis_config().recovery.unwrap();
        assert_eq!(rec, portagrad::RecoveryParams::default());
    }

    #[test]
    fn later_flags_override_earlier_ones() {
        assert_eq!(analyze_args(&["--window-size", "1024", "--window-size", "4096"]).window_size, 4096);
    }

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
