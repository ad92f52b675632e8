use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or flag values.
    #[error("{0}")]
    Usage(String),

    /// Unreadable or malformed input files.
    #[error("{0}")]
    Input(String),

    /// The inputs were fine but the analysis could not produce a result.
    #[error("{0}")]
    Analysis(String),

    /// Already printed; carries the exit code of the original failure.
    #[error("")]
    Reported(i32),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 3,
            CliError::Reported(code) => *code,
        }
    }

    /// Sort a library error by who is at fault.
    pub fn from_core(e: portagrad::Error) -> Self {
        use portagrad::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidConfig(_)
            | E::InvalidCalibration(_)
            | E::NonPositiveSpan { .. }
            | E::NegativeGradient(_)
            | E::NonPositiveDuration(_)
            | E::InvalidSynth(_)
            | E::InvalidEras(_)
            | E::InvalidRecord(_) => CliError::Usage(msg),
            E::NoSlidingSubset(_) | E::TooFewPoints(_) | E::DegenerateX => CliError::Analysis(msg),
            _ => CliError::Input(msg),
        }
    }

    /// Same as [`CliError::from_core`], naming `path` when the message does not.
    pub fn at(path: &Path, e: portagrad::Error) -> Self {
        let shown = path.display().to_string();
        let prefix = |m: String| if m.contains(&shown) { m } else { format!("{shown}: {m}") };
        match CliError::from_core(e) {
            CliError::Usage(m) => CliError::Usage(prefix(m)),
            CliError::Input(m) => CliError::Input(prefix(m)),
            CliError::Analysis(m) => CliError::Analysis(prefix(m)),
            reported => reported,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;
