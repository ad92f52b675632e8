//! Flat `key = value` config files.
//!
//! Keys are long flag names without the dashes. Entries are spliced into the
//! argument list right after the subcommand, so anything given on the command
//! line wins. Keys that the chosen subcommand does not take are skipped;
//! keys no subcommand takes are an error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Command};

use crate::error::{CliError, CliResult};

pub const ENV_VAR: &str = "PORTAGRAD_CONFIG";
pub const DEFAULT_FILE: &str = "portagrad.conf";

/// Ordered `(key, value, line)` entries of a config file.
pub fn parse(text: &str, path: &Path) -> CliResult<Vec<(String, String, usize)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("{}:{}: expected `key = value`, got `{line}`", path.display(), i + 1)));
        };
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(CliError::Usage(format!("{}:{}: empty key", path.display(), i + 1)));
        }
        out.push((k.to_string(), v.trim().to_string(), i + 1));
    }
    Ok(out)
}

/// Config file to use: `--config`, then the environment, then `./portagrad.conf`
/// if present. The first two must exist.
fn locate(args: &[OsString]) -> CliResult<Option<PathBuf>> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return match it.next() {
                Some(p) => Ok(Some(PathBuf::from(p))),
                None => Ok(None), // clap reports the missing value
            };
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Ok(Some(PathBuf::from(p)));
        }
        if s == "--" {
            break;
        }
    }
    if let Some(p) = std::env::var_os(ENV_VAR).filter(|p| !p.is_empty()) {
        return Ok(Some(PathBuf::from(p)));
    }
    let default = PathBuf::from(DEFAULT_FILE);
    Ok(default.is_file().then_some(default))
}

fn subcommand_position(cmd: &Command, args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let s = args[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            return cmd.find_subcommand(s.as_ref()).map(|_| i);
        }
        i += 1;
    }
    None
}

fn takes_config(a: &clap::Arg) -> bool {
    a.get_long().is_some() && !a.is_positional() && !matches!(a.get_id().as_str(), "config" | "help" | "version")
}

/// Splice config-file entries into `args`.
pub fn apply(cmd: &Command, args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = locate(&args)? else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let entries = parse(&text, &path)?;
    let Some(pos) = subcommand_position(cmd, &args) else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(args[pos].to_string_lossy().as_ref()).expect("found above");
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value, line) in entries {
        let known_anywhere = cmd.get_subcommands().any(|s| s.get_arguments().any(|a| takes_config(a) && a.get_long() == Some(&key)));
        if !known_anywhere {
            return Err(CliError::Usage(format!("{}:{line}: unknown key `{key}`", path.display())));
        }
        let Some(arg) = sub.get_arguments().find(|a| takes_config(a) && a.get_long() == Some(&key)) else {
            continue;
        };
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            match value.as_str() {
                "true" | "yes" | "1" => injected.push(format!("--{key}").into()),
                "false" | "no" | "0" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "{}:{line}: `{key}` takes true or false, got `{other}`",
                        path.display()
                    )))
                }
            }
        } else {
            injected.push(format!("--{key}={value}").into());
        }
    }
    let mut out = args;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}

/// Every config-settable flag of `sub` with its resolved value, in config
/// file vocabulary. Feeding it back as a config file reproduces the run.
pub fn echo(sub: &Command, m: &ArgMatches) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for a in sub.get_arguments().filter(|a| takes_config(a)) {
        let id = a.get_id().as_str();
        let key = a.get_long().expect("checked by takes_config").to_string();
        if matches!(a.get_action(), ArgAction::SetTrue) {
            out.insert(key, m.get_flag(id).to_string());
        } else if let Some(mut vals) = m.get_raw(id) {
            if let Some(v) = vals.next_back() {
                out.insert(key, v.to_string_lossy().into_owned());
            }
        }
    }
    out
}
