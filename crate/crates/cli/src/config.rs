//! `key = value` configuration files merged beneath command-line flags.

use std::ffi::OsString;
use std::path::Path;

use clap::parser::ValueSource;
use clap::{ArgMatches, CommandFactory};

use crate::args::Cli;
use crate::CliError;

/// Parses a flat `key = value` file. Blank lines and `#` comments are
/// ignored; a value may be wrapped in double quotes.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
        let key = key.trim().trim_start_matches("--");
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .unwrap_or(value);
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

/// Appends every file setting the user did not give on the command line to
/// `argv`, as the matching long flag.
pub fn merge(
    argv: &[OsString],
    matches: &ArgMatches,
    path: &Path,
) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("cannot read config {}: {e}", path.display())))?;
    let entries =
        parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let Some((name, sub_matches)) = matches.subcommand() else {
        return Ok(argv.to_vec());
    };
    let mut cmd = Cli::command();
    cmd.build();
    let sub = cmd
        .find_subcommand(name)
        .expect("parsed subcommand exists")
        .clone();
    let mut out = argv.to_vec();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| {
                a.get_long() == Some(key.as_str())
                    || a.get_all_aliases()
                        .is_some_and(|al| al.contains(&key.as_str()))
            })
            .filter(|a| a.get_id() != "config")
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "{}: unknown key {key:?} for `{name}`",
                    path.display()
                ))
            })?;
        let id = arg.get_id().as_str();
        let from_cli = |m: &ArgMatches| {
            m.try_contains_id(id).unwrap_or(false)
                && m.value_source(id) == Some(ValueSource::CommandLine)
        };
        if from_cli(sub_matches) || from_cli(matches) {
            continue;
        }
        let long = format!("--{}", arg.get_long().expect("looked up by long name"));
        if arg.get_action().takes_values() {
            out.push(long.into());
            out.push(value.into());
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => out.push(long.into()),
                "false" | "no" | "0" | "off" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "{}: key {key:?} expects true or false, got {other:?}",
                        path.display()
                    )))
                }
            }
        }
    }
    Ok(out)
}
