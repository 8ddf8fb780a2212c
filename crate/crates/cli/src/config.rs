//! Merging a JSON config file into the command line.

use std::ffi::OsString;

use clap::parser::ValueSource;
use clap::CommandFactory;

use crate::Cli;

pub enum ParseError {
    Clap(clap::Error),
    Config(String),
}

/// Parses `argv`. When the subcommand carries `--config FILE`, every key of
/// the JSON object in `FILE` that names a flag not given on the command
/// line is appended as `--key value`.
pub fn parse(argv: Vec<OsString>) -> Result<Cli, ParseError> {
    let cmd = Cli::command();
    // Lenient pass: required flags may come from the config file.
    let lenient = cmd.clone().ignore_errors(true).try_get_matches_from(&argv);
    let strict = |argv: Vec<OsString>| <Cli as clap::Parser>::try_parse_from(argv).map_err(ParseError::Clap);
    let Ok(matches) = lenient else {
        return strict(argv);
    };
    let Some((name, sub)) = matches.subcommand() else {
        return strict(argv);
    };
    let Some(path) = sub.try_get_one::<std::path::PathBuf>("config").ok().flatten() else {
        return strict(argv);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| ParseError::Config(format!("config {}: {e}", path.display())))?;
    let json: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&text)
        .map_err(|e| ParseError::Config(format!("config {}: {e}", path.display())))?;
    let sub_cmd = cmd
        .find_subcommand(name)
        .expect("matched subcommand exists");
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in json {
        let id = key.replace('-', "_");
        let arg = sub_cmd
            .get_arguments()
            .find(|a| a.get_id().as_str() == id)
            .ok_or_else(|| ParseError::Config(format!("config key `{key}` is not a flag of `{name}`")))?;
        if id == "config" || sub.value_source(&id) == Some(ValueSource::CommandLine) {
            continue;
        }
        let flag = format!("--{}", arg.get_long().unwrap_or(&id));
        match value {
            serde_json::Value::Bool(true) => extra.push(flag.into()),
            serde_json::Value::Bool(false) | serde_json::Value::Null => {}
            serde_json::Value::String(s) => {
                extra.push(flag.into());
                extra.push(s.into());
            }
            serde_json::Value::Number(n) => {
                extra.push(flag.into());
                extra.push(n.to_string().into());
            }
            other => {
                return Err(ParseError::Config(format!(
                    "config key `{key}`: unsupported value {other}"
                )));
            }
        }
    }
    let mut merged = argv;
    merged.extend(extra);
    strict(merged)
}
