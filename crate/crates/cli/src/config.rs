//! `key=value` config files, spliced into the argument list ahead of the
//! command-line flags so that explicit flags override them.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Turns config file text into `--key value` arguments. `true`/`false` values
/// toggle boolean flags.
pub fn config_to_args(text: &str, origin: &Path) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!(
                "{}:{}: expected key=value",
                origin.display(),
                i + 1
            ))
        })?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(CliError::config(format!(
                "{}:{}: bad key `{key}`",
                origin.display(),
                i + 1
            )));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

/// Removes `--config FILE` from `argv` and inserts the file's flags right after
/// the subcommand name.
pub fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut config = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            let path = it
                .next()
                .ok_or_else(|| CliError::config("--config needs a file"))?;
            config = Some(path);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = config else {
        return Ok(rest);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let extra = config_to_args(&text, path)?;
    // argv[0] is the binary, the first bare word after it the subcommand
    let sub = rest
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(rest.len(), |p| p + 2);
    let tail = rest.split_off(sub.min(rest.len()));
    rest.extend(extra);
    rest.extend(tail);
    Ok(rest)
}
