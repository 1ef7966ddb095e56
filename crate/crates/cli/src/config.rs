//! Folding a TOML/JSON config file into the argument list.
//!
//! Config values become ordinary `--flag value` arguments inserted right
//! after the subcommand name, skipping any flag the user already passed, so
//! clap validates them like everything else.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{ArgAction, CommandFactory};
use serde_json::{Map, Value};

use crate::args::Cli;

fn load_table(path: &Path) -> Result<Map<String, Value>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    let value: Value = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?
    } else {
        let t: toml::Table = toml::from_str(&text).with_context(|| format!("cannot parse {}", path.display()))?;
        serde_json::to_value(t)?
    };
    match value {
        Value::Object(m) => Ok(m),
        _ => bail!("config {} must be a table", path.display()),
    }
}

/// The `--config` value, if any, from raw arguments.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--" {
            return None;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn scalar(key: &str, v: &Value) -> Result<String> {
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        _ => bail!("config key {key:?} must be a string, number or boolean"),
    })
}

fn user_flags(args: &[OsString], from: usize) -> Vec<String> {
    args[from..]
        .iter()
        .map(|a| a.to_string_lossy())
        .take_while(|a| a != "--")
        .filter_map(|a| {
            a.strip_prefix("--")
                .map(|f| f.split('=').next().unwrap_or("").to_string())
        })
        .collect()
}

/// Returns `args` with config-file values spliced in.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let table = load_table(Path::new(&path))?;
    let root = Cli::command();
    let Some(pos) = args.iter().position(|a| {
        let a = a.to_string_lossy();
        root.get_subcommands().any(|s| s.get_name() == a)
    }) else {
        return Ok(args);
    };
    let name = args[pos].to_string_lossy().to_string();
    let sub = root.find_subcommand(&name).expect("found above");
    let given = user_flags(&args, pos + 1);

    // Subcommand tables override top-level keys.
    let subcommand_names: Vec<&str> = root.get_subcommands().map(|s| s.get_name()).collect();
    let mut entries: Vec<(String, Value, bool)> = Vec::new();
    for (k, v) in &table {
        let key = k.replace('_', "-");
        if subcommand_names.contains(&key.as_str()) {
            if key == name {
                let Value::Object(m) = v else {
                    bail!("config section [{k}] must be a table");
                };
                entries.extend(m.iter().map(|(k, v)| (k.replace('_', "-"), v.clone(), true)));
            }
        } else if key != "config" {
            entries.push((key, v.clone(), false));
        }
    }
    entries.sort_by(|a, b| (&a.0, a.2).cmp(&(&b.0, b.2)));
    let mut chosen: Vec<(String, Value)> = Vec::new();
    for (key, v, scoped) in entries {
        let known = sub.get_arguments().any(|a| a.get_long() == Some(key.as_str()));
        if !known {
            if scoped {
                bail!("config section [{name}] sets unknown flag --{key}");
            }
            continue;
        }
        chosen.retain(|(k, _)| *k != key);
        chosen.push((key, v));
    }

    let mut injected: Vec<OsString> = Vec::new();
    for (key, v) in chosen {
        if given.contains(&key) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| anyhow!("unknown flag --{key}"))?;
        match arg.get_action() {
            ArgAction::SetTrue => match v {
                Value::Bool(true) => injected.push(format!("--{key}").into()),
                Value::Bool(false) => {}
                _ => bail!("config key {key:?} must be a boolean"),
            },
            _ => {
                let values = match &v {
                    Value::Array(items) => items.iter().map(|i| scalar(&key, i)).collect::<Result<Vec<_>>>()?,
                    other => vec![scalar(&key, other)?],
                };
                for value in values {
                    injected.push(format!("--{key}").into());
                    injected.push(value.into());
                }
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
