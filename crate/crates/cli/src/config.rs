//! `key=value` config files merged into the argument list ahead of explicit flags.
use std::ffi::OsString;
use std::path::Path;

const GLOBAL_KEYS: [&str; 4] = ["out-dir", "threads", "seed", "verbose"];
const SUBCOMMANDS: [&str; 6] = ["field", "trace", "invariants", "evolve", "spectra", "check"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", no + 1))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if k.is_empty() {
            return Err(format!("config line {}: empty key", no + 1));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn flags(entries: &[(String, String)]) -> Vec<OsString> {
    entries
        .iter()
        .filter_map(|(k, v)| match v.as_str() {
            "true" => Some(format!("--{k}")),
            "false" => None,
            _ => Some(format!("--{k}={v}")),
        })
        .map(OsString::from)
        .collect()
}

/// Splices config entries into `args`: global keys right after the program
/// name, the rest right after the subcommand, so explicit flags override them.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let entries = parse(&text)?;
    let (global, local): (Vec<_>, Vec<_>) = entries
        .into_iter()
        .partition(|(k, _)| GLOBAL_KEYS.contains(&k.as_str()));
    let sub = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()));
    let mut out = Vec::with_capacity(args.len() + global.len() + local.len());
    out.push(args[0].clone());
    out.extend(flags(&global));
    match sub {
        Some(i) => {
            out.extend(args[1..=i].iter().cloned());
            out.extend(flags(&local));
            out.extend(args[i + 1..].iter().cloned());
        }
        None => out.extend(args[1..].iter().cloned()),
    }
    Ok(out)
}
