//! Flat `key = value` config files, merged into argv as flags.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Parses `key = value` lines; blank lines and `#` comments are ignored.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected `key = value`, got `{line}`", i + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key `{}`", i + 1, k.trim());
        }
        out.push((key, v.trim().trim_matches('"').to_string()));
    }
    Ok(out)
}

/// Path given by `--config PATH` or `--config=PATH`, if any.
pub fn find_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

fn has_flag(argv: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&with_value)
    })
}

/// Appends config entries whose flag is absent from `argv`. `true` turns a
/// switch on and `false` leaves it off.
pub fn merge(mut argv: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let extra: Vec<OsString> = entries
        .iter()
        .filter(|(k, _)| !has_flag(&argv, k))
        .flat_map(|(k, v)| match v.as_str() {
            "true" => vec![format!("--{k}").into()],
            "false" => vec![],
            _ => vec![format!("--{k}").into(), v.into()],
        })
        .collect();
    argv.extend(extra);
    argv
}

pub fn load(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parses_flat_pairs() {
        let e = parse("# comment\n n = 100\nhist_bin_width=0.5\n\nout = \"run\"\n").unwrap();
        assert_eq!(e, vec![("n".into(), "100".into()), ("hist-bin-width".into(), "0.5".into()), ("out".into(), "run".into())]);
        assert!(parse("novalue\n").is_err());
        assert!(parse("config = x\n").is_err());
    }

    #[test]
    fn flags_win() {
        let argv = os(&["ratchet", "wf", "--n", "10", "--seed=3"]);
        let entries = parse("n = 99\nseed = 4\nlambda = 0.1\nsvg = true\nlog-x = false\n").unwrap();
        let merged = merge(argv, &entries);
        assert_eq!(merged, os(&["ratchet", "wf", "--n", "10", "--seed=3", "--lambda", "0.1", "--svg"]));
    }

    #[test]
    fn finds_path() {
        assert_eq!(find_path(&os(&["r", "wf", "--config", "a.cfg"])), Some("a.cfg".into()));
        assert_eq!(find_path(&os(&["r", "--config=b.cfg", "wf"])), Some("b.cfg".into()));
        assert_eq!(find_path(&os(&["r", "wf"])), None);
    }
}
