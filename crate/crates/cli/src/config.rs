//! Flat `key = value` config files.
//!
//! Each entry becomes `--key value` inserted right after the subcommand
//! tokens, so anything given on the command line afterwards overrides it.
//! `key = true` becomes a bare `--key` switch and `key = false` is dropped.

use std::ffi::OsString;
use std::fs;

/// Subcommands that take a nested subcommand of their own.
const NESTED: [&str; 2] = ["densities", "plotdata"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let key = k.trim().trim_start_matches("--").to_string();
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: invalid key '{}'", i + 1, k.trim()));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn entry_args(entries: &[(String, String)]) -> Vec<OsString> {
    let mut args = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => args.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                args.push(format!("--{k}").into());
                args.push(v.into());
            }
        }
    }
    args
}

/// Removes `--config FILE` from `argv` and splices the file's entries in.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a file path")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let extra = entry_args(&parse(&text)?);

    // insertion point: after the program name and the (possibly nested) subcommand
    let mut at = 1;
    let mut depth = 0;
    while at < rest.len() {
        let s = rest[at].to_string_lossy().into_owned();
        if s.starts_with('-') {
            break;
        }
        at += 1;
        depth += 1;
        if depth == 2 || !NESTED.contains(&s.as_str()) {
            break;
        }
    }
    rest.splice(at..at, extra);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_entries_and_comments() {
        let e = parse("# comment\nseed = 4\n\n--trials=10\nrecord-runtime = true\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("seed".into(), "4".into()),
                ("trials".into(), "10".into()),
                ("record-runtime".into(), "true".into())
            ]
        );
        assert!(parse("nonsense").is_err());
    }

    #[test]
    fn entries_go_after_nested_subcommands() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.txt");
        fs::write(&p, "n = 5\nflag = true\noff = false\n").unwrap();
        let argv: Vec<OsString> = ["overpen", "densities", "sample", "--config", p.to_str().unwrap(), "--n", "7"]
            .iter()
            .map(OsString::from)
            .collect();
        let out: Vec<String> = expand(argv).unwrap().into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(out, ["overpen", "densities", "sample", "--n", "5", "--flag", "--n", "7"]);
    }
}
