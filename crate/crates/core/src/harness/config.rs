//! Flat `key = value` configuration files.
//!
//! Keys mirror the command-line flag names (`reps = 500` is `--reps 500`).
//! Blank lines and lines starting with `#` are ignored. A value of `true`
//! turns the key into a bare flag; `false` drops it.

use std::path::Path;

use crate::error::{Error, Result};

/// Parses `key = value` lines, keeping file order.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    parse(&std::fs::read_to_string(path)?)
}

/// Turns parsed pairs into `--key value` arguments. Underscores in keys
/// become hyphens.
pub fn to_args(pairs: &[(String, String)]) -> Vec<String> {
    let mut args = Vec::new();
    for (key, value) in pairs {
        let flag = format!("--{}", key.replace('_', "-"));
        match value.as_str() {
            "true" => args.push(flag),
            "false" => {}
            _ => {
                args.push(flag);
                args.push(value.clone());
            }
        }
    }
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_converts() {
        let text = "# risk run\nnull = uniform:0,1\n\nreps=200\ncalibrated = true\nverbose = false\nn_grid = 8\n";
        let pairs = parse(text).unwrap();
        assert_eq!(pairs.len(), 5);
        assert_eq!(pairs[0], ("null".into(), "uniform:0,1".into()));
        assert_eq!(
            to_args(&pairs),
            vec![
                "--null",
                "uniform:0,1",
                "--reps",
                "200",
                "--calibrated",
                "--n-grid",
                "8"
            ]
        );
    }

    #[test]
    fn rejects_lines_without_equals() {
        assert!(parse("reps 200").is_err());
        assert!(parse(" = 3").is_err());
    }
}
