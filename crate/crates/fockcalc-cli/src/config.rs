//! key=value config files and the flag overlay.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fockcalc::verify::RunConfig;
use fockcalc::C64;

use crate::UsageError;

/// Settings gathered from the config file, then overridden by flags.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub run: RunConfig,
    pub out: Option<PathBuf>,
}

pub fn parse_complex(s: &str) -> Result<C64, UsageError> {
    let err = || UsageError(format!("cannot parse complex number '{s}' (try 1+0.5i)"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(err());
    }
    let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) else {
        return t.parse::<f64>().map(|re| C64::new(re, 0.0)).map_err(|_| err());
    };
    // split at the last sign that is not an exponent sign
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse::<f64>().map_err(|_| err())?,
    };
    Ok(C64::new(re.parse::<f64>().map_err(|_| err())?, im))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, UsageError> {
    v.trim().parse().map_err(|_| UsageError(format!("bad value for {key}: '{v}'")))
}

/// Applies one setting; `key` is a flag name without dashes or a config-file key.
pub fn apply(s: &mut Settings, key: &str, value: &str) -> Result<(), UsageError> {
    let r = &mut s.run;
    match key {
        "d" => r.d = Some(num(key, value)?),
        "N" => r.n = Some(num(key, value)?),
        "Q" => r.q = Some(num(key, value)?),
        "R" => r.r = Some(num(key, value)?),
        "h" => r.h = Some(num(key, value)?),
        "seed" => r.seed = num(key, value)?,
        "t" => r.t = Some(parse_complex(value)?),
        "preset" => r.preset = Some(value.trim().to_string()),
        "out" => s.out = Some(PathBuf::from(value.trim())),
        k => match k.strip_prefix("tol.") {
            Some(name) if !name.is_empty() => {
                let v: f64 = num(key, value)?;
                if !(v > 0.0) {
                    return Err(UsageError(format!("tolerance {name} must be positive, got {v}")));
                }
                r.tol.insert(name.to_string(), v);
            }
            _ => return Err(UsageError(format!("unknown setting '{key}'"))),
        },
    }
    Ok(())
}

pub fn parse_file_text(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| UsageError(format!("config line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn load_file(path: &Path, s: &mut Settings) -> Result<(), UsageError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    for (k, v) in parse_file_text(&text)? {
        apply(s, &k, &v)?;
    }
    Ok(())
}

/// Rewrites `--tol.NAME V` and `--tol.NAME=V` into `--tol NAME=V` for clap.
pub fn normalize_args(args: impl IntoIterator<Item = String>) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.strip_prefix("--tol.") {
            Some(rest) => {
                out.push("--tol".into());
                match rest.split_once('=') {
                    Some(_) => out.push(rest.to_string()),
                    None => out.push(format!("{rest}={}", it.next().unwrap_or_default())),
                }
            }
            None => out.push(a),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_forms() {
        let c = |s| parse_complex(s).unwrap();
        assert_eq!(c("1+0.5i"), C64::new(1.0, 0.5));
        assert_eq!(c("i"), C64::new(0.0, 1.0));
        assert_eq!(c("-i"), C64::new(0.0, -1.0));
        assert_eq!(c("-2"), C64::new(-2.0, 0.0));
        assert_eq!(c("1e-3-2e+1i"), C64::new(1e-3, -20.0));
        assert_eq!(c("3.5i"), C64::new(0.0, 3.5));
        assert!(parse_complex("1+xi").is_err());
        assert!(parse_complex("").is_err());
    }

    #[test]
    fn file_then_flags() {
        let mut s = Settings::default();
        for (k, v) in parse_file_text("# run\nN = 10\nseed=4\ntol.isometry=1e-9\n\n").unwrap() {
            apply(&mut s, &k, &v).unwrap();
        }
        apply(&mut s, "N", "12").unwrap();
        assert_eq!(s.run.n, Some(12));
        assert_eq!(s.run.seed, 4);
        assert_eq!(s.run.tol["isometry"], 1e-9);
        assert!(parse_file_text("N 10").is_err());
        assert!(apply(&mut s, "bogus", "1").is_err());
        assert!(apply(&mut s, "tol.x", "-1").is_err());
    }

    #[test]
    fn tol_flags_are_normalized() {
        let a = normalize_args(["x", "--tol.isometry", "1e-9", "--tol.t0t-inverse=1e-6"].map(String::from));
        assert_eq!(a, ["x", "--tol", "isometry=1e-9", "--tol", "t0t-inverse=1e-6"]);
    }
}
