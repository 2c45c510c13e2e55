//! Flat `key=value` run configuration.
//!
//! Values are layered: built-in defaults, then the `--config` file, then the
//! `DDAKIT_SEED` environment variable, then `--key value` flags.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{Context, Result};

pub const SEED_ENV: &str = "DDAKIT_SEED";

/// A bad configuration or command line. Maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

pub struct Key {
    pub name: &'static str,
    /// `None` marks a required key.
    pub default: Option<&'static str>,
}

pub const fn key(name: &'static str, default: &'static str) -> Key {
    Key {
        name,
        default: Some(default),
    }
}

pub const fn required(name: &'static str) -> Key {
    Key {
        name,
        default: None,
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    command: &'static str,
    values: BTreeMap<&'static str, String>,
}

fn parse_file(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return usage(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                i + 1
            ));
        };
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_flags(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        let Some(flag) = arg.strip_prefix("--") else {
            return usage(format!(
                "unexpected argument `{arg}`; overrides look like `--key value`"
            ));
        };
        match flag.split_once('=') {
            Some((k, v)) => pairs.push((k.to_string(), v.to_string())),
            None => {
                let Some(v) = it.next() else {
                    return usage(format!("missing value for `--{flag}`"));
                };
                pairs.push((flag.to_string(), v.clone()));
            }
        }
    }
    Ok(pairs)
}

impl RunConfig {
    pub fn load(
        command: &'static str,
        keys: &[Key],
        file: Option<&PathBuf>,
        flags: &[String],
        env_seed: Option<String>,
    ) -> Result<Self> {
        let mut values: BTreeMap<&'static str, String> = BTreeMap::new();
        let mut set = |k: &str, v: String, origin: &str| -> Result<()> {
            let k = k.replace('-', "_");
            match keys.iter().find(|key| key.name == k) {
                Some(key) => {
                    values.insert(key.name, v);
                    Ok(())
                }
                None => usage(format!("unknown key `{k}` ({origin}) for `{command}`")),
            }
        };
        if let Some(path) = file {
            for (k, v) in parse_file(path)? {
                set(&k, v, "config file")?;
            }
        }
        if let Some(seed) = env_seed {
            set("seed", seed, SEED_ENV)?;
        }
        for (k, v) in parse_flags(flags)? {
            set(&k, v, "command line")?;
        }
        for key in keys {
            if !values.contains_key(key.name) {
                match key.default {
                    Some(d) => {
                        values.insert(key.name, d.to_string());
                    }
                    None => {
                        return usage(format!(
                            "missing required key `{}` for `{command}`",
                            key.name
                        ))
                    }
                }
            }
        }
        Ok(Self { command, values })
    }

    pub fn command(&self) -> &'static str {
        self.command
    }

    pub fn str(&self, name: &str) -> &str {
        self.values
            .get(name)
            .map(String::as_str)
            .unwrap_or_else(|| panic!("key `{name}` is not declared"))
    }

    pub fn get<T: FromStr>(&self, name: &str) -> Result<T>
    where
        T::Err: fmt::Display,
    {
        let raw = self.str(name);
        raw.parse()
            .map_err(|e| UsageError(format!("invalid value `{raw}` for `{name}`: {e}")).into())
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        match self.str(name) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            other => usage(format!(
                "invalid value `{other}` for `{name}`: expected true or false"
            )),
        }
    }

    /// Comma-separated list, e.g. `16,16`.
    pub fn list<T: FromStr>(&self, name: &str) -> Result<Vec<T>>
    where
        T::Err: fmt::Display,
    {
        let raw = self.str(name);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|e| UsageError(format!("invalid entry `{p}` in `{name}`: {e}")).into())
            })
            .collect()
    }

    pub fn path(&self, name: &str) -> Option<PathBuf> {
        let raw = self.str(name);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    pub fn out_dir(&self) -> Result<PathBuf> {
        let dir = PathBuf::from(self.str("out_dir"));
        std::fs::create_dir_all(&dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(dir)
    }

    /// Every key with its resolved value, sorted by name.
    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (*k, v.as_str()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KEYS: &[Key] = &[
        required("out_dir"),
        key("seed", "0"),
        key("lr", "0.001"),
        key("hidden", "16,16"),
    ];

    fn flags(args: &[&str]) -> Vec<String> {
        args.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn layering_and_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.cfg");
        std::fs::write(&file, "# comment\nout_dir = a\nseed = 3\nlr=0.5\n").unwrap();
        let cfg = RunConfig::load(
            "t",
            KEYS,
            Some(&file),
            &flags(&["--lr", "0.25"]),
            Some("9".into()),
        )
        .unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), 9);
        assert_eq!(cfg.get::<f64>("lr").unwrap(), 0.25);
        assert_eq!(cfg.list::<usize>("hidden").unwrap(), vec![16, 16]);
        let cfg = RunConfig::load(
            "t",
            KEYS,
            Some(&file),
            &flags(&["--seed=4"]),
            Some("9".into()),
        )
        .unwrap();
        assert_eq!(cfg.get::<u64>("seed").unwrap(), 4);
    }

    #[test]
    fn errors_are_usage_errors() {
        let is_usage = |r: Result<RunConfig>| {
            r.unwrap_err()
                .downcast_ref::<UsageError>()
                .map(|e| e.0.clone())
        };
        let msg = is_usage(RunConfig::load("t", KEYS, None, &[], None)).unwrap();
        assert!(msg.contains("out_dir"));
        let msg = is_usage(RunConfig::load(
            "t",
            KEYS,
            None,
            &flags(&["--out-dir", "x", "--bogus", "1"]),
            None,
        ))
        .unwrap();
        assert!(msg.contains("bogus"));
        assert!(is_usage(RunConfig::load(
            "t",
            KEYS,
            None,
            &flags(&["--out_dir"]),
            None
        ))
        .is_some());
        assert!(is_usage(RunConfig::load("t", KEYS, None, &flags(&["stray"]), None)).is_some());
        let cfg = RunConfig::load(
            "t",
            KEYS,
            None,
            &flags(&["--out_dir", "x", "--lr", "fast"]),
            None,
        )
        .unwrap();
        assert!(cfg
            .get::<f64>("lr")
            .unwrap_err()
            .downcast_ref::<UsageError>()
            .is_some());
    }
}
