//! Key-value config files.
//!
//! One `key = value` pair per line. `#` starts a comment, blank lines are
//! ignored, keys use underscores and repeat at most once. Lists are comma
//! separated; coefficient matrices separate rows with `;`.
//!
//! ```text
//! # rq2 noise sweep
//! experiment = rq2_noise
//! sweep = 0.5, 1.5, 2.5, 3.5
//! trials = 10
//! ```

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::Failure;

/// Environment variable consulted when neither a flag nor a config key sets
/// the seed.
pub const SEED_ENV: &str = "LPC_SEED";

#[derive(Debug, Default)]
pub struct Settings {
    origin: String,
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text, &p.display().to_string())
            }
        }
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Failure::usage(format!("{origin}:{line_no}: expected `key = value`, got `{line}`")));
            };
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                return Err(Failure::usage(format!("{origin}:{line_no}: empty key")));
            }
            if let Some((_, first)) = entries.get(&key) {
                return Err(Failure::usage(format!(
                    "{origin}:{line_no}: key `{key}` already set on line {first}"
                )));
            }
            entries.insert(key, (value.trim().to_string(), line_no));
        }
        Ok(Self {
            origin: origin.to_string(),
            entries,
            used: RefCell::default(),
        })
    }

    /// The flag if given, else the parsed config value.
    pub fn value<T>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.used.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some((raw, line)) => raw.parse().map(Some).map_err(|e| {
                Failure::usage(format!("{}:{line}: bad value for `{key}`: {e}", self.origin))
            }),
        }
    }

    pub fn value_or<T>(&self, key: &str, flag: Option<T>, default: T) -> Result<T, Failure>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.value(key, flag)?.unwrap_or(default))
    }

    /// Flag, then config key `seed`, then `LPC_SEED`, then 0.
    pub fn seed(&self, flag: Option<u64>) -> Result<u64, Failure> {
        if let Some(s) = self.value("seed", flag)? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map_err(|e| Failure::usage(format!("bad {SEED_ENV} value `{v}`: {e}"))),
            Err(_) => Ok(0),
        }
    }

    /// Rejects keys no one asked for; call after every lookup.
    pub fn reject_unknown(&self) -> Result<(), Failure> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, (_, line))) => Err(Failure::usage(format!("{}:{line}: unknown key `{k}`", self.origin))),
            None => Ok(()),
        }
    }
}

/// Comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct List<T>(pub Vec<T>);

impl<T> FromStr for List<T>
where
    T: FromStr,
    T::Err: Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .map(|p| p.parse::<T>().map_err(|e| format!("`{p}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .and_then(|v| if v.is_empty() { Err("empty list".into()) } else { Ok(List(v)) })
    }
}

/// Rows separated by `;`, entries by `,`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix(pub Vec<Vec<f64>>);

impl FromStr for Matrix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(';')
            .map(|row| row.parse::<List<f64>>().map(|l| l.0))
            .collect::<Result<Vec<_>, _>>()
            .map(Matrix)
    }
}
