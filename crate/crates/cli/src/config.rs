use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use relbc_core::rational;
use relbc_core::{Field, Method, Rational, Variant};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Brute,
    Search,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

/// Every knob of a run. Built from defaults, then a config file, then flags.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub p: u32,
    pub n: u32,
    /// Constant term first.
    pub modulus: Option<Vec<u32>>,
    pub variant: Variant,
    pub m: usize,
    pub rho: usize,
    pub k0: usize,
    pub method: Method,
    pub samples: u64,
    pub seed: u64,
    pub strategy: Source,
    pub strategy_file: Option<PathBuf>,
    pub strategy_out: Option<PathBuf>,
    pub restarts: usize,
    pub max_iters: usize,
    /// Bias of the game distribution, as a fraction.
    pub gamma: Option<String>,
    pub c: f64,
    pub qs: Vec<u32>,
    pub ms: Vec<usize>,
    pub upto: Option<usize>,
    pub triples: usize,
    pub transcripts: usize,
    pub transcripts_out: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            p: 2,
            n: 1,
            modulus: None,
            variant: Variant::Standard,
            m: 4,
            rho: 2,
            k0: 0,
            method: Method::Auto,
            samples: 100_000,
            seed: 0,
            strategy: Source::Brute,
            strategy_file: None,
            strategy_out: None,
            restarts: 64,
            max_iters: 1000,
            gamma: None,
            c: 1.0,
            qs: vec![2, 4],
            ms: (2..=13).collect(),
            upto: None,
            triples: 10_000,
            transcripts: 0,
            transcripts_out: None,
            output: None,
            format: Format::Json,
        }
    }
}

pub const KEYS: &[&str] = &[
    "q",
    "p",
    "n",
    "modulus",
    "variant",
    "m",
    "rho",
    "k0",
    "method",
    "samples",
    "seed",
    "strategy",
    "strategy_file",
    "strategy_out",
    "restarts",
    "max_iters",
    "gamma",
    "c",
    "qs",
    "ms",
    "upto",
    "triples",
    "transcripts",
    "transcripts_out",
    "output",
    "format",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {v:?}")))
}

fn opt_path(v: &str) -> Option<PathBuf> {
    let v = v.trim();
    (!v.is_empty()).then(|| PathBuf::from(v))
}

/// Comma list; an item `a..b` stands for `a..=b`.
fn list<T>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T: std::str::FromStr + TryFrom<u64>,
{
    let mut out = Vec::new();
    for item in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item.split_once("..") {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (num(key, a)?, num(key, b)?);
                for i in a..=b {
                    out.push(T::try_from(i).map_err(|_| CliError::Config(format!("{key}: {i} out of range")))?);
                }
            }
            None => out.push(num(key, item)?),
        }
    }
    Ok(out)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let v = value.trim();
        match key {
            "q" => {
                let f = Field::with_order(num(key, v)?)?;
                self.p = f.p();
                self.n = f.n();
                self.modulus = None;
            }
            "p" => self.p = num(key, v)?,
            "n" => self.n = num(key, v)?,
            "modulus" => self.modulus = if v.is_empty() { None } else { Some(list::<u32>(key, v)?) },
            "variant" => {
                self.variant = match v {
                    "standard" => Variant::Standard,
                    "symmetrized" => Variant::Symmetrized,
                    _ => return Err(CliError::Config(format!("variant: expected standard|symmetrized, got {v:?}"))),
                }
            }
            "m" => self.m = num(key, v)?,
            "rho" => self.rho = num(key, v)?,
            "k0" => self.k0 = num(key, v)?,
            "method" => {
                self.method = match v {
                    "exact" => Method::Exact,
                    "mc" => Method::Mc,
                    "auto" => Method::Auto,
                    _ => return Err(CliError::Config(format!("method: expected exact|mc|auto, got {v:?}"))),
                }
            }
            "samples" => self.samples = num(key, v)?,
            "seed" => self.seed = num(key, v)?,
            "strategy" => {
                self.strategy = match v {
                    "brute" => Source::Brute,
                    "search" => Source::Search,
                    "file" => Source::File,
                    _ => return Err(CliError::Config(format!("strategy: expected brute|search|file, got {v:?}"))),
                }
            }
            "strategy_file" => self.strategy_file = opt_path(v),
            "strategy_out" => self.strategy_out = opt_path(v),
            "restarts" => self.restarts = num(key, v)?,
            "max_iters" => self.max_iters = num(key, v)?,
            "gamma" => {
                if v.is_empty() {
                    self.gamma = None;
                } else {
                    rational::parse(v)?;
                    self.gamma = Some(v.to_string());
                }
            }
            "c" => self.c = num(key, v)?,
            "qs" => self.qs = list(key, v)?,
            "ms" => self.ms = list::<u64>(key, v)?.into_iter().map(|m| m as usize).collect(),
            "upto" => self.upto = if v.is_empty() { None } else { Some(num(key, v)?) },
            "triples" => self.triples = num(key, v)?,
            "transcripts" => self.transcripts = num(key, v)?,
            "transcripts_out" => self.transcripts_out = opt_path(v),
            "output" => self.output = opt_path(v),
            "format" => {
                self.format = match v {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    _ => return Err(CliError::Config(format!("format: expected json|csv, got {v:?}"))),
                }
            }
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Defaults, then `file` entries, then `overrides`, each in order.
    pub fn resolve(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            for (k, v) in parse_file(&text)? {
                cfg.set(&k, &v)?;
            }
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn field(&self) -> Result<Arc<Field>, CliError> {
        Ok(Field::new(self.p, self.n, self.modulus.clone())?)
    }

    pub fn gamma(&self) -> Result<Option<Rational>, CliError> {
        Ok(self.gamma.as_deref().map(rational::parse).transpose()?)
    }
}

/// `key = value` lines; `#` starts a comment line.
pub fn parse_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
        let k = k.trim().replace('-', "_");
        if !KEYS.contains(&k.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {k:?}", no + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let text = "# run\nq = 4\nm=7\nseed = 3\n\nms = 2..4, 9\n";
        let dir = std::env::temp_dir().join(format!("relbc-cfg-{}", std::process::id()));
        fs::write(&dir, text).unwrap();
        let cfg = RunConfig::resolve(Some(&dir), &[("m".into(), "9".into())]).unwrap();
        fs::remove_file(&dir).unwrap();
        assert_eq!((cfg.p, cfg.n, cfg.m, cfg.seed), (2, 2, 9, 3));
        assert_eq!(cfg.ms, vec![2, 3, 4, 9]);
    }

    #[test]
    fn bad_lines() {
        assert!(parse_file("m 3").is_err());
        assert!(parse_file("colour = red").is_err());
        assert_eq!(parse_file("max-iters = 5").unwrap()[0].0, "max_iters");
    }

    #[test]
    fn empty_list() {
        let mut cfg = RunConfig::default();
        cfg.set("ms", "").unwrap();
        assert!(cfg.ms.is_empty());
        assert!(cfg.set("q", "6").is_err());
        assert!(cfg.set("gamma", "3/x").is_err());
    }
}
