//! TOML run configuration. Every key mirrors a command-line flag, and a flag
//! given on the command line always wins over the file.
//!
//! ```toml
//! seed = 7
//! workers = 2
//! format = "markdown"
//! markov = "level"
//!
//! [[params]]
//! label = "theory"
//! d_level = 1e-9
//! key_rate = 1e7
//! ```

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use keyleak::report::{MarkovConvention, ProtocolParams};
use keyleak::Rational;
use serde::Deserialize;

use crate::output::Format;

pub const DEFAULT_SEED: u64 = 0x5eed;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub exact: Option<bool>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub markov: Option<String>,
    pub instances: Option<usize>,
    pub max_bits: Option<u32>,
    #[serde(default)]
    pub params: Vec<ProtocolParams>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
    }
}

/// Settings after merging the command line over the file.
#[derive(Debug)]
pub struct Settings {
    pub seed: u64,
    pub exact: bool,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub markov: MarkovConvention,
    pub instances: Option<usize>,
    pub max_bits: Option<u32>,
    pub params: Vec<ProtocolParams>,
}

pub struct Overrides {
    pub seed: Option<u64>,
    pub exact: bool,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Settings {
    pub fn merge(cli: Overrides, file: FileConfig) -> Result<Self> {
        let markov = match &file.markov {
            Some(s) => s.parse().map_err(|e| anyhow!("config markov: {e}"))?,
            None => MarkovConvention::default(),
        };
        if cli.workers == Some(0) || (cli.workers.is_none() && file.workers == Some(0)) {
            bail!("workers must be at least 1");
        }
        Ok(Self {
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            exact: cli.exact || file.exact.unwrap_or(false),
            workers: cli.workers.or(file.workers),
            out: cli.out.or(file.out),
            format: cli.format.or(file.format).unwrap_or_default(),
            markov,
            instances: file.instances,
            max_bits: file.max_bits,
            params: file.params,
        })
    }
}

/// Decimal, `a/b`, `a^b` or `a^-b`, and integers in hex with `0x`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        return Ok(parse_number(base)?.powf(parse_number(exp)?));
    }
    if let Some((a, b)) = s.split_once('/') {
        return Ok(parse_number(a)? / parse_number(b)?);
    }
    if let Some(hex) = s.strip_prefix("0x") {
        return Ok(u64::from_str_radix(hex, 16).with_context(|| format!("bad hex `{s}`"))? as f64);
    }
    let v: f64 = s.parse().map_err(|_| anyhow!("not a number: `{s}`"))?;
    if !v.is_finite() {
        bail!("not a finite number: `{s}`");
    }
    Ok(v)
}

pub fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.trim();
    match s.strip_prefix("0x") {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| format!("`{s}`: {e}"))
}

/// Exact rational from `a/b`, `2^-k` or a plain decimal such as `0.1`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let int = |t: &str| t.trim().parse::<i128>().map_err(|_| anyhow!("`{s}` is not an exact rational"));
    if let Some((a, b)) = s.split_once('/') {
        let den = int(b)?;
        if den == 0 {
            bail!("zero denominator in `{s}`");
        }
        return Ok(Rational::new(int(a)?, den));
    }
    if let Some(k) = s.strip_prefix("2^-") {
        let k: u32 = k.parse().map_err(|_| anyhow!("bad exponent in `{s}`"))?;
        if k > 120 {
            bail!("`{s}` is below exact range");
        }
        return Ok(Rational::new(1, 1i128 << k));
    }
    let (whole, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 30 || !frac.chars().all(|c| c.is_ascii_digit()) {
        bail!("`{s}` is not an exact decimal");
    }
    let den = 10i128.pow(frac.len() as u32);
    let num = int(whole)? * den + if frac.is_empty() { 0 } else { int(frac)? };
    Ok(Rational::new(num, den))
}

/// Exact value of a double when its binary expansion fits in `Rational`.
pub fn exact_from_f64(x: f64) -> Option<Rational> {
    if !x.is_finite() || x < 0.0 {
        return None;
    }
    let mut scaled = x;
    let mut k = 0u32;
    while scaled.fract() != 0.0 {
        if k >= 100 {
            return None;
        }
        scaled *= 2.0;
        k += 1;
    }
    if scaled >= 2f64.powi(100) {
        return None;
    }
    Some(Rational::new(scaled as i128, 1i128 << k))
}
