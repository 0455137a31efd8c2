//! Run configuration: a plain-text `key = value` file plus `--set` overrides.
//!
//! Blank lines and everything after `#` are ignored. Keys are case-sensitive
//! and unknown keys are rejected.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Spectral,
    Graph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Initial {
    /// Mean-zero uniform values in `[-amplitude, amplitude]`.
    Random,
    /// `amplitude · cos(x₁)`.
    Cosine,
    /// A CHF1 snapshot with the run's extents.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: Scheme,
    pub dim: usize,
    pub points_per_dim: usize,
    pub bc: BoundaryKind,
    pub nu: f64,
    pub tau: f64,
    pub a: f64,
    pub steps: usize,
    pub seed: u64,
    pub initial: Initial,
    pub amplitude: f64,
    /// Write a snapshot every this many steps; 0 disables snapshots.
    pub snapshot_stride: usize,
    pub output_dir: PathBuf,
    pub dealias: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Spectral,
            dim: 1,
            points_per_dim: 128,
            bc: BoundaryKind::Periodic,
            nu: 0.001,
            tau: 0.01,
            a: 0.0,
            steps: 200,
            seed: 0,
            initial: Initial::Random,
            amplitude: 0.1,
            snapshot_stride: 0,
            output_dir: PathBuf::from("."),
            dealias: false,
        }
    }
}

pub const KEYS: &[&str] = &[
    "scheme",
    "dim",
    "points_per_dim",
    "bc",
    "nu",
    "tau",
    "A",
    "steps",
    "seed",
    "initial",
    "amplitude",
    "snapshot_stride",
    "output_dir",
    "dealias",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("{key}: cannot parse {value:?}: {e}"))
}

fn positive(key: &str, value: &str) -> Result<f64> {
    let v: f64 = parse_value(key, value)?;
    if !(v > 0.0 && v.is_finite()) {
        bail!("{key}: {value} must be a positive number");
    }
    Ok(v)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "scheme" => {
                self.scheme = match value {
                    "spectral" => Scheme::Spectral,
                    "graph" => Scheme::Graph,
                    _ => bail!("scheme: expected spectral or graph, got {value:?}"),
                }
            }
            "dim" => {
                self.dim = parse_value(key, value)?;
                if !(1..=3).contains(&self.dim) {
                    bail!("dim: {value} not in 1..=3");
                }
            }
            "points_per_dim" => {
                self.points_per_dim = parse_value(key, value)?;
                if self.points_per_dim < 2 {
                    bail!("points_per_dim: {value} < 2");
                }
            }
            "bc" => {
                self.bc = match value {
                    "periodic" => BoundaryKind::Periodic,
                    "dirichlet" => BoundaryKind::Dirichlet,
                    _ => bail!("bc: expected periodic or dirichlet, got {value:?}"),
                }
            }
            "nu" => self.nu = positive(key, value)?,
            "tau" => self.tau = positive(key, value)?,
            "A" => {
                self.a = parse_value(key, value)?;
                if !(self.a >= 0.0 && self.a.is_finite()) {
                    bail!("A: {value} must be a nonnegative number");
                }
            }
            "steps" => self.steps = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "initial" => {
                self.initial = match value {
                    "random" => Initial::Random,
                    "cosine" => Initial::Cosine,
                    _ => match value.strip_prefix("file:") {
                        Some(path) if !path.is_empty() => Initial::File(PathBuf::from(path)),
                        _ => {
                            bail!("initial: expected random, cosine or file:<path>, got {value:?}")
                        }
                    },
                }
            }
            "amplitude" => self.amplitude = positive(key, value)?,
            "snapshot_stride" => self.snapshot_stride = parse_value(key, value)?,
            "output_dir" => self.output_dir = PathBuf::from(value),
            "dealias" => self.dealias = parse_value(key, value)?,
            _ => bail!("unknown key {key:?} (known keys: {})", KEYS.join(", ")),
        }
        Ok(())
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("override {assignment:?} is not of the form key=value"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Self::default();
        for (number, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            config
                .apply_override(line)
                .with_context(|| format!("config line {}", number + 1))?;
        }
        Ok(config)
    }

    /// Cross-field checks that single assignments cannot make.
    pub fn validate(&self) -> Result<()> {
        if self.bc == BoundaryKind::Dirichlet && (self.scheme != Scheme::Graph || self.dim != 1) {
            bail!("bc = dirichlet requires scheme = graph and dim = 1");
        }
        if self.dealias && self.scheme != Scheme::Spectral {
            bail!("dealias applies to scheme = spectral only");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_grammar() {
        let text = "\
# comment line
scheme = graph
dim=2
points_per_dim = 64   # trailing comment
nu = 1e-3
tau = 0.03
A = 3.05
initial = file:/tmp/u0.chf1
";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.scheme, Scheme::Graph);
        assert_eq!((c.dim, c.points_per_dim), (2, 64));
        assert_eq!((c.nu, c.tau, c.a), (1e-3, 0.03, 3.05));
        assert_eq!(c.initial, Initial::File(PathBuf::from("/tmp/u0.chf1")));
        assert_eq!(c.steps, RunConfig::default().steps);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(RunConfig::parse("colour = blue").is_err());
        assert!(RunConfig::parse("nu = 0").is_err());
        assert!(RunConfig::parse("tau = -1").is_err());
        assert!(RunConfig::parse("A = nan").is_err());
        assert!(RunConfig::parse("dim = 4").is_err());
        assert!(RunConfig::parse("initial = file:").is_err());
        assert!(RunConfig::parse("scheme graph").is_err());
    }

    #[test]
    fn overrides_use_the_same_grammar() {
        let mut c = RunConfig::parse("tau = 0.1").unwrap();
        c.apply_override("tau=0.2").unwrap();
        assert_eq!(c.tau, 0.2);
        assert!(c.apply_override("bogus=1").is_err());
    }

    #[test]
    fn cross_field_checks() {
        let mut c = RunConfig::default();
        c.set("bc", "dirichlet").unwrap();
        assert!(c.validate().is_err());
        c.set("scheme", "graph").unwrap();
        assert!(c.validate().is_ok());
    }
}
