//! Flat `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, keys are dotted paths
//! (`drift.kind`, `scheme.n_list`, ...). Unknown keys are rejected so a
//! typo cannot silently fall back to a default. The same format doubles as
//! the run manifest: meta keys under `run.*` record the subcommand, crate
//! version, and effective seed, and a manifest can be fed back through
//! `--config` to reproduce a run bit-for-bit.

use crate::drift::{DriftKind, DriftSpec, TimeModulation};
use crate::harness::{RateParams, RateStudyConfig};
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Parsed key-value map with typed accessors that track which keys were
/// consumed.
#[derive(Debug, Clone, Default)]
pub struct KvConfig {
    entries: BTreeMap<String, String>,
}

impl KvConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(Error::Config(format!("line {}: empty key or value", lineno + 1)));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(Error::Config(format!("duplicate key `{key}`")));
            }
        }
        Ok(KvConfig { entries })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn parse_with<T>(&self, key: &str, what: &str) -> Result<Option<T>>
    where
        T: std::str::FromStr,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("key `{key}`: `{v}` is not a valid {what}"))
            }),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.parse_with(key, "number")
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        self.parse_with(key, "integer")
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>> {
        self.parse_with(key, "integer")
    }

    /// Comma-separated integer list.
    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("key `{key}`: bad integer `{s}`")))
                })
                .collect::<Result<Vec<_>>>()
                .map(Some),
        }
    }

    /// Rejects any present key that is not in the accepted set
    /// (`run.*` meta keys are always accepted).
    pub fn reject_unknown(&self, accepted: &[&str]) -> Result<()> {
        for key in self.entries.keys() {
            if key.starts_with("run.") {
                continue;
            }
            if !accepted.contains(&key.as_str()) {
                return Err(Error::Config(format!("unknown key `{key}`")));
            }
        }
        Ok(())
    }

    /// Serializes back to the flat format, keys sorted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

/// Every key the experiment config understands.
pub const ACCEPTED_KEYS: &[&str] = &[
    "drift.kind",
    "drift.beta",
    "drift.seed",
    "drift.amplitude",
    "drift.time_modulation",
    "grid.points",
    "grid.half_length",
    "pde.lambda",
    "pde.time_nodes",
    "pde.tol",
    "rate.beta_hat",
    "rate.epsilon",
    "rate.p",
    "scheme.n_list",
    "scheme.n_fine",
    "scheme.m_ref",
    "scheme.m_fixed",
    "scheme.paths",
    "scheme.x0",
    "scheme.T",
    "scheme.master_seed",
];

pub fn drift_spec_from(cfg: &KvConfig) -> Result<DriftSpec> {
    let kind = match cfg.get("drift.kind").unwrap_or("smooth_benchmark") {
        "smooth_benchmark" => DriftKind::SmoothBenchmark,
        "holder_function" => DriftKind::HolderFunction,
        "distributional_derivative" => DriftKind::DistributionalDerivative,
        other => {
            return Err(Error::Config(format!(
                "drift.kind `{other}` is not one of smooth_benchmark | holder_function | distributional_derivative"
            )))
        }
    };
    let time_modulation = match cfg.get("drift.time_modulation").unwrap_or("constant") {
        "constant" => TimeModulation::Constant,
        "sqrt_ramp" => TimeModulation::SqrtRamp,
        other => {
            return Err(Error::Config(format!(
                "drift.time_modulation `{other}` is not one of constant | sqrt_ramp"
            )))
        }
    };
    let spec = DriftSpec {
        kind,
        beta: cfg.get_f64("drift.beta")?.unwrap_or(0.1),
        seed: cfg.get_u64("drift.seed")?.unwrap_or(1),
        amplitude: cfg.get_f64("drift.amplitude")?.unwrap_or(1.0),
        time_modulation,
    };
    spec.validate()?;
    Ok(spec)
}

/// Assembles the typed rate-study configuration, applying defaults and the
/// same domain validation the owning modules enforce.
pub fn rate_study_from(cfg: &KvConfig) -> Result<RateStudyConfig> {
    cfg.reject_unknown(ACCEPTED_KEYS)?;
    let drift = drift_spec_from(cfg)?;
    let beta = drift.beta;
    // auxiliary exponent defaults slightly above beta
    let beta_hat = cfg.get_f64("rate.beta_hat")?.unwrap_or(beta + 0.05);
    let epsilon = cfg.get_f64("rate.epsilon")?.unwrap_or(0.05);
    let p_moment = cfg.get_f64("rate.p")?.unwrap_or(2.0);
    let rate = RateParams::new(beta, beta_hat, epsilon, p_moment)?;
    let n_list = cfg
        .get_usize_list("scheme.n_list")?
        .unwrap_or_else(|| (4..=9).map(|k| 1usize << k).collect());
    let n_fine = cfg.get_usize("scheme.n_fine")?.unwrap_or(1 << 13);
    let eta = rate.eta()?;
    let m_fixed = cfg.get_usize("scheme.m_fixed")?;
    let m_default_ref = {
        let m_max = n_list
            .iter()
            .map(|&n| m_fixed.unwrap_or_else(|| crate::harness::balanced_mollification(n, eta)))
            .max()
            .unwrap_or(1);
        (4 * m_max).next_power_of_two()
    };
    Ok(RateStudyConfig {
        drift,
        rate,
        n_list,
        n_fine,
        m_ref: cfg.get_usize("scheme.m_ref")?.unwrap_or(m_default_ref),
        num_paths: cfg.get_usize("scheme.paths")?.unwrap_or(10_000),
        x0: cfg.get_f64("scheme.x0")?.unwrap_or(0.0),
        t_horizon: cfg.get_f64("scheme.T")?.unwrap_or(1.0),
        master_seed: cfg.get_u64("scheme.master_seed")?.unwrap_or(1),
        m_fixed,
        grid_points: cfg.get_usize("grid.points")?.unwrap_or(1 << 13),
        grid_half_length: cfg.get_f64("grid.half_length")?.unwrap_or(16.0),
    })
}
