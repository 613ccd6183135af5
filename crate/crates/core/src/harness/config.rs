use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::adaptive::AlgoConfig;
use crate::error::{Error, Result};
use crate::filterbank::{design_bank, FilterBank};
use crate::signalgen::{rng_from_seed, SourceConfig};
use crate::theory::DEFAULT_MOMENT_FRAMES;

/// Unknown system `h0`: explicit taps, or standard-normal taps drawn from
/// `seed` (length `algo.taps`), optionally scaled to unit norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueSystem {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub unit_norm: bool,
}

impl TrueSystem {
    pub fn random(seed: u64, unit_norm: bool) -> Self {
        Self {
            coefficients: None,
            seed,
            unit_norm,
        }
    }

    pub fn explicit(coefficients: Vec<f64>) -> Self {
        Self {
            coefficients: Some(coefficients),
            seed: 0,
            unit_norm: false,
        }
    }

    pub fn realize(&self, taps: usize) -> Result<Vec<f64>> {
        let mut h: Vec<f64> = match &self.coefficients {
            Some(c) if c.len() != taps => {
                return Err(Error::Config(format!(
                    "system has {} coefficients but the filter has {taps} taps",
                    c.len()
                )))
            }
            Some(c) => c.clone(),
            None => {
                let mut rng = rng_from_seed(self.seed);
                (0..taps)
                    .map(|_| rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
        };
        if self.unit_norm {
            let norm = h.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Config("cannot normalise an all-zero system".into()));
            }
            h.iter_mut().for_each(|v| *v /= norm);
        }
        if h.iter().all(|&v| v == 0.0) {
            return Err(Error::Config(
                "the unknown system must not be all zero".into(),
            ));
        }
        Ok(h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankConfig {
    pub bands: usize,
    pub length: usize,
}

impl BankConfig {
    pub fn design(&self) -> Result<FilterBank> {
        design_bank(self.bands, self.length)
    }
}

fn default_window() -> usize {
    10_000
}

fn default_moment_frames() -> usize {
    DEFAULT_MOMENT_FRAMES
}

fn one() -> usize {
    1
}

/// One system-identification experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    pub total_samples: usize,
    /// Fullband sample at which `h0` becomes `-h0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flip_at: Option<usize>,
    /// Number of final updates averaged for the steady-state MSD.
    #[serde(default = "default_window")]
    pub steady_window: usize,
    /// Frames used when estimating moments for the theory predictions.
    #[serde(default = "default_moment_frames")]
    pub moment_frames: usize,
    pub system: TrueSystem,
    pub input: SourceConfig,
    pub noise: SourceConfig,
    pub bank: BankConfig,
    pub algo: AlgoConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let cfg_err = |e: Error| Error::Config(e.to_string());
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.total_samples == 0 {
            return Err(Error::Config("total_samples must be positive".into()));
        }
        if let Some(flip) = self.flip_at {
            if flip >= self.total_samples {
                return Err(Error::Config(format!(
                    "flip_at ({flip}) must be below total_samples ({})",
                    self.total_samples
                )));
            }
        }
        if self.steady_window == 0 {
            return Err(Error::Config("steady_window must be positive".into()));
        }
        self.input.validate().map_err(cfg_err)?;
        self.noise.validate().map_err(cfg_err)?;
        self.algo.validate().map_err(cfg_err)?;
        self.bank.design().map_err(cfg_err)?;
        self.system.realize(self.algo.taps)?;
        Ok(())
    }

    /// Parses TOML text, applies `section.key=value` overrides, validates.
    pub fn from_toml_str(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        for (key, value) in overrides {
            set_path(&mut table, key, value)?;
        }
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn updates(&self) -> usize {
        self.total_samples.div_ceil(self.bank.bands)
    }

    /// Seed for the theory moment estimates, kept apart from trial streams.
    pub fn moment_seed(&self) -> u64 {
        self.master_seed ^ 0x9e37_79b9_7f4a_7c15
    }
}

/// Parses a `key=value` override.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn set_path(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let value: toml::Value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::Config(format!("bad key {key:?}")))?;
    let mut cur = table;
    for part in parts {
        cur = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("{part} in {key:?} is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
