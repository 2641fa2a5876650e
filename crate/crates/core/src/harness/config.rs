//! Run configuration: a flat key/value table with layered overrides.
//!
//! Precedence, lowest first: built-in defaults, a TOML file, `OARL_<KEY>`
//! environment variables, explicit `key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentKind, Hyperparams};
use crate::env::{EnvConfig, EnvId, Environment, ObservationMode};
use crate::error::{Error, Result};

pub const ENV_PREFIX: &str = "OARL_";

/// How evaluation episodes are seeded across training seeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalSeeding {
    /// Each run draws evaluation episodes from its own seed.
    PerSeed,
    /// All runs evaluate on episodes drawn from `eval_seed`.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvId,
    pub mode: ObservationMode,
    pub agent: AgentKind,
    pub steps: u64,
    pub eval_period: u64,
    pub eval_episodes: usize,
    pub eval_seeding: EvalSeeding,
    pub eval_seed: u64,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Steps between rows of the diagnostics log.
    pub diagnostics_period: u64,
    #[serde(flatten)]
    pub hyper: Hyperparams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            env: EnvId::SimpleOa,
            mode: ObservationMode::Mdp,
            agent: AgentKind::Td3,
            steps: 100_000,
            eval_period: 5000,
            eval_episodes: 10,
            eval_seeding: EvalSeeding::PerSeed,
            eval_seed: 0,
            seeds: vec![0],
            out: PathBuf::from("runs"),
            diagnostics_period: 1000,
            hyper: Hyperparams::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl RunConfig {
    pub fn to_table(&self) -> toml::Table {
        toml::Table::try_from(self).expect("config serializes to a table")
    }

    fn from_table(table: toml::Table) -> Result<Self> {
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Ok(cfg)
    }

    /// Applies `(key, value)` pairs on top of `self`; unknown keys are errors.
    pub fn with_values<'a, I>(&self, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, toml::Value)>,
    {
        let known = RunConfig::default().to_table();
        let mut table = self.to_table();
        for (key, value) in pairs {
            if !known.contains_key(key) {
                return Err(Error::Config(format!("unknown configuration key '{key}'")));
            }
            let value = match (&known[key], value) {
                (toml::Value::Float(_), toml::Value::Integer(i)) => toml::Value::Float(i as f64),
                (_, v) => v,
            };
            table.insert(key.to_string(), value);
        }
        Self::from_table(table).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    /// Applies `key=value` strings. Values are read as TOML literals, falling
    /// back to bare strings (`env=simple-oa`).
    pub fn with_overrides<S: AsRef<str>>(&self, overrides: &[S]) -> Result<Self> {
        let mut pairs = Vec::new();
        for o in overrides {
            let o = o.as_ref();
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override '{o}' is not key=value")))?;
            pairs.push((k.trim(), parse_value(v.trim())));
        }
        self.with_values(pairs)
    }

    /// Applies `OARL_<KEY>` variables from `vars` (normally `std::env::vars()`).
    pub fn with_env_vars<I>(&self, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let known = RunConfig::default().to_table();
        let mut owned = Vec::new();
        for (name, value) in vars {
            if let Some(key) = name.strip_prefix(ENV_PREFIX) {
                let key = key.to_ascii_lowercase();
                if known.contains_key(&key) {
                    owned.push((key, parse_value(&value)));
                }
            }
        }
        self.with_values(owned.iter().map(|(k, v)| (k.as_str(), v.clone())))
    }

    /// Defaults overlaid with the keys present in a TOML file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(format!("{}: {}", path.display(), e.message())))?;
        RunConfig::default().with_values(table.iter().map(|(k, v)| (k.as_str(), v.clone())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::Config("steps must be positive".into()));
        }
        if self.eval_period == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("eval_period and eval_episodes must be positive".into()));
        }
        if self.diagnostics_period == 0 {
            return Err(Error::Config("diagnostics_period must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("seeds must be distinct".into()));
        }
        self.hyper.validate()
    }

    pub fn environment(&self) -> Result<Environment> {
        Environment::new(EnvConfig::default_for(self.env), self.mode)
    }

    /// Training steps at which evaluation runs.
    pub fn eval_steps(&self) -> Vec<u64> {
        (1..=self.steps / self.eval_period)
            .map(|k| k * self.eval_period)
            .collect()
    }
}

/// Parses `"1,2,3"`.
pub fn parse_seeds(list: &str) -> Result<Vec<u64>> {
    list.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("bad seed '{s}'")))
        })
        .collect()
}
