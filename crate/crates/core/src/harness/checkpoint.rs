//! Versioned JSON checkpoints of a training run.

use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::agent::Td3Agent;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// Generator states of the named streams at checkpoint time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RngStates {
    pub env: ChaCha8Rng,
    pub exploration: ChaCha8Rng,
    pub replay: ChaCha8Rng,
    pub eval: ChaCha8Rng,
}

/// Everything needed to evaluate (or inspect) a trained agent. Unknown
/// fields are ignored on load so newer writers stay readable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: RunConfig,
    pub seed: u64,
    pub step: u64,
    pub episodes: u64,
    pub agent: Td3Agent,
    pub rngs: RngStates,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer(&mut w, self)?;
        std::io::Write::flush(&mut w).map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_reader(std::io::BufReader::new(file))?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::Checkpoint(format!("{}: missing version tag", path.display())))?;
        if version == 0 || version > u64::from(CHECKPOINT_VERSION) {
            return Err(Error::Checkpoint(format!(
                "{}: unsupported checkpoint version {version} (this build reads up to {CHECKPOINT_VERSION})",
                path.display()
            )));
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::agent::{AgentKind, Hyperparams};

    fn sample() -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let hp = Hyperparams {
            recurrent_width: 4,
            ..Hyperparams::default()
        };
        let agent = Td3Agent::new(AgentKind::LstmTd3, 6, hp, &mut rng).unwrap();
        let _: u64 = rng.random();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            config: RunConfig::default(),
            seed: 9,
            step: 1234,
            episodes: 20,
            agent,
            rngs: RngStates {
                env: rng.clone(),
                exploration: rng.clone(),
                replay: rng.clone(),
                eval: rng,
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(CHECKPOINT_FILE);
        let ck = sample();
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back, ck);
        let mut a = back.rngs.eval.clone();
        let mut b = ck.rngs.eval.clone();
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn future_versions_are_rejected_and_extra_fields_ignored() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(CHECKPOINT_FILE);
        let mut value = serde_json::to_value(sample()).unwrap();
        value["note"] = serde_json::json!("added by a later writer");
        std::fs::write(&path, value.to_string()).unwrap();
        assert!(Checkpoint::load(&path).is_ok());
        value["version"] = serde_json::json!(CHECKPOINT_VERSION + 1);
        std::fs::write(&path, value.to_string()).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::Checkpoint(_))));
    }
}
