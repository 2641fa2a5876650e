//! Obstacle-avoidance environments.
//!
//! [`Environment`] pairs an environment configuration with an observation
//! mode and hands out self-contained [`Episode`] values; episodes own all of
//! their mutable state (including any internal randomness), so many can run
//! side by side.

pub mod complex_oa;
pub mod kinematics;
pub mod simple_oa;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use complex_oa::{ComplexOaConfig, ComplexOaEpisode};
pub use kinematics::{AgentState, KinematicParams, Observation, ObstacleState, PassingRule};
pub use simple_oa::{SimpleOaConfig, SimpleOaEpisode};

use crate::error::{Error, Result};

/// Full relative state (`mdp`) or positions only (`rv`, "remove velocity").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationMode {
    Mdp,
    Rv,
}

impl fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObservationMode::Mdp => "mdp",
            ObservationMode::Rv => "rv",
        })
    }
}

impl FromStr for ObservationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mdp" => Ok(ObservationMode::Mdp),
            "rv" => Ok(ObservationMode::Rv),
            other => Err(Error::Config(format!("unknown observation mode '{other}' (mdp|rv)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvId {
    #[serde(rename = "simple-oa")]
    SimpleOa,
    #[serde(rename = "complex-oa")]
    ComplexOa,
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnvId::SimpleOa => "simple-oa",
            EnvId::ComplexOa => "complex-oa",
        })
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simple-oa" => Ok(EnvId::SimpleOa),
            "complex-oa" => Ok(EnvId::ComplexOa),
            other => Err(Error::Config(format!(
                "unknown environment '{other}' (simple-oa|complex-oa)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvConfig {
    SimpleOa(SimpleOaConfig),
    ComplexOa(ComplexOaConfig),
}

impl EnvConfig {
    pub fn default_for(id: EnvId) -> Self {
        match id {
            EnvId::SimpleOa => EnvConfig::SimpleOa(SimpleOaConfig::default()),
            EnvId::ComplexOa => EnvConfig::ComplexOa(ComplexOaConfig::default()),
        }
    }

    pub fn id(&self) -> EnvId {
        match self {
            EnvConfig::SimpleOa(_) => EnvId::SimpleOa,
            EnvConfig::ComplexOa(_) => EnvId::ComplexOa,
        }
    }

    pub fn obstacle_count(&self) -> usize {
        match self {
            EnvConfig::SimpleOa(_) => simple_oa::OBSTACLES,
            EnvConfig::ComplexOa(c) => c.obstacles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            EnvConfig::SimpleOa(c) => c.validate(),
            EnvConfig::ComplexOa(c) => c.validate(),
        }
    }
}

/// One running episode of either environment.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Episode {
    SimpleOa(SimpleOaEpisode),
    ComplexOa(ComplexOaEpisode),
}

impl Episode {
    pub fn observe(&self, mode: ObservationMode) -> Observation {
        match self {
            Episode::SimpleOa(e) => e.observe(mode),
            Episode::ComplexOa(e) => e.observe(mode),
        }
    }

    /// Applies one jerk command; returns `(reward, done)`.
    pub fn step(&mut self, action: f64) -> Result<(f64, bool)> {
        match self {
            Episode::SimpleOa(e) => e.step(action),
            Episode::ComplexOa(e) => e.step(action),
        }
    }

    pub fn is_done(&self) -> bool {
        match self {
            Episode::SimpleOa(e) => e.is_done(),
            Episode::ComplexOa(e) => e.is_done(),
        }
    }

    /// Whether the episode ended only because its time limit ran out.
    /// Such an ending is not a true terminal state, so learners keep
    /// bootstrapping through it.
    pub fn is_truncated(&self) -> bool {
        match self {
            Episode::SimpleOa(_) => false,
            Episode::ComplexOa(e) => e.is_done(),
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            Episode::SimpleOa(e) => e.steps(),
            Episode::ComplexOa(e) => e.steps(),
        }
    }

    pub fn agent(&self) -> &AgentState {
        match self {
            Episode::SimpleOa(e) => e.agent(),
            Episode::ComplexOa(e) => e.agent(),
        }
    }

    /// Out-of-range actions clamped so far.
    pub fn clamped_actions(&self) -> usize {
        match self {
            Episode::SimpleOa(e) => e.clamped_actions(),
            Episode::ComplexOa(e) => e.clamped_actions(),
        }
    }
}

/// Result of [`Environment::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
}

/// Environment configuration plus the observation mode the agent sees.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub config: EnvConfig,
    pub mode: ObservationMode,
}

impl Environment {
    pub fn new(config: EnvConfig, mode: ObservationMode) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, mode })
    }

    pub fn id(&self) -> EnvId {
        self.config.id()
    }

    pub fn observation_dim(&self) -> usize {
        kinematics::observation_dim(self.mode, self.config.obstacle_count())
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> (Episode, Observation) {
        let episode = match &self.config {
            EnvConfig::SimpleOa(c) => Episode::SimpleOa(SimpleOaEpisode::reset(c, rng)),
            EnvConfig::ComplexOa(c) => Episode::ComplexOa(ComplexOaEpisode::reset(c, rng)),
        };
        let obs = episode.observe(self.mode);
        (episode, obs)
    }

    pub fn step(&self, episode: &mut Episode, action: f64) -> Result<StepResult> {
        let (reward, done) = episode.step(action)?;
        Ok(StepResult {
            observation: episode.observe(self.mode),
            reward,
            done,
        })
    }
}
