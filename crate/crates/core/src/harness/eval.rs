//! Evaluation with exploration disabled.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{HistoryWindow, Td3Agent};
use crate::env::{Environment, Episode, Observation};
use crate::error::{Error, Result};
use crate::par;

/// Anything that maps the current observation (plus history) to a jerk command.
///
/// `rng` is a per-episode stream owned by the evaluator, for stochastic
/// baselines; deterministic policies ignore it.
pub trait Policy: Sync {
    fn history_len(&self) -> usize;

    fn action(&self, obs: &Observation, history: &[Vec<f64>], episode: &Episode, rng: &mut ChaCha8Rng) -> Result<f64>;
}

impl Policy for Td3Agent {
    fn history_len(&self) -> usize {
        Td3Agent::history_len(self)
    }

    fn action(&self, obs: &Observation, history: &[Vec<f64>], _: &Episode, _: &mut ChaCha8Rng) -> Result<f64> {
        self.act(obs.as_slice(), history)
    }
}

/// Constant-acceleration steering to the gate centre (Simple-OA only).
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePolicy;

impl Policy for OraclePolicy {
    fn history_len(&self) -> usize {
        0
    }

    fn action(&self, _: &Observation, _: &[Vec<f64>], episode: &Episode, _: &mut ChaCha8Rng) -> Result<f64> {
        match episode {
            Episode::SimpleOa(e) => Ok(e.oracle_action()),
            Episode::ComplexOa(_) => Err(Error::Config(
                "the analytic controller only exists for simple-oa".into(),
            )),
        }
    }
}

/// Uniform actions on [−1, 1].
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomPolicy;

impl Policy for RandomPolicy {
    fn history_len(&self) -> usize {
        0
    }

    fn action(&self, _: &Observation, _: &[Vec<f64>], _: &Episode, rng: &mut ChaCha8Rng) -> Result<f64> {
        Ok(rng.random_range(-1.0..=1.0))
    }
}

/// Returns of one evaluation point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub step: u64,
    pub seed: u64,
    pub returns: Vec<f64>,
    pub mean_return: f64,
    /// Seconds since the Unix epoch when the evaluation finished.
    pub wall_clock: f64,
}

impl EvalRecord {
    pub fn new(step: u64, seed: u64, returns: Vec<f64>) -> Self {
        let mean_return = mean(&returns);
        let wall_clock = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0.0, |d| d.as_secs_f64());
        Self {
            step,
            seed,
            returns,
            mean_return,
            wall_clock,
        }
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Plays one episode from `episode_seed` and returns its undiscounted return.
pub fn run_episode<P: Policy + ?Sized>(policy: &P, env: &Environment, episode_seed: u64) -> Result<f64> {
    run_episode_with(policy, env, episode_seed, |_, _| {})
}

/// As [`run_episode`], calling `on_step(episode, reward)` after every step.
pub fn run_episode_with<P, F>(policy: &P, env: &Environment, episode_seed: u64, mut on_step: F) -> Result<f64>
where
    P: Policy + ?Sized,
    F: FnMut(&Episode, f64),
{
    let mut env_rng = ChaCha8Rng::seed_from_u64(episode_seed);
    let mut policy_rng = ChaCha8Rng::seed_from_u64(episode_seed);
    policy_rng.set_stream(1);
    let (mut episode, mut obs) = env.reset(&mut env_rng);
    let mut history = HistoryWindow::new(policy.history_len(), env.observation_dim());
    let mut total = 0.0;
    loop {
        let a = policy.action(&obs, &history.frames(), &episode, &mut policy_rng)?;
        let res = env.step(&mut episode, a)?;
        total += res.reward;
        on_step(&episode, res.reward);
        if res.done {
            return Ok(total);
        }
        history.push(obs.as_slice());
        obs = res.observation;
    }
}

/// Draws `episodes` episode seeds from `rng` and evaluates them (in parallel
/// when the `parallel` feature is on; results do not depend on it).
pub fn evaluate<P: Policy + ?Sized, R: Rng + ?Sized>(
    policy: &P,
    env: &Environment,
    episodes: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let seeds = episode_seeds(rng, episodes);
    par::map(episodes, |i| run_episode(policy, env, seeds[i]))
        .into_iter()
        .collect()
}

/// The episode seeds [`evaluate`] would draw from `rng`.
pub fn episode_seeds<R: Rng + ?Sized>(rng: &mut R, episodes: usize) -> Vec<u64> {
    (0..episodes).map(|_| rng.random()).collect()
}

/// Plays one Complex-OA episode and writes a per-step CSV of agent,
/// reference-trajectory, obstacle and reward columns. Returns the episode
/// return.
pub fn write_trace<P: Policy + ?Sized>(policy: &P, env: &Environment, episode_seed: u64, path: &Path) -> Result<f64> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    let ret = run_episode_with(policy, env, episode_seed, |ep, _| {
        if let Episode::ComplexOa(e) = ep {
            if rows.is_empty() {
                rows.push(e.trace_header());
            }
            rows.push(e.trace_row());
        }
    })?;
    if rows.is_empty() {
        return Err(Error::Config("traces are only recorded for complex-oa".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(ret)
}
