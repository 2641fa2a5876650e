//! TD3 and its two partial-observability variants.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::model::{Inputs, Model};
use super::replay::{ReplayBuffer, SampledBatch};
use crate::error::{Error, Result};
use crate::nn::{all_finite, soft_update, zero_grads, Activation, AdamConfig, AdamState, Batch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentKind {
    #[serde(rename = "td3")]
    Td3,
    #[serde(rename = "td3-fs")]
    Td3Fs,
    #[serde(rename = "lstm-td3")]
    LstmTd3,
}

impl AgentKind {
    pub const ALL: [AgentKind; 3] = [AgentKind::Td3, AgentKind::Td3Fs, AgentKind::LstmTd3];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Td3 => "td3",
            AgentKind::Td3Fs => "td3-fs",
            AgentKind::LstmTd3 => "lstm-td3",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown agent '{s}' (expected td3, td3-fs or lstm-td3)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_size: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub tau: f64,
    pub exploration_noise: f64,
    pub target_noise: f64,
    pub target_noise_clip: f64,
    pub policy_delay: u64,
    pub start_steps: u64,
    pub update_after: u64,
    /// Frames of history for TD3-FS and LSTM-TD3; ignored by plain TD3.
    pub history_len: usize,
    /// Hidden widths of the TD3 / TD3-FS dense stacks.
    pub mlp_hidden: Vec<usize>,
    /// Width of the LSTM-TD3 memory, feature and integration layers.
    pub recurrent_width: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            batch_size: 32,
            buffer_size: 100_000,
            actor_lr: 1e-4,
            critic_lr: 1e-4,
            tau: 0.001,
            exploration_noise: 0.1,
            target_noise: 0.2,
            target_noise_clip: 0.5,
            policy_delay: 2,
            start_steps: 5000,
            update_after: 5000,
            history_len: 2,
            mlp_hidden: vec![400, 300],
            recurrent_width: 128,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("invalid hyperparameter: {what}")));
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1]");
        }
        if self.batch_size == 0 || self.buffer_size < self.batch_size {
            return bad("need 0 < batch_size <= buffer_size");
        }
        if !(self.actor_lr > 0.0 && self.critic_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(self.exploration_noise >= 0.0 && self.target_noise >= 0.0 && self.target_noise_clip >= 0.0) {
            return bad("noise scales must be non-negative");
        }
        if self.policy_delay == 0 {
            return bad("policy_delay must be at least 1");
        }
        if self.mlp_hidden.is_empty() || self.mlp_hidden.contains(&0) || self.recurrent_width == 0 {
            return bad("layer widths must be positive");
        }
        Ok(())
    }
}

/// Actor, twin critics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Networks {
    pub actor: Model,
    pub critic1: Model,
    pub critic2: Model,
}

/// Where a training action came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionSource {
    /// Uniform on [−1, 1] during the warm-up phase.
    Random,
    /// Deterministic policy plus clipped Gaussian exploration.
    Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateStats {
    /// 1-based index of this update call.
    pub call: u64,
    /// Mean of the two critics' squared TD errors.
    pub critic_loss: f64,
    /// `−mean Q₁(o, μ(o))`, present on delayed policy steps.
    pub actor_loss: Option<f64>,
    pub actor_updated: bool,
    pub targets_updated: bool,
    /// Clipped smoothing noise added to each target action.
    pub target_noise: Vec<f64>,
    pub targets: Vec<f64>,
}

/// Counters exposed for schedule checks and checkpoints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateCounters {
    pub update_calls: u64,
    pub actor_updates: u64,
    pub target_updates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Agent {
    kind: AgentKind,
    obs_dim: usize,
    hp: Hyperparams,
    online: Networks,
    target: Networks,
    actor_opt: AdamState,
    critic1_opt: AdamState,
    critic2_opt: AdamState,
    counters: UpdateCounters,
}

fn single(values: &[f64]) -> Batch {
    Batch::row_vector(values)
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(kind: AgentKind, obs_dim: usize, hp: Hyperparams, rng: &mut R) -> Result<Self> {
        hp.validate()?;
        if obs_dim == 0 {
            return Err(Error::Config("observation width must be positive".into()));
        }
        if kind == AgentKind::Td3Fs && hp.history_len == 0 {
            return Err(Error::Config("td3-fs needs history_len >= 1".into()));
        }
        let l = if kind == AgentKind::Td3 { 0 } else { hp.history_len };
        let online = match kind {
            AgentKind::Td3 | AgentKind::Td3Fs => {
                let input = obs_dim * (l + 1);
                let stacked = kind == AgentKind::Td3Fs;
                Networks {
                    actor: Model::mlp(input, &hp.mlp_hidden, Activation::Tanh, stacked, rng)?,
                    critic1: Model::mlp(input + 1, &hp.mlp_hidden, Activation::Linear, stacked, rng)?,
                    critic2: Model::mlp(input + 1, &hp.mlp_hidden, Activation::Linear, stacked, rng)?,
                }
            }
            AgentKind::LstmTd3 => {
                let w = hp.recurrent_width;
                Networks {
                    actor: Model::recurrent(obs_dim, obs_dim, l, w, Activation::Tanh, rng)?,
                    critic1: Model::recurrent(obs_dim, obs_dim + 1, l, w, Activation::Linear, rng)?,
                    critic2: Model::recurrent(obs_dim, obs_dim + 1, l, w, Activation::Linear, rng)?,
                }
            }
        };
        let actor_opt = AdamState::new(&online.actor, AdamConfig::with_learning_rate(hp.actor_lr));
        let critic_cfg = AdamConfig::with_learning_rate(hp.critic_lr);
        let critic1_opt = AdamState::new(&online.critic1, critic_cfg);
        let critic2_opt = AdamState::new(&online.critic2, critic_cfg);
        Ok(Self {
            kind,
            obs_dim,
            hp,
            target: online.clone(),
            online,
            actor_opt,
            critic1_opt,
            critic2_opt,
            counters: UpdateCounters::default(),
        })
    }

    pub fn kind(&self) -> AgentKind {
        self.kind
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    /// Frames of history the networks consume (0 for plain TD3).
    pub fn history_len(&self) -> usize {
        match self.kind {
            AgentKind::Td3 => 0,
            _ => self.hp.history_len,
        }
    }

    pub fn counters(&self) -> UpdateCounters {
        self.counters
    }

    pub fn online(&self) -> &Networks {
        &self.online
    }

    pub fn target(&self) -> &Networks {
        &self.target
    }

    /// Direct access for tooling and tests; training code goes through [`update`](Self::update).
    pub fn online_mut(&mut self) -> &mut Networks {
        &mut self.online
    }

    pub fn target_mut(&mut self) -> &mut Networks {
        &mut self.target
    }

    pub fn optimizers(&self) -> [&AdamState; 3] {
        [&self.actor_opt, &self.critic1_opt, &self.critic2_opt]
    }

    fn check_input(&self, obs: &[f64], history: &[Vec<f64>]) -> Result<()> {
        if obs.len() != self.obs_dim {
            return Err(Error::Config(format!(
                "observation has {} values, agent expects {}",
                obs.len(),
                self.obs_dim
            )));
        }
        let l = self.history_len();
        if history.len() != l || history.iter().any(|h| h.len() != self.obs_dim) {
            return Err(Error::Config(format!(
                "history must hold {l} frames of width {}",
                self.obs_dim
            )));
        }
        Ok(())
    }

    /// Deterministic policy output `μ(o, h)`.
    pub fn act(&self, obs: &[f64], history: &[Vec<f64>]) -> Result<f64> {
        self.check_input(obs, history)?;
        let o = single(obs);
        let h: Vec<Batch> = history.iter().map(|f| single(f)).collect();
        let out = self.online.actor.forward(Inputs { obs: &o, history: &h }, None)?;
        Ok(out.as_slice()[0])
    }

    /// Policy output plus `N(0, σ)` exploration noise, clipped to [−1, 1].
    /// Returns the clipped action and the raw noise sample.
    pub fn act_explore<R: Rng + ?Sized>(&self, obs: &[f64], history: &[Vec<f64>], rng: &mut R) -> Result<(f64, f64)> {
        let mu = self.act(obs, history)?;
        let noise = if self.hp.exploration_noise > 0.0 {
            Normal::new(0.0, self.hp.exploration_noise)
                .expect("validated scale")
                .sample(rng)
        } else {
            0.0
        };
        Ok(((mu + noise).clamp(-1.0, 1.0), noise))
    }

    /// Training-time action at global step `step`: uniform random while
    /// `step < start_steps`, exploring policy afterwards.
    pub fn act_training<R: Rng + ?Sized>(
        &self,
        step: u64,
        obs: &[f64],
        history: &[Vec<f64>],
        rng: &mut R,
    ) -> Result<(f64, ActionSource)> {
        if step < self.hp.start_steps {
            self.check_input(obs, history)?;
            Ok((rng.random_range(-1.0..=1.0), ActionSource::Random))
        } else {
            Ok((self.act_explore(obs, history, rng)?.0, ActionSource::Policy))
        }
    }

    /// Whether the schedule calls for an update after global step `step`.
    pub fn should_update(&self, step: u64, buffer: &ReplayBuffer) -> bool {
        step >= self.hp.update_after && buffer.len() >= self.hp.batch_size
    }

    /// Bootstrap targets `y = r + γ(1−d)·min_j Q'_j(o', ã)` with
    /// `ã = clip(μ'(o') + clip(ε, −c, c), −1, 1)`, `ε ~ N(0, σ̃)`.
    /// Returns targets and the clipped noise.
    pub fn compute_targets<R: Rng + ?Sized>(&self, batch: &SampledBatch, rng: &mut R) -> Result<(Vec<f64>, Vec<f64>)> {
        let next = Inputs {
            obs: &batch.next_obs,
            history: &batch.next_history,
        };
        let mu = self.target.actor.forward(next, None)?;
        let c = self.hp.target_noise_clip;
        let noise: Vec<f64> = if self.hp.target_noise > 0.0 {
            let dist = Normal::new(0.0, self.hp.target_noise).expect("validated scale");
            (0..mu.rows()).map(|_| dist.sample(rng).clamp(-c, c)).collect()
        } else {
            vec![0.0; mu.rows()]
        };
        let smoothed: Vec<f64> = mu
            .as_slice()
            .iter()
            .zip(&noise)
            .map(|(m, n)| (m + n).clamp(-1.0, 1.0))
            .collect();
        let a = Batch::from_vec(mu.rows(), 1, smoothed)?;
        let q1 = self.target.critic1.forward(next, Some(&a))?;
        let q2 = self.target.critic2.forward(next, Some(&a))?;
        let y = (0..mu.rows())
            .map(|i| {
                let q = q1.as_slice()[i].min(q2.as_slice()[i]);
                batch.rewards[i] + self.hp.gamma * (1.0 - batch.dones[i]) * q
            })
            .collect();
        Ok((y, noise))
    }

    /// One TD3 learning step on a mini-batch from `buffer`.
    pub fn update<R: Rng + ?Sized>(&mut self, buffer: &ReplayBuffer, rng: &mut R) -> Result<UpdateStats> {
        let batch = buffer.sample(self.hp.batch_size, self.history_len(), rng)?;
        self.update_on(&batch, rng)
    }

    /// As [`update`](Self::update), on an explicit mini-batch.
    pub fn update_on<R: Rng + ?Sized>(&mut self, batch: &SampledBatch, rng: &mut R) -> Result<UpdateStats> {
        if batch.obs.cols() != self.obs_dim || batch.history.len() != self.history_len() {
            return Err(Error::Config(
                "mini-batch does not match the agent's input shape".into(),
            ));
        }
        let (targets, target_noise) = self.compute_targets(batch, rng)?;
        let n = targets.len() as f64;
        let inputs = Inputs {
            obs: &batch.obs,
            history: &batch.history,
        };

        let mut critic_loss = 0.0;
        for which in 0..2 {
            let (critic, opt) = if which == 0 {
                (&mut self.online.critic1, &mut self.critic1_opt)
            } else {
                (&mut self.online.critic2, &mut self.critic2_opt)
            };
            let trace = critic.forward_trace(inputs, Some(&batch.actions))?;
            let q = trace.output().as_slice();
            let mut d = Vec::with_capacity(q.len());
            let mut loss = 0.0;
            for (qi, yi) in q.iter().zip(&targets) {
                let e = qi - yi;
                loss += e * e / n;
                d.push(2.0 * e / n);
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "critic {} loss at update call {}",
                    which + 1,
                    self.counters.update_calls + 1
                )));
            }
            critic_loss += loss / 2.0;
            let mut grads = zero_grads(critic);
            critic.backward(&trace, &Batch::from_vec(q.len(), 1, d)?, Some(&mut grads), None)?;
            opt.apply(critic, &grads)?;
        }
        self.counters.update_calls += 1;

        let mut stats = UpdateStats {
            call: self.counters.update_calls,
            critic_loss,
            actor_loss: None,
            actor_updated: false,
            targets_updated: false,
            target_noise,
            targets,
        };

        if self.counters.update_calls.is_multiple_of(self.hp.policy_delay) {
            let actor_trace = self.online.actor.forward_trace(inputs, None)?;
            let actions = actor_trace.output().clone();
            let q_trace = self.online.critic1.forward_trace(inputs, Some(&actions))?;
            let actor_loss = -q_trace.output().as_slice().iter().sum::<f64>() / n;
            if !actor_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "actor loss at update call {}",
                    self.counters.update_calls
                )));
            }
            let dq = Batch::from_vec(actions.rows(), 1, vec![-1.0 / n; actions.rows()])?;
            let da = self
                .online
                .critic1
                .backward(&q_trace, &dq, None, Some(1))?
                .expect("action gradient requested");
            let mut grads = zero_grads(&self.online.actor);
            self.online.actor.backward(&actor_trace, &da, Some(&mut grads), None)?;
            self.actor_opt.apply(&mut self.online.actor, &grads)?;
            self.counters.actor_updates += 1;

            soft_update(&mut self.target.actor, &self.online.actor, self.hp.tau)?;
            soft_update(&mut self.target.critic1, &self.online.critic1, self.hp.tau)?;
            soft_update(&mut self.target.critic2, &self.online.critic2, self.hp.tau)?;
            self.counters.target_updates += 1;

            stats.actor_loss = Some(actor_loss);
            stats.actor_updated = true;
            stats.targets_updated = true;
        }

        if !(all_finite(&self.online.actor) && all_finite(&self.online.critic1) && all_finite(&self.online.critic2)) {
            return Err(Error::NonFinite(format!(
                "network parameters after update call {}",
                self.counters.update_calls
            )));
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::agent::replay::Transition;
    use crate::nn::Parameterized;

    fn small_hp() -> Hyperparams {
        Hyperparams {
            batch_size: 4,
            buffer_size: 64,
            mlp_hidden: vec![8, 6],
            recurrent_width: 5,
            start_steps: 10,
            update_after: 10,
            ..Hyperparams::default()
        }
    }

    fn filled_buffer(dim: usize, n: usize, done_every: usize) -> ReplayBuffer {
        let mut buf = ReplayBuffer::new(64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut ep, mut step) = (0, 0);
        for _ in 0..n {
            let done = (step + 1) % done_every == 0;
            buf.push(Transition {
                obs: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: rng.random_range(-1.0..1.0),
                reward: rng.random_range(-1.0..1.0),
                next_obs: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
                done,
                episode: ep,
                step,
            });
            step += 1;
            if done {
                ep += 1;
                step = 0;
            }
        }
        buf
    }

    fn set_output_bias(m: &mut Model, value: f64) {
        let mut flat = vec![0.0; m.param_count()];
        *flat.last_mut().unwrap() = value;
        m.load_flat_params(&flat).unwrap();
    }

    #[test]
    fn parses_agent_names() {
        for k in AgentKind::ALL {
            assert_eq!(k.to_string().parse::<AgentKind>().unwrap(), k);
        }
        assert!("ddpg".parse::<AgentKind>().is_err());
    }

    #[test]
    fn targets_start_as_copies() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for kind in AgentKind::ALL {
            let agent = Td3Agent::new(kind, 4, small_hp(), &mut rng).unwrap();
            assert_eq!(agent.online(), agent.target());
        }
    }

    #[test]
    fn deterministic_act_and_zero_actor() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut agent = Td3Agent::new(AgentKind::LstmTd3, 3, small_hp(), &mut rng).unwrap();
        let o = [0.3, -0.2, 0.9];
        let h = vec![vec![0.1; 3], vec![0.0; 3]];
        assert_eq!(agent.act(&o, &h).unwrap(), agent.act(&o, &h).unwrap());
        let zeros = vec![0.0; agent.online().actor.param_count()];
        agent.online_mut().actor.load_flat_params(&zeros).unwrap();
        assert_eq!(agent.act(&o, &h).unwrap(), 0.0);
    }

    #[test]
    fn rejects_wrong_observation_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let agent = Td3Agent::new(AgentKind::Td3, 3, small_hp(), &mut rng).unwrap();
        assert!(matches!(agent.act(&[0.0; 4], &[]), Err(Error::Config(_))));
    }

    #[test]
    fn exploration_noise_has_configured_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let agent = Td3Agent::new(AgentKind::Td3, 3, small_hp(), &mut rng).unwrap();
        let o = [0.1, 0.2, 0.3];
        let n = 10_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| agent.act_explore(&o, &[], &mut rng).unwrap().1)
            .collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((var.sqrt() - 0.1).abs() < 0.005, "std {}", var.sqrt());
    }

    #[test]
    fn warm_up_actions_are_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let agent = Td3Agent::new(AgentKind::Td3, 2, small_hp(), &mut rng).unwrap();
        for step in 0..20 {
            let (a, src) = agent.act_training(step, &[0.0, 0.0], &[], &mut rng).unwrap();
            assert!((-1.0..=1.0).contains(&a));
            assert_eq!(src == ActionSource::Random, step < 10);
        }
    }

    #[test]
    fn terminal_target_is_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let agent = Td3Agent::new(AgentKind::Td3, 3, small_hp(), &mut rng).unwrap();
        let buf = filled_buffer(3, 12, 1);
        let batch = buf.sample(4, 0, &mut rng).unwrap();
        let (y, _) = agent.compute_targets(&batch, &mut rng).unwrap();
        assert_eq!(y, batch.rewards);
    }

    #[test]
    fn bootstrap_uses_smaller_target_critic() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut agent = Td3Agent::new(AgentKind::Td3, 3, small_hp(), &mut rng).unwrap();
        set_output_bias(&mut agent.target_mut().critic1, 5.0);
        set_output_bias(&mut agent.target_mut().critic2, 3.0);
        let buf = filled_buffer(3, 12, 1000);
        let batch = buf.sample(4, 0, &mut rng).unwrap();
        let (y, _) = agent.compute_targets(&batch, &mut rng).unwrap();
        for (yi, ri) in y.iter().zip(&batch.rewards) {
            assert!((yi - (ri + 0.99 * 3.0)).abs() < 1e-12);
        }
        set_output_bias(&mut agent.target_mut().critic1, -2.0);
        let (y, _) = agent.compute_targets(&batch, &mut rng).unwrap();
        for (yi, ri) in y.iter().zip(&batch.rewards) {
            assert!((yi - (ri - 0.99 * 2.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn delayed_policy_schedule_and_noise_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let buf = filled_buffer(3, 40, 7);
        for kind in AgentKind::ALL {
            let mut agent = Td3Agent::new(kind, 3, small_hp(), &mut rng).unwrap();
            let mut fired = Vec::new();
            for _ in 0..4 {
                let before = agent.target().clone();
                let stats = agent.update(&buf, &mut rng).unwrap();
                assert!(stats.target_noise.iter().all(|n| n.abs() <= 0.5));
                assert_eq!(stats.actor_updated, stats.targets_updated);
                if !stats.targets_updated {
                    assert_eq!(&before, agent.target());
                }
                fired.push(stats.actor_updated);
            }
            assert_eq!(fired, vec![false, true, false, true], "{kind}");
            assert_eq!(agent.counters().actor_updates, 2);
        }
    }

    #[test]
    fn target_drift_is_bounded_by_soft_update() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let buf = filled_buffer(3, 40, 9);
        let mut agent = Td3Agent::new(AgentKind::LstmTd3, 3, small_hp(), &mut rng).unwrap();
        for _ in 0..6 {
            let old = agent.target().actor.flat_params();
            let stats = agent.update(&buf, &mut rng).unwrap();
            let online = agent.online().actor.flat_params();
            let new = agent.target().actor.flat_params();
            for i in 0..old.len() {
                let bound = 0.001 * (online[i] - old[i]).abs() + 1e-15;
                assert!((new[i] - old[i]).abs() <= bound);
                if !stats.targets_updated {
                    assert_eq!(new[i], old[i]);
                }
            }
        }
    }

    /// One-step episodes with reward −(a − o/2)²: the greedy actor must learn
    /// to output half its observation.
    #[test]
    fn actor_learns_contextual_bandit() {
        for kind in [AgentKind::Td3, AgentKind::LstmTd3] {
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let hp = Hyperparams {
                batch_size: 32,
                buffer_size: 8000,
                actor_lr: 1e-3,
                critic_lr: 1e-3,
                tau: 0.01,
                exploration_noise: 0.3,
                mlp_hidden: vec![32, 32],
                recurrent_width: 16,
                start_steps: 200,
                update_after: 200,
                ..Hyperparams::default()
            };
            let mut agent = Td3Agent::new(kind, 1, hp, &mut rng).unwrap();
            let mut buf = ReplayBuffer::new(8000).unwrap();
            let history = vec![vec![0.0]; agent.history_len()];
            for step in 0..6000u64 {
                let o: f64 = rng.random_range(-1.0..1.0);
                let (a, _) = agent.act_training(step, &[o], &history, &mut rng).unwrap();
                buf.push(Transition {
                    obs: vec![o],
                    action: a,
                    reward: -(a - 0.5 * o).powi(2),
                    next_obs: vec![0.0],
                    done: true,
                    episode: step,
                    step: 0,
                });
                if agent.should_update(step, &buf) {
                    agent.update(&buf, &mut rng).unwrap();
                }
            }
            let worst = (-4..=4)
                .map(|i| {
                    let o = i as f64 / 4.0;
                    (agent.act(&[o], &history).unwrap() - 0.5 * o).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 0.1, "{kind}: worst action error {worst}");
        }
    }

    #[test]
    fn critic_loss_decreases_on_fixed_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let hp = Hyperparams {
            critic_lr: 1e-3,
            gamma: 0.0,
            ..small_hp()
        };
        let mut agent = Td3Agent::new(AgentKind::Td3, 3, hp, &mut rng).unwrap();
        let buf = filled_buffer(3, 12, 1000);
        let batch = buf.gather(&[0, 1, 2, 3], 0).unwrap();
        let first = agent.update_on(&batch, &mut rng).unwrap().critic_loss;
        let mut last = first;
        for _ in 0..300 {
            last = agent.update_on(&batch, &mut rng).unwrap().critic_loss;
        }
        assert!(last < 0.1 * first, "{first} -> {last}");
    }

    #[test]
    fn recurrent_agent_without_history_matches_dense_agent() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let hp = Hyperparams {
            history_len: 0,
            mlp_hidden: vec![5, 5],
            ..small_hp()
        };
        let rec = Td3Agent::new(AgentKind::LstmTd3, 3, hp.clone(), &mut rng).unwrap();
        let mut dense = Td3Agent::new(AgentKind::Td3, 3, hp, &mut rng).unwrap();
        let t = dense.target_mut();
        for (dst, src) in [
            (&mut t.actor, &rec.target().actor),
            (&mut t.critic1, &rec.target().critic1),
            (&mut t.critic2, &rec.target().critic2),
        ] {
            dst.load_flat_params(&src.flat_params()).unwrap();
        }
        let buf = filled_buffer(3, 20, 6);
        let batch = buf.gather(&[1, 5, 9, 13], 0).unwrap();
        let (y_rec, _) = rec.compute_targets(&batch, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let (y_dense, _) = dense
            .compute_targets(&batch, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap();
        assert_eq!(y_rec, y_dense);
    }
}
