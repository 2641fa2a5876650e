//! Complex-OA: twelve obstacles with passing rules, recycled along a random
//! reference corridor.
//!
//! Obstacles `1..=N/2` must be passed on the right, the rest on the left.
//! Whenever two obstacles of one group are behind the agent, the one that
//! passed first is re-placed ahead of the group. New obstacles are anchored to
//! an exponentially smoothed AR(1) lateral path so that, at the moment the
//! agent reaches them, they sit a sampled offset beside that path. The reward
//! is a Gaussian proximity penalty against the most threatening obstacle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::kinematics::{self, AgentState, KinematicParams, Observation, ObstacleState, PassingRule};
use super::ObservationMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexOaConfig {
    pub kinematics: KinematicParams,
    /// Even number of obstacles, split evenly between the two passing rules.
    pub obstacles: usize,
    /// Width of the window a recycled obstacle's TTC is drawn from (s).
    pub ttc_spacing_max: f64,
    pub ar_phi: f64,
    /// Variance of the AR(1) innovation (m²).
    pub ar_variance: f64,
    /// Exponential smoothing factor of the reference path.
    pub smoothing: f64,
    /// Lateral offset from the path at crossing: N(mean, variance), floored at `offset_min` (m, m²).
    pub offset_mean: f64,
    pub offset_variance: f64,
    pub offset_min: f64,
    /// Reward widths (m², s²).
    pub reward_lateral_variance: f64,
    pub reward_ttc_variance: f64,
    /// Fixed episode length in steps.
    pub horizon: usize,
    pub min_agent_speed: f64,
    /// Sampled obstacle speeds closer than this to the agent's are re-drawn (m/s).
    pub min_relative_speed: f64,
}

impl Default for ComplexOaConfig {
    fn default() -> Self {
        Self {
            kinematics: KinematicParams::with_scales(3000.0, 3000.0),
            obstacles: 12,
            ttc_spacing_max: 300.0,
            ar_phi: 0.99,
            ar_variance: 28.3,
            smoothing: 0.03,
            offset_mean: 100.0,
            offset_variance: 50.0,
            offset_min: 40.0,
            reward_lateral_variance: 25.0,
            reward_ttc_variance: 25.0,
            horizon: 500,
            min_agent_speed: 1.0,
            min_relative_speed: 0.01,
        }
    }
}

impl ComplexOaConfig {
    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        self.kinematics.validate()?;
        let positive = [
            self.ttc_spacing_max,
            self.ar_variance,
            self.offset_variance,
            self.reward_lateral_variance,
            self.reward_ttc_variance,
            self.min_agent_speed,
        ];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config("complex-oa widths and variances must be positive".into()));
        }
        if self.obstacles < 2 || !self.obstacles.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "complex-oa needs an even obstacle count ≥ 2, got {}",
                self.obstacles
            )));
        }
        if !(self.offset_min < self.offset_mean) {
            return Err(Error::Config("complex-oa offset floor must be below its mean".into()));
        }
        if !(self.ar_phi.abs() < 1.0) {
            return Err(Error::Config("AR(1) coefficient must satisfy |φ| < 1".into()));
        }
        if !(self.smoothing > 0.0 && self.smoothing <= 1.0) {
            return Err(Error::Config("smoothing factor must lie in (0, 1]".into()));
        }
        if self.horizon == 0 {
            return Err(Error::Config("complex-oa horizon must be positive".into()));
        }
        if self.min_relative_speed < 0.0 || self.min_relative_speed >= self.kinematics.max_longitudinal_speed {
            return Err(Error::Config("minimum relative speed out of range".into()));
        }
        Ok(())
    }

    fn group_size(&self) -> usize {
        self.obstacles / 2
    }

    fn rule_of(&self, id: usize) -> PassingRule {
        if id <= self.group_size() {
            PassingRule::Right
        } else {
            PassingRule::Left
        }
    }
}

/// Long-run variance `σ²/(1−φ²)` of a stationary AR(1) process.
pub fn ar1_stationary_variance(phi: f64, innovation_variance: f64) -> f64 {
    innovation_variance / (1.0 - phi * phi)
}

/// Lateral reference path: exponentially smoothed AR(1), indexed by step.
///
/// `X₀ = 0`, `X_{t+1} = φX_t + u`, `u ~ N(0, σ²)`; the path starts at `X₀` and
/// follows `y_t = βX_t + (1−β)y_{t−1}`. Values are generated on demand from a
/// private RNG, so the path is a pure function of its seed.
#[derive(Debug, Clone)]
pub struct ReferenceTrajectory {
    phi: f64,
    beta: f64,
    innovation: Normal<f64>,
    rng: ChaCha8Rng,
    ar: Vec<f64>,
    path: Vec<f64>,
}

impl ReferenceTrajectory {
    pub fn new(phi: f64, innovation_variance: f64, beta: f64, rng: ChaCha8Rng) -> Result<Self> {
        let innovation = Normal::new(0.0, innovation_variance.sqrt())
            .map_err(|e| Error::Config(format!("AR(1) innovation: {e}")))?;
        Ok(Self {
            phi,
            beta,
            innovation,
            rng,
            ar: vec![0.0],
            path: vec![0.0],
        })
    }

    fn extend_to(&mut self, index: usize) {
        while self.path.len() <= index {
            let x_prev = *self.ar.last().expect("non-empty");
            let y_prev = *self.path.last().expect("non-empty");
            let x = self.phi * x_prev + self.innovation.sample(&mut self.rng);
            self.ar.push(x);
            self.path.push(self.beta * x + (1.0 - self.beta) * y_prev);
        }
    }

    /// Smoothed path at step `index`.
    pub fn value(&mut self, index: usize) -> f64 {
        self.extend_to(index);
        self.path[index]
    }

    /// Generated prefix of the smoothed path.
    pub fn path(&self) -> &[f64] {
        &self.path
    }

    /// Generated prefix of the underlying AR(1) state.
    pub fn ar_states(&self) -> &[f64] {
        &self.ar
    }

    pub fn ensure_len(&mut self, len: usize) {
        if len > 0 {
            self.extend_to(len - 1);
        }
    }
}

/// One placement of an obstacle (initial layout or recycling).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub id: usize,
    /// Step at which the obstacle was placed.
    pub step: usize,
    pub ttc: f64,
    /// Sampled lateral offset from the reference path at crossing.
    pub offset: f64,
    /// Step whose path value anchors the crossing position.
    pub crossing_step: usize,
    pub initial: bool,
    pub state: ObstacleState,
    pub agent: AgentState,
}

#[derive(Debug, Clone)]
pub struct ComplexOaEpisode {
    config: ComplexOaConfig,
    agent: AgentState,
    obstacles: Vec<ObstacleState>,
    trajectory: ReferenceTrajectory,
    rng: ChaCha8Rng,
    offset: Normal<f64>,
    steps: usize,
    done: bool,
    clamped_actions: usize,
    placements: Vec<Placement>,
    last_reward: f64,
}

impl ComplexOaEpisode {
    pub fn reset<R: Rng + ?Sized>(config: &ComplexOaConfig, rng: &mut R) -> Self {
        let p = config.kinematics;
        let vx = rng.random_range(config.min_agent_speed..=p.max_longitudinal_speed);
        let mut own = ChaCha8Rng::from_seed(rng.random());
        let traj_rng = ChaCha8Rng::from_seed(own.random());
        let mut trajectory = ReferenceTrajectory::new(config.ar_phi, config.ar_variance, config.smoothing, traj_rng)
            .expect("validated config");
        let max_ttc = config.group_size() as f64 * config.ttc_spacing_max;
        trajectory.ensure_len(config.horizon + (max_ttc / p.dt).ceil() as usize + 2);
        let offset = Normal::new(config.offset_mean, config.offset_variance.sqrt()).expect("validated config");
        let agent = AgentState {
            vx,
            ..AgentState::default()
        };
        let mut ep = Self {
            config: config.clone(),
            agent,
            obstacles: Vec::with_capacity(config.obstacles),
            trajectory,
            rng: own,
            offset,
            steps: 0,
            done: false,
            clamped_actions: 0,
            placements: Vec::new(),
            last_reward: 0.0,
        };
        let group = config.group_size();
        for first in [1, group + 1] {
            let mut latest = 0.0_f64;
            for id in first..first + group {
                let ttc = ep.rng.random_range(latest..=latest + config.ttc_spacing_max);
                let placeholder = ObstacleState {
                    id,
                    x: 0.0,
                    y: 0.0,
                    vx: 0.0,
                    vy: 0.0,
                    rule: config.rule_of(id),
                };
                ep.obstacles.push(placeholder);
                ep.place(id - 1, ttc, true);
                latest = latest.max(ttc);
            }
        }
        ep.last_reward = ep.reward();
        ep
    }

    /// Samples velocities, offset and position for obstacle slot `slot` at `ttc`.
    fn place(&mut self, slot: usize, ttc: f64, initial: bool) {
        let p = self.config.kinematics;
        let vx = loop {
            let v = self
                .rng
                .random_range(-p.max_longitudinal_speed..=p.max_longitudinal_speed);
            if (self.agent.vx - v).abs() > self.config.min_relative_speed {
                break v;
            }
        };
        let vy = self.rng.random_range(-p.max_lateral_speed..=p.max_lateral_speed);
        let x = (self.agent.vx - vx) * ttc + self.agent.x;
        let offset = self.offset.sample(&mut self.rng).max(self.config.offset_min);
        let crossing_step = self.steps + (ttc / p.dt).round().max(0.0) as usize;
        let anchor = self.trajectory.value(crossing_step);
        let rule = self.obstacles[slot].rule;
        let side = if rule == PassingRule::Right { offset } else { -offset };
        let y = anchor + side - vy * ttc;
        let state = ObstacleState {
            id: self.obstacles[slot].id,
            x,
            y,
            vx,
            vy,
            rule,
        };
        self.obstacles[slot] = state;
        self.placements.push(Placement {
            id: state.id,
            step: self.steps,
            ttc,
            offset,
            crossing_step,
            initial,
            state,
            agent: self.agent,
        });
    }

    fn ttc_of(&self, o: &ObstacleState) -> f64 {
        kinematics::ttc(&self.agent, o).expect("obstacle speeds never equal the agent's")
    }

    /// Current TTC of every obstacle, in id order.
    pub fn ttcs(&self) -> Vec<f64> {
        self.obstacles.iter().map(|o| self.ttc_of(o)).collect()
    }

    /// Recycles passed obstacles until each group has at most one behind the agent.
    pub fn maybe_replace(&mut self) {
        let group = self.config.group_size();
        for range in [0..group, group..2 * group] {
            loop {
                let ttcs: Vec<f64> = self.obstacles[range.clone()].iter().map(|o| self.ttc_of(o)).collect();
                let passed = ttcs.iter().filter(|&&t| t < 0.0).count();
                if passed < 2 {
                    break;
                }
                let (oldest, _) = ttcs
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.total_cmp(b.1))
                    .expect("group is non-empty");
                let latest = ttcs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let ttc = self.rng.random_range(latest..=latest + self.config.ttc_spacing_max);
                self.place(range.start + oldest, ttc, false);
            }
        }
    }

    /// Proximity penalty of the most threatening obstacle, in `[-1, 0]`.
    pub fn reward(&self) -> f64 {
        self.obstacles
            .iter()
            .map(|o| obstacle_reward(&self.config, &self.agent, o, self.ttc_of(o)))
            .fold(0.0, f64::min)
    }

    pub fn observe(&self, mode: ObservationMode) -> Observation {
        kinematics::observe(&self.agent, &self.obstacles, &self.config.kinematics, mode)
    }

    pub fn step(&mut self, action: f64) -> Result<(f64, bool)> {
        if self.done {
            return Err(Error::Contract("step on a finished complex-oa episode".into()));
        }
        let p = self.config.kinematics;
        let (agent, clamped) = kinematics::apply_action(self.agent, action, &p);
        self.clamped_actions += usize::from(clamped);
        self.agent = agent;
        kinematics::integrate(&mut self.agent, &mut self.obstacles, &p);
        self.steps += 1;
        self.maybe_replace();
        let r = self.reward();
        self.last_reward = r;
        self.done = self.steps >= self.config.horizon;
        Ok((r, self.done))
    }

    pub fn config(&self) -> &ComplexOaConfig {
        &self.config
    }

    pub fn agent(&self) -> &AgentState {
        &self.agent
    }

    /// Test hook: overwrite the agent's lateral position.
    pub fn set_agent_y(&mut self, y: f64) {
        self.agent.y = y;
    }

    pub fn obstacles(&self) -> &[ObstacleState] {
        &self.obstacles
    }

    pub fn placements(&self) -> &[Placement] {
        &self.placements
    }

    pub fn trajectory(&self) -> &ReferenceTrajectory {
        &self.trajectory
    }

    /// Reference path value at `step`, extending the path if needed.
    pub fn trajectory_at(&mut self, step: usize) -> f64 {
        self.trajectory.value(step)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn clamped_actions(&self) -> usize {
        self.clamped_actions
    }

    /// CSV header matching [`Self::trace_row`].
    pub fn trace_header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["t", "agent_x", "agent_y", "agent_vx", "agent_vy", "agent_ay"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for o in &self.obstacles {
            for field in ["x", "y", "vx", "vy"] {
                h.push(format!("obs{}_{}", o.id, field));
            }
        }
        h.push("y_traj".into());
        h.push("reward".into());
        h
    }

    /// Current state as one trace record.
    pub fn trace_row(&self) -> Vec<String> {
        let a = &self.agent;
        let mut row = vec![
            self.steps.to_string(),
            a.x.to_string(),
            a.y.to_string(),
            a.vx.to_string(),
            a.vy.to_string(),
            a.ay.to_string(),
        ];
        for o in &self.obstacles {
            row.extend([o.x, o.y, o.vx, o.vy].iter().map(f64::to_string));
        }
        let traj = self.trajectory.path().get(self.steps).copied().unwrap_or(f64::NAN);
        row.push(traj.to_string());
        row.push(self.last_reward.to_string());
        row
    }
}

/// `φ(z)/φ(0)` for the standard normal density.
fn density_ratio(z: f64) -> f64 {
    (-0.5 * z * z).exp()
}

/// Penalty of one obstacle: Gaussian in TTC times a one-sided lateral Gaussian.
///
/// For a 'right' obstacle the lateral term is `max(0, y_obstacle − y_agent)`,
/// for a 'left' one `max(0, y_agent − y_obstacle)`; obstacles without a rule
/// use the absolute lateral distance.
pub fn obstacle_reward(config: &ComplexOaConfig, agent: &AgentState, o: &ObstacleState, ttc: f64) -> f64 {
    let sigma_ttc = config.reward_ttc_variance.sqrt();
    let sigma_y = config.reward_lateral_variance.sqrt();
    let lateral = match o.rule {
        PassingRule::Right => (o.y - agent.y).max(0.0),
        PassingRule::Left => (agent.y - o.y).max(0.0),
        PassingRule::None => (o.y - agent.y).abs(),
    };
    -density_ratio(ttc / sigma_ttc) * density_ratio(lateral / sigma_y)
}
