//! Simple-OA: a two-obstacle gate drifting laterally at constant speed.
//!
//! The agent has to be between the two obstacles at the moment it passes
//! them. The only non-zero reward is the terminal ±100.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kinematics::{self, AgentState, KinematicParams, Observation, ObstacleState, PassingRule};
use super::ObservationMode;
use crate::error::{Error, Result};

pub const OBSTACLES: usize = 2;
pub const SUCCESS_REWARD: f64 = 100.0;
pub const FAILURE_REWARD: f64 = -100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimpleOaConfig {
    pub kinematics: KinematicParams,
    /// Gate midpoint at crossing time is drawn from `[-y_max, y_max]` (m).
    pub y_max: f64,
    /// Lateral distance between the two obstacles (m).
    pub gap: f64,
    /// Range of the initial time-to-collision (s).
    pub ttc0_min: f64,
    pub ttc0_max: f64,
    /// Lower bound of the agent's longitudinal speed (m/s).
    pub min_agent_speed: f64,
}

impl Default for SimpleOaConfig {
    fn default() -> Self {
        Self {
            kinematics: KinematicParams::with_scales(1500.0, 1700.0),
            y_max: 200.0,
            gap: 50.0,
            ttc0_min: 280.0,
            ttc0_max: 320.0,
            min_agent_speed: 1.0,
        }
    }
}

impl SimpleOaConfig {
    pub fn validate(&self) -> Result<()> {
        self.kinematics.validate()?;
        if !(self.gap > 0.0 && self.y_max > 0.0) {
            return Err(Error::Config("simple-oa gap and y_max must be positive".into()));
        }
        if !(self.ttc0_min > 0.0 && self.ttc0_max >= self.ttc0_min) {
            return Err(Error::Config(
                "simple-oa TTC₀ range must be positive and ordered".into(),
            ));
        }
        if !(self.min_agent_speed > 0.0 && self.min_agent_speed <= self.kinematics.max_longitudinal_speed) {
            return Err(Error::Config("simple-oa agent speed range is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimpleOaEpisode {
    params: KinematicParams,
    gap: f64,
    agent: AgentState,
    /// `[upper, lower]`: obstacle 1 sits `gap` above obstacle 2.
    obstacles: [ObstacleState; OBSTACLES],
    steps: usize,
    done: bool,
    ttc0: f64,
    crossing_midpoint: f64,
    clamped_actions: usize,
}

const GRID: f64 = 1.0 / (1u64 << 40) as f64;

fn on_grid(v: f64) -> f64 {
    (v / GRID).round() * GRID
}

impl SimpleOaEpisode {
    pub fn reset<R: Rng + ?Sized>(config: &SimpleOaConfig, rng: &mut R) -> Self {
        let p = config.kinematics;
        let vx = rng.random_range(config.min_agent_speed..=p.max_longitudinal_speed);
        let ttc0 = rng.random_range(config.ttc0_min..=config.ttc0_max);
        let vy = rng.random_range(-p.max_lateral_speed..=p.max_lateral_speed);
        let crossing_midpoint = rng.random_range(-config.y_max..=config.y_max);
        let agent = AgentState {
            vx,
            ..AgentState::default()
        };
        Self::from_parts(config, agent, ttc0, vy, crossing_midpoint)
    }

    /// Deterministic construction from the sampled quantities.
    pub fn from_parts(
        config: &SimpleOaConfig,
        agent: AgentState,
        ttc0: f64,
        gate_vy: f64,
        crossing_midpoint: f64,
    ) -> Self {
        // Lateral gate quantities live on a 2^-40 m grid, so every obstacle
        // position and per-step displacement is exactly representable while
        // |y| < 4096 m and the two obstacles stay exactly `gap` apart.
        let gate_vy = on_grid(gate_vy);
        let midpoint = on_grid(crossing_midpoint - gate_vy * ttc0);
        let x = agent.x + agent.vx * ttc0;
        let make = |id, y| ObstacleState {
            id,
            x,
            y,
            vx: 0.0,
            vy: gate_vy,
            rule: PassingRule::None,
        };
        Self {
            params: config.kinematics,
            gap: config.gap,
            agent,
            obstacles: [
                make(1, midpoint + 0.5 * config.gap),
                make(2, midpoint - 0.5 * config.gap),
            ],
            steps: 0,
            done: false,
            ttc0,
            crossing_midpoint,
            clamped_actions: 0,
        }
    }

    pub fn observe(&self, mode: ObservationMode) -> Observation {
        kinematics::observe(&self.agent, &self.obstacles, &self.params, mode)
    }

    pub fn step(&mut self, action: f64) -> Result<(f64, bool)> {
        if self.done {
            return Err(Error::Contract("step on a finished simple-oa episode".into()));
        }
        let (agent, clamped) = kinematics::apply_action(self.agent, action, &self.params);
        self.clamped_actions += usize::from(clamped);
        self.agent = agent;
        kinematics::integrate(&mut self.agent, &mut self.obstacles, &self.params);
        self.steps += 1;
        if self.agent.x > self.obstacles[0].x {
            self.done = true;
            let [upper, lower] = self.obstacles;
            let inside = self.agent.y > lower.y && self.agent.y < upper.y;
            Ok((if inside { SUCCESS_REWARD } else { FAILURE_REWARD }, true))
        } else {
            Ok((0.0, false))
        }
    }

    /// Hand-coded controller with full state access.
    ///
    /// Predicts the gate midpoint at the terminal step and picks the jerk that
    /// moves the acceleration toward the constant acceleration that would land
    /// the agent there.
    pub fn oracle_action(&self) -> f64 {
        let p = &self.params;
        let n = self.steps_to_go() as f64;
        let gate = &self.obstacles;
        let midpoint = 0.5 * (gate[0].y + gate[1].y);
        let target = midpoint + gate[0].vy * n * p.dt;
        let a = &self.agent;
        let needed = 2.0 * (target - a.y - n * a.vy * p.dt) / (n * n * p.dt * p.dt);
        ((needed - a.ay) / p.max_accel_change).clamp(-1.0, 1.0)
    }

    /// Steps left until the agent passes the gate (at least 1 while running).
    pub fn steps_to_go(&self) -> usize {
        let gap = self.obstacles[0].x - self.agent.x;
        let per_step = self.agent.vx * self.params.dt;
        if gap < 0.0 {
            return 0;
        }
        (gap / per_step).floor() as usize + 1
    }

    pub fn agent(&self) -> &AgentState {
        &self.agent
    }

    pub fn agent_mut(&mut self) -> &mut AgentState {
        &mut self.agent
    }

    pub fn obstacles(&self) -> &[ObstacleState; OBSTACLES] {
        &self.obstacles
    }

    /// Shifts the whole scene laterally.
    pub fn translate_y(&mut self, dy: f64) {
        self.agent.y += dy;
        for o in &mut self.obstacles {
            o.y += dy;
        }
        self.crossing_midpoint += dy;
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn ttc0(&self) -> f64 {
        self.ttc0
    }

    /// Gate midpoint at the sampled crossing time.
    pub fn crossing_midpoint(&self) -> f64 {
        self.crossing_midpoint
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn clamped_actions(&self) -> usize {
        self.clamped_actions
    }
}
