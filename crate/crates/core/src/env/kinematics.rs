//! Point-mass dynamics shared by both environments.
//!
//! The agent moves longitudinally at a constant speed and controls its
//! lateral motion through a jerk command in `[-1, 1]`. Obstacles move with
//! constant velocities. Positions advance with the trapezoidal (ballistic)
//! rule, the lateral speed with an explicit Euler step.

use serde::{Deserialize, Serialize};

use super::ObservationMode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinematicParams {
    /// Largest change of lateral acceleration per step (m/s²).
    pub max_accel_change: f64,
    /// Lateral acceleration bound (m/s²).
    pub max_lateral_accel: f64,
    /// Longitudinal speed bound (m/s).
    pub max_longitudinal_speed: f64,
    /// Lateral speed bound (m/s).
    pub max_lateral_speed: f64,
    /// Simulation step (s).
    pub dt: f64,
    pub x_scale: f64,
    pub y_scale: f64,
}

impl KinematicParams {
    /// Table values shared by both environments with the given observation scales.
    pub fn with_scales(x_scale: f64, y_scale: f64) -> Self {
        Self {
            max_accel_change: 0.005,
            max_lateral_accel: 0.01,
            max_longitudinal_speed: 5.0,
            max_lateral_speed: 5.0,
            dt: 5.0,
            x_scale,
            y_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.max_accel_change,
            self.max_lateral_accel,
            self.max_longitudinal_speed,
            self.max_lateral_speed,
            self.dt,
            self.x_scale,
            self.y_scale,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Config(format!(
                "kinematic parameters must be positive: {self:?}"
            )));
        }
        if self.max_accel_change > self.max_lateral_accel {
            return Err(Error::Config(
                "maximum acceleration change exceeds maximum acceleration".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AgentState {
    pub x: f64,
    pub y: f64,
    /// Longitudinal speed, constant within an episode.
    pub vx: f64,
    pub vy: f64,
    pub ay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PassingRule {
    Right,
    Left,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleState {
    /// 1-based obstacle index; observation blocks follow ascending id.
    pub id: usize,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub rule: PassingRule,
}

/// Flat, normalized feature vector seen by the agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub mode: ObservationMode,
    pub values: Vec<f64>,
}

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Width of the observation vector for `obstacles` obstacles.
pub fn observation_dim(mode: ObservationMode, obstacles: usize) -> usize {
    match mode {
        ObservationMode::Mdp => 2 + 4 * obstacles,
        ObservationMode::Rv => 2 + 2 * obstacles,
    }
}

/// Maps a jerk command onto the lateral acceleration.
///
/// Returns the new state and whether `action` had to be clamped into `[-1, 1]`.
pub fn apply_action(agent: AgentState, action: f64, p: &KinematicParams) -> (AgentState, bool) {
    let clamped = if action.is_nan() { 0.0 } else { action.clamp(-1.0, 1.0) };
    let out_of_range = clamped != action;
    let ay = (agent.ay + p.max_accel_change * clamped).clamp(-p.max_lateral_accel, p.max_lateral_accel);
    (AgentState { ay, ..agent }, out_of_range)
}

/// Advances the agent one step using its (already updated) acceleration.
pub fn integrate_agent(agent: AgentState, p: &KinematicParams) -> AgentState {
    let vy = (agent.vy + agent.ay * p.dt).clamp(-p.max_lateral_speed, p.max_lateral_speed);
    AgentState {
        x: agent.x + agent.vx * p.dt,
        y: agent.y + 0.5 * (agent.vy + vy) * p.dt,
        vy,
        ..agent
    }
}

/// Moves an obstacle with its constant velocity for `dt` seconds.
pub fn integrate_obstacle(obstacle: ObstacleState, dt: f64) -> ObstacleState {
    ObstacleState {
        x: obstacle.x + obstacle.vx * dt,
        y: obstacle.y + obstacle.vy * dt,
        ..obstacle
    }
}

/// One simulation step for the agent and all obstacles (in place).
pub fn integrate(agent: &mut AgentState, obstacles: &mut [ObstacleState], p: &KinematicParams) {
    *agent = integrate_agent(*agent, p);
    for o in obstacles {
        *o = integrate_obstacle(*o, p.dt);
    }
}

/// Normalized observation; obstacles are emitted in the order given.
pub fn observe(
    agent: &AgentState,
    obstacles: &[ObstacleState],
    p: &KinematicParams,
    mode: ObservationMode,
) -> Observation {
    let mut values = Vec::with_capacity(observation_dim(mode, obstacles.len()));
    values.push(agent.ay / p.max_lateral_accel);
    values.push(agent.vy / p.max_lateral_speed);
    for o in obstacles {
        if mode == ObservationMode::Mdp {
            values.push((agent.vx - o.vx) / p.max_longitudinal_speed);
            values.push((agent.vy - o.vy) / p.max_lateral_speed);
        }
        values.push((agent.x - o.x) / p.x_scale);
        values.push((agent.y - o.y) / p.y_scale);
    }
    Observation { mode, values }
}

/// Longitudinal time-to-collision in seconds; negative once the obstacle is behind.
pub fn ttc(agent: &AgentState, obstacle: &ObstacleState) -> Result<f64> {
    let closing = agent.vx - obstacle.vx;
    if closing == 0.0 {
        return Err(Error::UndefinedTtc);
    }
    Ok((obstacle.x - agent.x) / closing)
}

/// Drops the two relative-velocity entries of every obstacle block.
pub fn project_to_rv(mdp: &[f64]) -> Vec<f64> {
    let mut out = mdp[..2].to_vec();
    for block in mdp[2..].chunks(4) {
        out.extend_from_slice(&block[2..]);
    }
    out
}
