//! Replay, history handling and the TD3 family of agents.

mod history;
mod model;
mod replay;
mod td3;

pub use history::{stack_frames, HistoryWindow};
pub use model::{Inputs, Model, ModelTrace};
pub use replay::{ReplayBuffer, SampledBatch, Transition};
pub use td3::{ActionSource, AgentKind, Hyperparams, Networks, Td3Agent, UpdateCounters, UpdateStats};
