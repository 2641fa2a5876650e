//! Minimal differentiable-network kernel.
//!
//! Dense layers and an LSTM cell with hand-written batched backward passes,
//! Adam, and Polyak (soft) target updates. Everything is `f64`. Parameters of
//! each component live in one flat vector so optimizers, target tracking and
//! checkpoints can treat every network the same way through [`Parameterized`].

mod adam;
mod batch;
mod dense;
mod init;
mod lstm;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use batch::Batch;
pub use dense::{Activation, DenseNet, DenseTrace, LayerShape};
pub use lstm::{LstmCell, LstmState, LstmTrace};
pub use params::{all_finite, soft_update, zero_grads, Grads, Parameterized};

pub(crate) use batch::gemm;
pub(crate) use init::uniform_fan_in;
