//! Experiment driver: configuration, seeded training, evaluation, artefacts
//! and cross-seed reports.

pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod records;
pub mod report;
pub mod rng;
pub mod train;

pub use checkpoint::{Checkpoint, RngStates, CHECKPOINT_VERSION};
pub use config::{parse_seeds, EvalSeeding, RunConfig};
pub use eval::{evaluate, run_episode, run_episode_with, EvalRecord, OraclePolicy, Policy, RandomPolicy};
pub use report::{aggregate, report, smooth, Aggregate};
pub use rng::{stream_rng, Stream};
pub use train::{
    seed_dir, train, train_seed, train_with_progress, Manifest, SeedEntry, SeedRun, SeedStatus, TrainEvent,
};
