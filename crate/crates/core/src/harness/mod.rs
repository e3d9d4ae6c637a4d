//! Asynchronous online training: versioned replay buffer, checkpoint store,
//! rollout and trainer workers, schedule validation, the toy reproduction
//! task and a virtual-time throughput simulator.

mod buffer;
mod rollout;
mod run;
mod schedule;
mod sim;
mod store;
mod toy;
mod trainer;

use thiserror::Error;

pub use buffer::{BufferError, BufferStats, ReplayBuffer, RolloutSample, SampleGroup};
pub use rollout::{rollout_worker_loop, RolloutConfig, RolloutOutcome, RolloutWorker};
pub use run::{run_toy, run_toy_threaded, BufferSummary, ToyRunConfig, ToyRunReport};
pub use schedule::{validate_schedule, ScheduleConfig, ScheduleReport, ScheduleViolation};
pub use sim::{compare_modes, simulate_throughput, LengthDist, SimComparison, SimConfig, SimMode, SimReport};
pub use store::PolicyStore;
pub use toy::{
    evaluate, pretrain, teacher_forced_accuracy, EvalMetrics, PretrainConfig, PretrainReport, ScoredGeneration,
    ToyCondition, ToyTask,
};
pub use trainer::{trainer_loop, GroupLoss, StepRecord, Trainer, TrainerConfig, TrainerPoll, TruncatedArpo};

use crate::rl::RlError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("invalid schedule: {0:?}")]
    Schedule(ScheduleReport),
    #[error("no {needed} groups of version {version} arrived in time")]
    Starvation { version: u64, needed: usize },
    #[error("published version {published}, expected {expected}")]
    VersionConflict { expected: u64, published: u64 },
    #[error("a rollout worker panicked")]
    WorkerPanicked,
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Buffer(#[from] BufferError),
    #[error(transparent)]
    Rl(#[from] RlError),
}
