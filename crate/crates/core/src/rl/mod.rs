//! Ranking-preference losses and the toy autoregressive policy they train.

mod arpo;
mod policy;

use thiserror::Error;

pub use arpo::{
    advantages, arpo_gradient, arpo_gradient_pairwise, arpo_loss, arpo_score_gradient, dpo_loss, log_sigmoid,
    logsumexp, pairwise_discrepancy, pl_ranking_logprob, pl_score_logprob, truncated_arpo_loss, ArpoConfig,
    GroupSamples, Sample, Window,
};
pub use policy::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, PolicyCheckpoint, PolicyShape, StopRule,
    ToyPolicy,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RlError {
    #[error("log-probability or reward is not finite")]
    NonFiniteLogProb,
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("window [{m}, {m}+{w}) exceeds sequence length {len}")]
    WindowOutOfRange { m: usize, w: usize, len: usize },
    #[error("token {token} outside vocabulary of {vocab}")]
    TokenOutOfVocab { token: u32, vocab: usize },
    #[error("condition {condition} outside the {conditions} known conditions")]
    UnknownCondition { condition: usize, conditions: usize },
    #[error("group is empty")]
    EmptyGroup,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
