use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::harness::buffer::{ReplayBuffer, RolloutSample, SampleGroup};
use crate::harness::store::PolicyStore;
use crate::harness::toy::ToyTask;
use crate::rl::StopRule;
use crate::tokenizer::BLOCK_LEN;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutConfig {
    /// Sequences per group.
    pub k: usize,
    /// Truncations per generated batch; each becomes one group.
    pub truncations: usize,
    /// Longest window in tokens; rounded down to whole face blocks.
    pub window: usize,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        RolloutConfig { k: 4, truncations: 4, window: 48 }
    }
}

/// What one iteration of a worker produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RolloutOutcome {
    pub version: u64,
    pub condition: usize,
    pub pushed: usize,
    pub dropped: usize,
}

/// Generates `K` sequences for one condition under a single checkpoint,
/// truncates them and pushes the scored groups.
#[derive(Debug)]
pub struct RolloutWorker {
    id: u64,
    rng: ChaCha8Rng,
    task: Arc<ToyTask>,
    cfg: RolloutConfig,
    next_group: u64,
}

impl RolloutWorker {
    pub fn new(id: u64, seed: u64, task: Arc<ToyTask>, cfg: RolloutConfig) -> RolloutWorker {
        RolloutWorker { id, rng: ChaCha8Rng::seed_from_u64(seed), task, cfg, next_group: 0 }
    }

    pub fn run_once(&mut self, store: &PolicyStore, buffer: &ReplayBuffer) -> RolloutOutcome {
        // the checkpoint is fixed for the whole batch even if a newer one lands meanwhile
        let ckpt = store.latest();
        let condition = self.rng.random_range(0..self.task.conditions.len());
        let len = self.task.conditions[condition].tokens.len();
        let sequences: Vec<Arc<Vec<u32>>> = (0..self.cfg.k)
            .map(|_| Arc::new(ckpt.policy.sample(condition, len, StopRule::MaxLen, &mut self.rng)))
            .collect();
        let scored: Vec<_> = sequences.iter().map(|s| self.task.score(condition, s)).collect();

        let w = (self.cfg.window.min(len) / BLOCK_LEN).max(1) * BLOCK_LEN;
        let offsets = (len.saturating_sub(w)) / BLOCK_LEN + 1;
        let mut outcome = RolloutOutcome { version: ckpt.version, condition, pushed: 0, dropped: 0 };
        for _ in 0..self.cfg.truncations {
            let m = self.rng.random_range(0..offsets) * BLOCK_LEN;
            let id = self.id << 40 | self.next_group;
            self.next_group += 1;
            let samples = sequences
                .iter()
                .zip(&scored)
                .map(|(seq, gen)| RolloutSample {
                    condition,
                    sequence: Arc::clone(seq),
                    m,
                    w,
                    reward: gen.window_report(m, w, &self.task.reward).total,
                    advantage: None,
                    version: ckpt.version,
                    group: id,
                })
                .collect();
            let pushed = SampleGroup::new(id, samples).and_then(|g| buffer.push(g));
            match pushed {
                Ok(()) => outcome.pushed += 1,
                Err(_) => outcome.dropped += 1,
            }
        }
        outcome
    }

    /// Runs until `stop` is set; the in-flight batch always completes.
    pub fn run_until(&mut self, store: &PolicyStore, buffer: &ReplayBuffer, stop: &AtomicBool) -> usize {
        let mut iterations = 0;
        while !stop.load(Ordering::Acquire) {
            self.run_once(store, buffer);
            iterations += 1;
        }
        iterations
    }
}

/// Thread body for a rollout worker.
pub fn rollout_worker_loop(
    mut worker: RolloutWorker,
    store: Arc<PolicyStore>,
    buffer: Arc<ReplayBuffer>,
    stop: Arc<AtomicBool>,
) -> usize {
    worker.run_until(&store, &buffer, &stop)
}
