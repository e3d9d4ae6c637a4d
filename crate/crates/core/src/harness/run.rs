use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::Serialize;

use crate::harness::buffer::{BufferStats, ReplayBuffer};
use crate::harness::rollout::{rollout_worker_loop, RolloutConfig, RolloutWorker};
use crate::harness::schedule::ScheduleConfig;
use crate::harness::store::PolicyStore;
use crate::harness::toy::{evaluate, pretrain, EvalMetrics, PretrainConfig, PretrainReport, ToyTask};
use crate::harness::trainer::{trainer_loop, StepRecord, Trainer, TrainerConfig, TrainerPoll, TruncatedArpo};
use crate::harness::HarnessError;
use crate::metrics::corpus_seed;
use crate::rl::ArpoConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRunConfig {
    pub arpo: ArpoConfig,
    pub schedule: ScheduleConfig,
    pub rollout: RolloutConfig,
    pub pretrain: PretrainConfig,
    pub lr: f64,
    pub rollout_workers: usize,
    pub final_version: u64,
    /// Trainer steps between rounds of rollouts in the deterministic driver.
    pub steps_per_round: usize,
    /// Evaluation generations per condition and checkpoint.
    pub eval_samples: usize,
    pub seed: u64,
    pub eval_seed: u64,
    /// Also write checkpoints here.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for ToyRunConfig {
    fn default() -> Self {
        ToyRunConfig {
            arpo: ArpoConfig::default(),
            schedule: ScheduleConfig::default(),
            rollout: RolloutConfig::default(),
            pretrain: PretrainConfig::default(),
            lr: 1.0,
            rollout_workers: 2,
            final_version: 5,
            steps_per_round: 5,
            eval_samples: 64,
            seed: 0,
            eval_seed: 1_000,
            checkpoint_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToyRunReport {
    pub pretrain: PretrainReport,
    /// Versions in publication order.
    pub published: Vec<u64>,
    /// Evaluation of versions 0 through the final one.
    pub checkpoints: Vec<EvalMetrics>,
    pub steps: Vec<StepRecord>,
    pub rollouts: usize,
    pub buffer: BufferSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BufferSummary {
    pub pushed: u64,
    pub dropped: u64,
    pub evicted: u64,
    pub discarded: u64,
    pub sampled: u64,
}

impl From<BufferStats> for BufferSummary {
    fn from(s: BufferStats) -> Self {
        BufferSummary {
            pushed: s.pushed,
            dropped: s.dropped,
            evicted: s.evicted,
            discarded: s.discarded,
            sampled: s.sampled,
        }
    }
}

struct Setup {
    task: Arc<ToyTask>,
    pretrain: PretrainReport,
    store: Arc<PolicyStore>,
    buffer: Arc<ReplayBuffer>,
    trainer: Trainer,
    workers: Vec<RolloutWorker>,
}

fn setup(cfg: &ToyRunConfig) -> Result<Setup, HarnessError> {
    let task = Arc::new(ToyTask::standard());
    let (reference, pretrain) = pretrain(&task, &cfg.pretrain)?;
    let store = match &cfg.checkpoint_dir {
        Some(dir) => PolicyStore::with_dir(reference.clone(), dir).map_err(|e| HarnessError::Io(e.to_string()))?,
        None => PolicyStore::new(reference.clone()),
    };
    let trainer = Trainer::new(
        TrainerConfig {
            schedule: cfg.schedule,
            lr: cfg.lr,
            seed: corpus_seed(cfg.seed, 0),
            final_version: cfg.final_version,
        },
        Arc::new(reference),
        Box::new(TruncatedArpo(ArpoConfig { k: cfg.rollout.k, ..cfg.arpo })),
    )?;
    let workers = (0..cfg.rollout_workers.max(1))
        .map(|i| RolloutWorker::new(i as u64, corpus_seed(cfg.seed, i + 1), Arc::clone(&task), cfg.rollout))
        .collect();
    Ok(Setup {
        task,
        pretrain,
        store: Arc::new(store),
        buffer: Arc::new(ReplayBuffer::new(cfg.schedule.s1)),
        trainer,
        workers,
    })
}

fn report(cfg: &ToyRunConfig, s: &Setup, published: Vec<u64>, rollouts: usize) -> ToyRunReport {
    let checkpoints = (0..=s.store.latest_version())
        .filter_map(|v| s.store.get(v))
        .map(|ckpt| evaluate(&ckpt.policy, ckpt.version, &s.task, cfg.eval_samples, cfg.eval_seed))
        .collect();
    ToyRunReport {
        pretrain: s.pretrain,
        published,
        checkpoints,
        steps: s.trainer.log().to_vec(),
        rollouts,
        buffer: s.buffer.stats().into(),
    }
}

/// Single-threaded interleaving of the asynchronous protocol: every round
/// each worker produces one batch under the latest checkpoint, then the
/// trainer runs up to `steps_per_round` steps. Bit-reproducible for a seed.
pub fn run_toy(cfg: &ToyRunConfig) -> Result<ToyRunReport, HarnessError> {
    let mut s = setup(cfg)?;
    let mut published = Vec::new();
    let mut rollouts = 0;
    let mut idle_rounds = 0;
    while !s.trainer.is_finished() {
        for w in &mut s.workers {
            w.run_once(&s.store, &s.buffer);
            rollouts += 1;
        }
        let mut progressed = false;
        for _ in 0..cfg.steps_per_round.max(1) {
            match s.trainer.poll(&s.store, &s.buffer)? {
                TrainerPoll::Stepped => progressed = true,
                TrainerPoll::Published(v) => {
                    progressed = true;
                    published.push(v);
                }
                TrainerPoll::Waiting { .. } | TrainerPoll::Finished => break,
            }
        }
        idle_rounds = if progressed { 0 } else { idle_rounds + 1 };
        if idle_rounds > 1_000 {
            let version = s.trainer.target_version() - 1;
            return Err(HarnessError::Starvation { version, needed: cfg.schedule.s2 });
        }
    }
    Ok(report(cfg, &s, published, rollouts))
}

/// The same protocol on real threads: `rollout_workers` producer threads and
/// one trainer thread sharing the buffer and the checkpoint store.
pub fn run_toy_threaded(cfg: &ToyRunConfig, starvation: Duration) -> Result<ToyRunReport, HarnessError> {
    let mut s = setup(cfg)?;
    let stop = Arc::new(AtomicBool::new(false));
    let handles: Vec<_> = std::mem::take(&mut s.workers)
        .into_iter()
        .map(|w| {
            let (store, buffer, stop) = (Arc::clone(&s.store), Arc::clone(&s.buffer), Arc::clone(&stop));
            thread::spawn(move || rollout_worker_loop(w, store, buffer, stop))
        })
        .collect();
    let result = trainer_loop(&mut s.trainer, &s.store, &s.buffer, starvation);
    stop.store(true, Ordering::Release);
    let mut rollouts = 0;
    for h in handles {
        rollouts += h.join().map_err(|_| HarnessError::WorkerPanicked)?;
    }
    let published = result?;
    Ok(report(cfg, &s, published, rollouts))
}
