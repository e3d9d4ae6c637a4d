use std::sync::Arc;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::harness::buffer::{BufferError, ReplayBuffer, SampleGroup};
use crate::harness::schedule::{validate_schedule, ScheduleConfig};
use crate::harness::store::PolicyStore;
use crate::harness::HarnessError;
use crate::rl::{
    advantages, arpo_score_gradient, truncated_arpo_loss, ArpoConfig, GroupSamples, RlError, Sample, ToyPolicy, Window,
};

/// Loss of one group and its gradient with respect to the policy parameters.
pub trait GroupLoss: Send {
    /// Adds the gradient into `grad` and returns the loss.
    fn accumulate(
        &self,
        policy: &ToyPolicy,
        reference: &ToyPolicy,
        group: &SampleGroup,
        grad: &mut [f64],
    ) -> Result<f64, RlError>;
}

/// ARPO on the truncated windows, with the exact listwise gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedArpo(pub ArpoConfig);

impl GroupLoss for TruncatedArpo {
    fn accumulate(
        &self,
        policy: &ToyPolicy,
        reference: &ToyPolicy,
        group: &SampleGroup,
        grad: &mut [f64],
    ) -> Result<f64, RlError> {
        let cfg = &self.0;
        let mut samples = Vec::with_capacity(group.samples.len());
        for s in &group.samples {
            let window = Some((s.m, s.w));
            let logp = policy.sequence_logprob(s.condition, &s.sequence, window)?;
            let ref_logp = reference.sequence_logprob(s.condition, &s.sequence, window)?;
            let mut sample = Sample::new(logp, ref_logp, s.reward);
            sample.window = Some(Window { m: s.m, w: s.w, len: s.sequence.len() });
            samples.push(sample);
        }
        let ranked = GroupSamples::new(samples)?;
        let loss = truncated_arpo_loss(&ranked, cfg)?;
        let ds = arpo_score_gradient(&ranked.scores(cfg.beta), &advantages(&ranked.rewards(), cfg.eps));
        for (rank, &input) in ranked.order().iter().enumerate() {
            let coef = cfg.beta * ds[rank];
            if coef != 0.0 {
                let s = &group.samples[input];
                policy.accumulate_logprob_grad(s.condition, &s.sequence, Some((s.m, s.w)), coef, grad)?;
            }
        }
        Ok(loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainerConfig {
    pub schedule: ScheduleConfig,
    pub lr: f64,
    pub seed: u64,
    /// Stop after publishing this version.
    pub final_version: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    /// Version this step works towards.
    pub target_version: u64,
    /// Version of every group in the batch.
    pub group_versions: Vec<u64>,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainerPoll {
    /// Not enough groups of `version` yet.
    Waiting {
        version: u64,
        needed: usize,
    },
    Stepped,
    Published(u64),
    Finished,
}

/// Trainer state machine. Producing version `V` uses only version `V − 1`
/// groups: `N_1` steps after `S_1` groups of version 0 are stored, then
/// `N_2` steps after each `S_2` groups of the latest version. Publishing `V`
/// discards every older group.
pub struct Trainer {
    cfg: TrainerConfig,
    policy: ToyPolicy,
    reference: Arc<ToyPolicy>,
    loss: Box<dyn GroupLoss>,
    target: u64,
    steps: usize,
    started: bool,
    rng: ChaCha8Rng,
    log: Vec<StepRecord>,
}

impl Trainer {
    pub fn new(
        cfg: TrainerConfig,
        reference: Arc<ToyPolicy>,
        loss: Box<dyn GroupLoss>,
    ) -> Result<Trainer, HarnessError> {
        let report = validate_schedule(&cfg.schedule);
        if !report.is_valid() {
            return Err(HarnessError::Schedule(report));
        }
        Ok(Trainer {
            policy: (*reference).clone(),
            reference,
            loss,
            target: 1,
            steps: 0,
            started: false,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            log: Vec::new(),
            cfg,
        })
    }

    /// Version currently being trained towards.
    pub fn target_version(&self) -> u64 {
        self.target
    }

    pub fn policy(&self) -> &ToyPolicy {
        &self.policy
    }

    pub fn log(&self) -> &[StepRecord] {
        &self.log
    }

    pub fn is_finished(&self) -> bool {
        self.target > self.cfg.final_version
    }

    fn cycle_len(&self) -> (usize, usize) {
        let s = &self.cfg.schedule;
        if self.target == 1 {
            (s.n1, s.s1)
        } else {
            (s.n2, s.s2)
        }
    }

    /// Does at most one training step.
    pub fn poll(&mut self, store: &PolicyStore, buffer: &ReplayBuffer) -> Result<TrainerPoll, HarnessError> {
        if self.is_finished() {
            return Ok(TrainerPoll::Finished);
        }
        let version = self.target - 1;
        let (steps, fill) = self.cycle_len();
        if !self.started {
            if buffer.count_version(version) < fill {
                return Ok(TrainerPoll::Waiting { version, needed: fill });
            }
            self.started = true;
        }
        let batch = self.cfg.schedule.batch * self.cfg.schedule.trainers;
        let groups = match buffer.sample(version, batch, &mut self.rng) {
            Ok(g) => g,
            Err(BufferError::InsufficientData { .. }) => return Ok(TrainerPoll::Waiting { version, needed: batch }),
            Err(e) => return Err(e.into()),
        };
        let mut grad = vec![0.0; self.policy.params().len()];
        let mut loss = 0.0;
        for g in &groups {
            loss += self.loss.accumulate(&self.policy, &self.reference, g, &mut grad)?;
        }
        let scale = 1.0 / groups.len() as f64;
        grad.iter_mut().for_each(|g| *g *= scale);
        self.policy = self.policy.sgd_step(&grad, self.cfg.lr)?;
        self.log.push(StepRecord {
            target_version: self.target,
            group_versions: groups.iter().map(|g| g.version).collect(),
            loss: loss * scale,
        });
        self.steps += 1;
        if self.steps < steps {
            return Ok(TrainerPoll::Stepped);
        }
        let published = store.publish(self.policy.clone()).map_err(|e| HarnessError::Io(e.to_string()))?;
        if published != self.target {
            return Err(HarnessError::VersionConflict { expected: self.target, published });
        }
        buffer.discard(self.target);
        if self.target == 1 {
            buffer.set_capacity(self.cfg.schedule.s2);
        }
        self.target += 1;
        self.steps = 0;
        self.started = false;
        Ok(TrainerPoll::Published(published))
    }
}

/// Thread body for the trainer: polls until the final version is published,
/// blocking on the buffer while data is missing. Returns the published versions.
pub fn trainer_loop(
    trainer: &mut Trainer,
    store: &PolicyStore,
    buffer: &ReplayBuffer,
    starvation: Duration,
) -> Result<Vec<u64>, HarnessError> {
    let mut published = Vec::new();
    loop {
        match trainer.poll(store, buffer)? {
            TrainerPoll::Finished => return Ok(published),
            TrainerPoll::Published(v) => published.push(v),
            TrainerPoll::Stepped => {}
            TrainerPoll::Waiting { version, needed } => {
                buffer
                    .wait_for(version, needed, starvation)
                    .map_err(|_| HarnessError::Starvation { version, needed })?;
            }
        }
    }
}
