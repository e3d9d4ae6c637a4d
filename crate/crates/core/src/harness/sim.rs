use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

/// Rollout duration distribution, in virtual time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LengthDist {
    Constant {
        mean: f64,
    },
    /// Lognormal with the given mean and coefficient of variation.
    LogNormal {
        mean: f64,
        cv: f64,
    },
}

impl LengthDist {
    pub fn mean(&self) -> f64 {
        match *self {
            LengthDist::Constant { mean } | LengthDist::LogNormal { mean, .. } => mean,
        }
    }

    fn sampler(&self) -> Sampler {
        match *self {
            LengthDist::LogNormal { mean, cv } if cv > 0.0 => {
                let s2 = (1.0 + cv * cv).ln();
                Sampler::LogNormal(
                    LogNormal::new(mean.ln() - s2 / 2.0, s2.sqrt()).expect("finite lognormal parameters"),
                )
            }
            d => Sampler::Constant(d.mean()),
        }
    }
}

enum Sampler {
    Constant(f64),
    LogNormal(LogNormal<f64>),
}

impl Sampler {
    fn draw(&self, rng: &mut impl Rng) -> f64 {
        match self {
            Sampler::Constant(v) => *v,
            Sampler::LogNormal(d) => d.sample(rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub workers: usize,
    /// Samples consumed per training step.
    pub batch: usize,
    /// Training steps between checkpoints.
    pub n2: usize,
    /// Virtual duration of one training step.
    pub train_step: f64,
    pub lengths: LengthDist,
    /// Virtual time to simulate.
    pub duration: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            workers: 16,
            batch: 16,
            n2: 64,
            train_step: 0.01,
            lengths: LengthDist::LogNormal { mean: 1.0, cv: 1.0 },
            duration: 5000.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Sync,
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimReport {
    pub mode: SimMode,
    pub virtual_time: f64,
    pub trained_samples: u64,
    /// Trained samples per unit of virtual time.
    pub throughput: f64,
    /// Fraction of worker time spent generating.
    pub utilization: f64,
    /// Samples generated under a superseded policy and thrown away.
    pub dropped_samples: u64,
    pub checkpoints: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimComparison {
    pub sync: SimReport,
    #[serde(rename = "async")]
    pub async_: SimReport,
    pub speedup: f64,
}

/// Runs both modes with the same configuration.
pub fn compare_modes(cfg: &SimConfig) -> SimComparison {
    let sync = simulate_throughput(SimMode::Sync, cfg);
    let async_ = simulate_throughput(SimMode::Async, cfg);
    SimComparison { sync, async_, speedup: async_.throughput / sync.throughput }
}

pub fn simulate_throughput(mode: SimMode, cfg: &SimConfig) -> SimReport {
    match mode {
        SimMode::Sync => simulate_sync(cfg),
        SimMode::Async => simulate_async(cfg),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Time(f64);

impl Eq for Time {}

impl PartialOrd for Time {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Time {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Each step hands `batch` rollouts of the current policy to the workers,
/// waits for the last one and then trains while the workers idle.
fn simulate_sync(cfg: &SimConfig) -> SimReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lengths = cfg.lengths.sampler();
    let workers = cfg.workers.max(1);
    let (mut t, mut busy, mut trained, mut steps) = (0.0, 0.0, 0u64, 0u64);
    while t < cfg.duration {
        let mut free: BinaryHeap<Reverse<Time>> = (0..workers).map(|_| Reverse(Time(t))).collect();
        let mut end = t;
        for _ in 0..cfg.batch {
            let Reverse(Time(start)) = free.pop().expect("at least one worker");
            let len = lengths.draw(&mut rng);
            busy += len;
            end = f64::max(end, start + len);
            free.push(Reverse(Time(start + len)));
        }
        t = end + cfg.train_step;
        trained += cfg.batch as u64;
        steps += 1;
    }
    SimReport {
        mode: SimMode::Sync,
        virtual_time: t,
        trained_samples: trained,
        throughput: trained as f64 / t,
        utilization: busy / (workers as f64 * t),
        dropped_samples: 0,
        checkpoints: steps / cfg.n2.max(1) as u64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Event {
    RolloutDone { worker: usize, version: u64 },
    TrainDone,
}

/// Workers generate continuously under the latest policy. The trainer takes
/// `batch` samples of the latest version per step and publishes every `n2`
/// steps; anything still in flight from the old version is then stale.
fn simulate_async(cfg: &SimConfig) -> SimReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let lengths = cfg.lengths.sampler();
    let workers = cfg.workers.max(1);
    let mut events: BinaryHeap<Reverse<(Time, u64, Event)>> = BinaryHeap::new();
    let mut seq = 0u64;
    let mut schedule = |events: &mut BinaryHeap<_>, at: f64, e: Event| {
        events.push(Reverse((Time(at), seq, e)));
        seq += 1;
    };
    let mut busy = 0.0;
    for worker in 0..workers {
        let len = lengths.draw(&mut rng);
        schedule(&mut events, len, Event::RolloutDone { worker, version: 0 });
    }
    let (mut latest, mut available, mut steps) = (0u64, 0usize, 0usize);
    let (mut trained, mut dropped, mut checkpoints) = (0u64, 0u64, 0u64);
    let mut training = false;
    let mut started = vec![0.0; workers];
    while let Some(Reverse((Time(t), _, event))) = events.pop() {
        if t > cfg.duration {
            break;
        }
        match event {
            Event::RolloutDone { worker, version } => {
                busy += t - started[worker];
                if version == latest {
                    available += 1;
                } else {
                    dropped += 1;
                }
                started[worker] = t;
                let len = lengths.draw(&mut rng);
                schedule(&mut events, t + len, Event::RolloutDone { worker, version: latest });
            }
            Event::TrainDone => {
                training = false;
                trained += cfg.batch as u64;
                steps += 1;
                if steps == cfg.n2 {
                    latest += 1;
                    checkpoints += 1;
                    available = 0;
                    steps = 0;
                }
            }
        }
        if !training && available >= cfg.batch {
            available -= cfg.batch;
            training = true;
            schedule(&mut events, t + cfg.train_step, Event::TrainDone);
        }
    }
    // count the in-flight share of each worker up to the horizon
    busy += started.iter().map(|s| cfg.duration - s).sum::<f64>();
    SimReport {
        mode: SimMode::Async,
        virtual_time: cfg.duration,
        trained_samples: trained,
        throughput: trained as f64 / cfg.duration,
        utilization: busy / (workers as f64 * cfg.duration),
        dropped_samples: dropped,
        checkpoints,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lognormal_moments() {
        let d = LengthDist::LogNormal { mean: 2.0, cv: 1.5 }.sampler();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..200_000).map(|_| d.draw(&mut rng)).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / xs.len() as f64;
        assert!((mean - 2.0).abs() < 0.05, "{mean}");
        assert!((var.sqrt() / mean - 1.5).abs() < 0.15, "{}", var.sqrt() / mean);
    }

    #[test]
    fn sync_constant_step_time() {
        let cfg = SimConfig { lengths: LengthDist::Constant { mean: 1.0 }, duration: 101.0, ..Default::default() };
        let r = simulate_sync(&cfg);
        assert_eq!(r.trained_samples, 100 * 16);
        assert!((r.virtual_time - 101.0).abs() < 1e-9);
        assert!((r.utilization - 100.0 / 101.0).abs() < 1e-9);
    }

    #[test]
    fn async_is_deterministic() {
        let cfg = SimConfig { duration: 300.0, ..Default::default() };
        assert_eq!(simulate_async(&cfg), simulate_async(&cfg));
        assert!(simulate_async(&cfg).checkpoints > 0);
    }

    #[test]
    fn async_keeps_workers_busy() {
        let r = simulate_async(&SimConfig { duration: 500.0, ..Default::default() });
        assert!((r.utilization - 1.0).abs() < 1e-9);
        assert!(r.dropped_samples > 0);
    }
}
