use std::collections::VecDeque;
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::time::{Duration, Instant};

use rand::Rng;
use thiserror::Error;

/// One scored window of a generated sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSample {
    pub condition: usize,
    /// The whole generated sequence; the window is `sequence[m..m + w]`.
    pub sequence: Arc<Vec<u32>>,
    pub m: usize,
    pub w: usize,
    pub reward: f64,
    /// Filled in by the trainer when the group is ranked.
    pub advantage: Option<f64>,
    /// Version of the policy that generated the sequence.
    pub version: u64,
    pub group: u64,
}

impl RolloutSample {
    pub fn window(&self) -> &[u32] {
        &self.sequence[self.m..self.m + self.w]
    }
}

/// `K` samples ranked together: same condition, same version, same window offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGroup {
    pub id: u64,
    pub condition: usize,
    pub version: u64,
    pub samples: Vec<RolloutSample>,
}

impl SampleGroup {
    pub fn new(id: u64, samples: Vec<RolloutSample>) -> Result<SampleGroup, BufferError> {
        let first = samples.first().ok_or(BufferError::EmptyGroup)?;
        let (condition, version) = (first.condition, first.version);
        if samples.iter().any(|s| s.condition != condition || s.version != version) {
            return Err(BufferError::MixedGroup);
        }
        if samples.iter().any(|s| s.m + s.w > s.sequence.len() || !s.reward.is_finite()) {
            return Err(BufferError::InvalidSample);
        }
        Ok(SampleGroup { id, condition, version, samples })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BufferError {
    #[error("group version {version} is below the discard watermark {watermark}")]
    VersionRegression { version: u64, watermark: u64 },
    #[error("wanted {wanted} groups of version {version}, {available} available")]
    InsufficientData { version: u64, wanted: usize, available: usize },
    #[error("timed out waiting for {wanted} groups of version {version}")]
    Timeout { version: u64, wanted: usize },
    #[error("group is empty")]
    EmptyGroup,
    #[error("group mixes conditions or versions")]
    MixedGroup,
    #[error("sample window outside its sequence or reward not finite")]
    InvalidSample,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BufferStats {
    pub pushed: u64,
    /// Pushes rejected for being older than the watermark.
    pub dropped: u64,
    /// Groups removed to stay within capacity.
    pub evicted: u64,
    /// Groups removed by [`ReplayBuffer::discard`].
    pub discarded: u64,
    pub sampled: u64,
}

#[derive(Debug)]
struct Inner {
    groups: VecDeque<Arc<SampleGroup>>,
    capacity: usize,
    watermark: u64,
    stats: BufferStats,
}

impl Inner {
    fn count(&self, version: u64) -> usize {
        self.groups.iter().filter(|g| g.version == version).count()
    }

    fn evict_to(&mut self, capacity: usize) {
        while self.groups.len() > capacity {
            let oldest = self
                .groups
                .iter()
                .enumerate()
                .min_by_key(|(i, g)| (g.version, *i))
                .map(|(i, _)| i)
                .expect("non-empty when over capacity");
            self.groups.remove(oldest);
            self.stats.evicted += 1;
        }
    }
}

/// Bounded, versioned store of sample groups shared by rollout workers and
/// trainers. Every operation holds one lock, so each is atomic.
#[derive(Debug)]
pub struct ReplayBuffer {
    inner: Mutex<Inner>,
    changed: Condvar,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> ReplayBuffer {
        ReplayBuffer {
            inner: Mutex::new(Inner {
                groups: VecDeque::new(),
                capacity: capacity.max(1),
                watermark: 0,
                stats: BufferStats::default(),
            }),
            changed: Condvar::new(),
        }
    }

    fn lock(&self) -> MutexGuard<'_, Inner> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn capacity(&self) -> usize {
        self.lock().capacity
    }

    /// Shrinking evicts oldest-version groups first.
    pub fn set_capacity(&self, capacity: usize) {
        let mut inner = self.lock();
        inner.capacity = capacity.max(1);
        let cap = inner.capacity;
        inner.evict_to(cap);
    }

    /// Stores the group, evicting the oldest-version group when full. Groups
    /// older than the watermark are dropped and counted.
    pub fn push(&self, group: SampleGroup) -> Result<(), BufferError> {
        let mut inner = self.lock();
        if group.version < inner.watermark {
            inner.stats.dropped += 1;
            return Err(BufferError::VersionRegression { version: group.version, watermark: inner.watermark });
        }
        inner.groups.push_back(Arc::new(group));
        inner.stats.pushed += 1;
        let cap = inner.capacity;
        inner.evict_to(cap);
        drop(inner);
        self.changed.notify_all();
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.lock().groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count_version(&self, version: u64) -> usize {
        self.lock().count(version)
    }

    /// Versions of the stored groups in insertion order.
    pub fn versions(&self) -> Vec<u64> {
        self.lock().groups.iter().map(|g| g.version).collect()
    }

    pub fn watermark(&self) -> u64 {
        self.lock().watermark
    }

    pub fn stats(&self) -> BufferStats {
        self.lock().stats
    }

    /// `count` distinct groups of exactly `version`, chosen uniformly.
    pub fn sample(&self, version: u64, count: usize, rng: &mut impl Rng) -> Result<Vec<Arc<SampleGroup>>, BufferError> {
        let mut inner = self.lock();
        Self::sample_locked(&mut inner, version, count, rng)
    }

    fn sample_locked(
        inner: &mut Inner,
        version: u64,
        count: usize,
        rng: &mut impl Rng,
    ) -> Result<Vec<Arc<SampleGroup>>, BufferError> {
        let matching: Vec<&Arc<SampleGroup>> = inner.groups.iter().filter(|g| g.version == version).collect();
        if matching.len() < count {
            return Err(BufferError::InsufficientData { version, wanted: count, available: matching.len() });
        }
        let picked: Vec<Arc<SampleGroup>> =
            rand::seq::index::sample(rng, matching.len(), count).into_iter().map(|i| Arc::clone(matching[i])).collect();
        inner.stats.sampled += count as u64;
        Ok(picked)
    }

    /// Blocks until at least `count` groups of `version` are stored.
    pub fn wait_for(&self, version: u64, count: usize, timeout: Duration) -> Result<(), BufferError> {
        let deadline = Instant::now() + timeout;
        let mut inner = self.lock();
        while inner.count(version) < count {
            let now = Instant::now();
            if now >= deadline {
                return Err(BufferError::Timeout { version, wanted: count });
            }
            inner = self.changed.wait_timeout(inner, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
        Ok(())
    }

    /// [`sample`](Self::sample) that waits for enough data instead of failing.
    pub fn sample_blocking(
        &self,
        version: u64,
        count: usize,
        rng: &mut impl Rng,
        timeout: Duration,
    ) -> Result<Vec<Arc<SampleGroup>>, BufferError> {
        let deadline = Instant::now() + timeout;
        let mut inner = self.lock();
        loop {
            if inner.count(version) >= count {
                return Self::sample_locked(&mut inner, version, count, rng);
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(BufferError::Timeout { version, wanted: count });
            }
            inner = self.changed.wait_timeout(inner, deadline - now).unwrap_or_else(|e| e.into_inner()).0;
        }
    }

    /// Removes every group older than `keep` and raises the watermark to `keep`.
    pub fn discard(&self, keep: u64) -> usize {
        let mut inner = self.lock();
        let before = inner.groups.len();
        inner.groups.retain(|g| g.version >= keep);
        let removed = before - inner.groups.len();
        inner.watermark = inner.watermark.max(keep);
        inner.stats.discarded += removed as u64;
        removed
    }
}
