#![allow(dead_code)]

use std::collections::BTreeSet;

use quadrl_core::{canonicalize, Face, QuantizedMesh};
use rand::{Rng, SeedableRng};

/// Random lattice mesh of up to `max_faces` faces, mixing triangles and quads,
/// canonicalized. Vertex indices within a face are distinct before merging.
pub fn random_canonical_mesh(rng: &mut impl Rng, max_faces: usize, bits: u32) -> QuantizedMesh {
    let top = 1u32 << bits;
    let nv = rng.random_range(4..=64usize);
    let vertices: Vec<[u32; 3]> =
        (0..nv).map(|_| [rng.random_range(0..top), rng.random_range(0..top), rng.random_range(0..top)]).collect();
    let nf = rng.random_range(1..=max_faces);
    let faces = (0..nf)
        .map(|_| {
            let arity = if rng.random_bool(0.5) { 3 } else { 4 };
            let mut idx = BTreeSet::new();
            while idx.len() < arity {
                idx.insert(rng.random_range(0..nv));
            }
            let mut idx: Vec<usize> = idx.into_iter().collect();
            // random cyclic order
            for i in (1..idx.len()).rev() {
                let j = rng.random_range(0..=i);
                idx.swap(i, j);
            }
            Face::from_slice(&idx).expect("3 or 4 indices")
        })
        .collect();
    let mesh = QuantizedMesh::new(vertices, faces, bits).expect("indices in range");
    canonicalize(&mesh).0
}

/// Each face as its corner coordinates.
pub fn face_coords(mesh: &QuantizedMesh) -> Vec<Vec<[u32; 3]>> {
    mesh.faces().iter().map(|f| f.indices().iter().map(|&i| mesh.vertices()[i]).collect()).collect()
}

/// Triangles must match exactly, quads up to cyclic rotation.
pub fn same_face(a: &[[u32; 3]], b: &[[u32; 3]]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.len() == 3 {
        return a == b;
    }
    (0..4).any(|r| (0..4).all(|i| a[(i + r) % 4] == b[i]))
}

use quadrl_core::rl::{arpo_gradient, arpo_loss, ArpoConfig, GroupSamples, PolicyShape, Sample, ToyPolicy};

/// A random bigram policy group: current and reference policies, `k`
/// sequences with distinct rewards.
pub struct GradCase {
    pub policy: ToyPolicy,
    pub reference: ToyPolicy,
    pub sequences: Vec<Vec<u32>>,
    pub rewards: Vec<f64>,
    pub cfg: ArpoConfig,
}

impl GradCase {
    pub fn random(rng: &mut impl Rng, k: usize, beta: f64) -> GradCase {
        let shape = PolicyShape::bigram(5);
        let mut params =
            |scale: f64| (0..shape.param_count()).map(|_| rng.random_range(-scale..scale)).collect::<Vec<f64>>();
        let policy = ToyPolicy::from_params(shape, params(0.5)).unwrap();
        let reference = ToyPolicy::from_params(shape, params(0.5)).unwrap();
        let sequences = (0..k).map(|_| (0..6).map(|_| rng.random_range(0..5u32)).collect()).collect();
        let rewards = (0..k).map(|i| i as f64 + rng.random_range(0.0..0.9)).collect();
        GradCase { policy, reference, sequences, rewards, cfg: ArpoConfig { beta, k, ..ArpoConfig::default() } }
    }

    fn group(&self, policy: &ToyPolicy) -> GroupSamples {
        let samples = self
            .sequences
            .iter()
            .zip(&self.rewards)
            .map(|(s, &r)| {
                Sample::new(
                    policy.sequence_logprob(0, s, None).unwrap(),
                    self.reference.sequence_logprob(0, s, None).unwrap(),
                    r,
                )
            })
            .collect();
        GroupSamples::new(samples).unwrap()
    }

    pub fn loss_at(&self, params: &[f64]) -> f64 {
        let p = ToyPolicy::from_params(self.policy.shape(), params.to_vec()).unwrap();
        arpo_loss(&self.group(&p), &self.cfg).unwrap()
    }

    pub fn analytic(&self) -> Vec<f64> {
        let grads: Vec<Vec<f64>> =
            self.sequences.iter().map(|s| self.policy.logprob_grad(0, s, None).unwrap()).collect();
        arpo_gradient(&self.group(&self.policy), &grads, &self.cfg).unwrap()
    }

    /// Central differences with step `h`.
    pub fn numeric(&self, h: f64) -> Vec<f64> {
        let base = self.policy.params().to_vec();
        (0..base.len())
            .map(|i| {
                let mut p = base.clone();
                p[i] += h;
                let up = self.loss_at(&p);
                p[i] -= 2.0 * h;
                (up - self.loss_at(&p)) / (2.0 * h)
            })
            .collect()
    }

    /// `max |analytic − numeric| / max(max |numeric|, 1e-6)`. The floor keeps
    /// saturated groups, whose gradient is below the differencing noise, from
    /// reporting roundoff as error.
    pub fn relative_error(&self) -> f64 {
        let (a, n) = (self.analytic(), self.numeric(1e-5));
        let scale = n.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-6);
        a.iter().zip(&n).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
    }
}

/// All permutations of `0..k`.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread;

use quadrl_core::harness::{BufferError, ReplayBuffer, RolloutSample, SampleGroup};

pub fn test_group(id: u64, version: u64, k: usize) -> SampleGroup {
    let seq = Arc::new(vec![1u32; 24]);
    let samples = (0..k)
        .map(|i| RolloutSample {
            condition: 0,
            sequence: Arc::clone(&seq),
            m: 12,
            w: 12,
            reward: i as f64,
            advantage: None,
            version,
            group: id,
        })
        .collect();
    SampleGroup::new(id, samples).unwrap()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct StressOutcome {
    pub ops: u64,
    pub violations: u64,
    pub dropped: u64,
    pub max_len: usize,
}

/// Producers push groups of recent versions, consumers sample around the
/// watermark, one thread advances the watermark. Every observation that
/// contradicts the buffer invariants counts as a violation.
pub fn buffer_stress(
    producers: usize,
    consumers: usize,
    ops_per_thread: u64,
    capacity: usize,
    seed: u64,
) -> StressOutcome {
    let buffer = Arc::new(ReplayBuffer::new(capacity));
    let newest = Arc::new(AtomicU64::new(0));
    let violations = Arc::new(AtomicU64::new(0));
    let ops = Arc::new(AtomicU64::new(0));
    let max_len = Arc::new(AtomicU64::new(0));
    let mut handles = Vec::new();
    for p in 0..producers {
        let (buffer, newest, violations, ops, max_len) =
            (Arc::clone(&buffer), Arc::clone(&newest), Arc::clone(&violations), Arc::clone(&ops), Arc::clone(&max_len));
        handles.push(thread::spawn(move || {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (p as u64 + 1));
            for i in 0..ops_per_thread {
                let top = newest.load(Ordering::Acquire);
                let version = top.saturating_sub(rng.random_range(0..3));
                let id = (p as u64) << 32 | i;
                match buffer.push(test_group(id, version, 1 + (i % 4) as usize)) {
                    Ok(()) => {}
                    Err(BufferError::VersionRegression { version: v, watermark }) if v < watermark => {}
                    Err(_) => {
                        violations.fetch_add(1, Ordering::Relaxed);
                    }
                }
                let len = buffer.len();
                if len > capacity {
                    violations.fetch_add(1, Ordering::Relaxed);
                }
                max_len.fetch_max(len as u64, Ordering::Relaxed);
                ops.fetch_add(1, Ordering::Relaxed);
            }
        }));
    }
    for c in 0..consumers {
        let (buffer, violations, ops) = (Arc::clone(&buffer), Arc::clone(&violations), Arc::clone(&ops));
        handles.push(thread::spawn(move || {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (0xc0 + c as u64));
            for _ in 0..ops_per_thread {
                let watermark = buffer.watermark();
                let version = (watermark + rng.random_range(0..3)).saturating_sub(1);
                let count = rng.random_range(1..4);
                match buffer.sample(version, count, &mut rng) {
                    Ok(groups) => {
                        let ids: std::collections::BTreeSet<u64> = groups.iter().map(|g| g.id).collect();
                        let mixed = groups
                            .iter()
                            .any(|g| g.version != version || g.samples.iter().any(|s| s.version != version));
                        if mixed || version < watermark || ids.len() != count {
                            violations.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    Err(BufferError::InsufficientData { .. }) => {}
                    Err(_) => {
                        violations.fetch_add(1, Ordering::Relaxed);
                    }
                }
                ops.fetch_add(1, Ordering::Relaxed);
            }
        }));
    }
    {
        let (buffer, newest, ops) = (Arc::clone(&buffer), Arc::clone(&newest), Arc::clone(&ops));
        handles.push(thread::spawn(move || {
            for v in 1..=200u64 {
                newest.store(v, Ordering::Release);
                thread::yield_now();
                buffer.discard(v - 1);
                ops.fetch_add(1, Ordering::Relaxed);
            }
        }));
    }
    for h in handles {
        h.join().unwrap();
    }
    let watermark = buffer.watermark();
    let mut v = violations.load(Ordering::Relaxed);
    if buffer.versions().iter().any(|&x| x < watermark) || buffer.len() > capacity {
        v += 1;
    }
    StressOutcome {
        ops: ops.load(Ordering::Relaxed),
        violations: v,
        dropped: buffer.stats().dropped,
        max_len: max_len.load(Ordering::Relaxed) as usize,
    }
}
