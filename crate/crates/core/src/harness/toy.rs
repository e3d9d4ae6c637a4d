use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::geometry::sample_surface_points;
use crate::mesh::{canonicalize, normalize_mesh, quantize_with_bounds, Mesh, Point3, QuantBounds, QuantizedMesh};
use crate::metrics::corpus_seed;
use crate::procedural::{cube, prism};
use crate::rewards::{analyze_mesh, report_window, MeshAnalysis, RewardConfig, RewardReport};
use crate::rl::{PolicyShape, RlError, StopRule, ToyPolicy};
use crate::tokenizer::{detokenize, tokenize, vocab_size, Detokenized, Strictness, TokenSequence, BLOCK_LEN};

/// One target shape of the toy task.
#[derive(Debug, Clone)]
pub struct ToyCondition {
    pub name: &'static str,
    pub target: QuantizedMesh,
    pub tokens: Vec<u32>,
    /// The dequantized target.
    pub mesh: Mesh,
    /// Surface samples of `mesh`; the reward compares generations against these.
    pub cloud: Vec<Point3>,
}

/// Reproduce a small closed mesh from its condition id at 3-bit resolution.
#[derive(Debug, Clone)]
pub struct ToyTask {
    pub bits: u32,
    pub conditions: Vec<ToyCondition>,
    pub reward: RewardConfig,
}

/// A decoded generation and its whole-mesh reward analysis.
#[derive(Debug, Clone)]
pub struct ScoredGeneration {
    pub decoded: Option<Detokenized>,
    pub mesh: Mesh,
    pub analysis: Option<MeshAnalysis>,
}

impl ScoredGeneration {
    /// Reward of the faces produced by token range `[m, m + w)`.
    pub fn window_report(&self, m: usize, w: usize, cfg: &RewardConfig) -> RewardReport {
        let (Some(decoded), Some(analysis)) = (&self.decoded, &self.analysis) else {
            return RewardReport {
                n_bad_faces: 0,
                hausdorff: f64::INFINITY,
                n_quad_rings: 0,
                n_quad_lines: 0,
                gated: false,
                total: 0.0,
            };
        };
        let faces = decoded.faces_in_blocks(m / BLOCK_LEN, w / BLOCK_LEN);
        report_window(&self.mesh, analysis, faces, cfg)
    }

    pub fn full_report(&self, cfg: &RewardConfig) -> RewardReport {
        let len = self.decoded.as_ref().map_or(0, |d| d.block_faces.len() * BLOCK_LEN);
        self.window_report(0, len, cfg)
    }
}

impl ToyTask {
    pub const BITS: u32 = 3;

    /// Cube and triangular prism, normalized and quantized against the fixed
    /// normalization cube.
    pub fn standard() -> ToyTask {
        let h = crate::mesh::NORMALIZED_HALF_EXTENT;
        let reward = RewardConfig { grid_per_axis: 16, hd_samples: 16_384, ..RewardConfig::default() };
        let shapes = [("cube", cube()), ("prism", prism([-h; 3], [h; 3]))];
        let conditions = shapes
            .into_iter()
            .enumerate()
            .map(|(i, (name, mesh))| {
                let normalized = normalize_mesh(&mesh).expect("procedural shapes have extent");
                let q = quantize_with_bounds(&normalized, Self::BITS, QuantBounds::normalized());
                let (target, _) = canonicalize(&q.mesh);
                let tokens = tokenize(&target).expect("canonical target tokenizes").into_tokens();
                let mesh = target.dequantize(&QuantBounds::normalized());
                let cloud =
                    sample_surface_points(&mesh, reward.hd_samples, 0xc10d + i as u64).expect("target has area");
                ToyCondition { name, target, tokens, mesh, cloud }
            })
            .collect();
        ToyTask { bits: Self::BITS, conditions, reward }
    }

    pub fn vocab(&self) -> usize {
        vocab_size(self.bits)
    }

    pub fn max_len(&self) -> usize {
        self.conditions.iter().map(|c| c.tokens.len()).max().unwrap_or(0)
    }

    /// Per-position categorical table, one per condition.
    pub fn policy_shape(&self) -> PolicyShape {
        PolicyShape { vocab: self.vocab(), order: 0, positions: self.max_len(), conditions: self.conditions.len() }
    }

    /// Decode strictly, falling back to permissive decoding, then score the
    /// whole mesh once.
    pub fn score(&self, condition: usize, tokens: &[u32]) -> ScoredGeneration {
        let decoded = TokenSequence::new(tokens.to_vec(), self.bits).ok().and_then(|seq| {
            detokenize(&seq, Strictness::Strict).or_else(|_| detokenize(&seq, Strictness::Permissive)).ok()
        });
        let mesh = decoded.as_ref().map_or_else(Mesh::default, |d| d.mesh.dequantize(&QuantBounds::normalized()));
        let analysis = (!mesh.is_empty()).then(|| analyze_mesh(&mesh, &self.conditions[condition].cloud, &self.reward));
        ScoredGeneration { decoded, mesh, analysis }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PretrainConfig {
    /// Stop once the mean teacher-forced probability of the target token reaches this.
    pub target_accuracy: f64,
    pub lr: f64,
    pub max_steps: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig { target_accuracy: 0.97, lr: 0.5, max_steps: 10_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PretrainReport {
    pub steps: usize,
    pub accuracy: f64,
}

/// Mean probability the policy assigns to each target token under teacher forcing.
pub fn teacher_forced_accuracy(policy: &ToyPolicy, task: &ToyTask) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (c, cond) in task.conditions.iter().enumerate() {
        for t in 0..cond.tokens.len() {
            total += policy.next_token_probs(c, &cond.tokens[..t])[cond.tokens[t] as usize];
            count += 1;
        }
    }
    total / count.max(1) as f64
}

/// Full-batch likelihood training from the uniform policy until the
/// teacher-forced accuracy reaches the target. This plays the role of the
/// pretrained reference policy.
pub fn pretrain(task: &ToyTask, cfg: &PretrainConfig) -> Result<(ToyPolicy, PretrainReport), RlError> {
    let mut policy = ToyPolicy::uniform(task.policy_shape());
    let mut steps = 0;
    let mut accuracy = teacher_forced_accuracy(&policy, task);
    while accuracy < cfg.target_accuracy && steps < cfg.max_steps {
        let mut grad = vec![0.0; policy.params().len()];
        for (c, cond) in task.conditions.iter().enumerate() {
            policy.accumulate_logprob_grad(c, &cond.tokens, None, -1.0, &mut grad)?;
        }
        policy = policy.sgd_step(&grad, cfg.lr)?;
        steps += 1;
        accuracy = teacher_forced_accuracy(&policy, task);
    }
    Ok((policy, PretrainReport { steps, accuracy }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalMetrics {
    pub version: u64,
    pub mean_reward: f64,
    pub gate_pass_rate: f64,
    pub mean_quad_rings: f64,
    pub mean_quad_lines: f64,
    /// Generations equal to the target token for token.
    pub exact_rate: f64,
}

/// Whole-mesh rewards of `samples` generations per condition. Sample `i` of
/// condition `c` always uses the same random stream, so checkpoints are
/// compared on common noise.
pub fn evaluate(policy: &ToyPolicy, version: u64, task: &ToyTask, samples: usize, seed: u64) -> EvalMetrics {
    let mut sums = [0.0f64; 5];
    let mut n = 0usize;
    for (c, cond) in task.conditions.iter().enumerate() {
        // identical generations (mostly exact reproductions) are scored once
        let mut seen: HashMap<Vec<u32>, RewardReport> = HashMap::new();
        for i in 0..samples {
            let mut rng = ChaCha8Rng::seed_from_u64(corpus_seed(seed, c * samples + i));
            let tokens = policy.sample(c, cond.tokens.len(), StopRule::MaxLen, &mut rng);
            let report =
                *seen.entry(tokens.clone()).or_insert_with(|| task.score(c, &tokens).full_report(&task.reward));
            sums[0] += report.total;
            sums[1] += report.gated as u8 as f64;
            sums[2] += report.n_quad_rings as f64;
            sums[3] += report.n_quad_lines as f64;
            sums[4] += (tokens == cond.tokens) as u8 as f64;
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    EvalMetrics {
        version,
        mean_reward: sums[0] / n,
        gate_pass_rate: sums[1] / n,
        mean_quad_rings: sums[2] / n,
        mean_quad_lines: sums[3] / n,
        exact_rate: sums[4] / n,
    }
}
