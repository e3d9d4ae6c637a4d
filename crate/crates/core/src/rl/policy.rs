use std::fs;
use std::path::Path;

use rand::Rng;

use crate::rl::RlError;

/// Layout of the logits table. A context is `(condition, position, previous
/// token)`; position is only distinguished when `positions > 0` (later
/// positions share the last row) and the previous token only when `order == 1`
/// (the first token sees a dedicated start context).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyShape {
    pub vocab: usize,
    pub order: u8,
    pub positions: usize,
    pub conditions: usize,
}

impl PolicyShape {
    pub fn bigram(vocab: usize) -> PolicyShape {
        PolicyShape { vocab, order: 1, positions: 0, conditions: 1 }
    }

    fn prev_slots(&self) -> usize {
        if self.order == 1 {
            self.vocab + 1
        } else {
            1
        }
    }

    pub fn contexts(&self) -> usize {
        self.conditions.max(1) * self.positions.max(1) * self.prev_slots()
    }

    pub fn param_count(&self) -> usize {
        self.contexts() * self.vocab
    }

    fn context(&self, condition: usize, t: usize, prev: Option<u32>) -> usize {
        let pos = if self.positions == 0 { 0 } else { t.min(self.positions - 1) };
        let prev = if self.order == 1 { prev.map_or(self.vocab, |p| p as usize) } else { 0 };
        (condition * self.positions.max(1) + pos) * self.prev_slots() + prev
    }
}

/// When sampling stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Only at `max_len`.
    MaxLen,
    /// After emitting this token (it is kept).
    Token(u32),
}

/// Softmax-table autoregressive policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyPolicy {
    shape: PolicyShape,
    params: Vec<f64>,
}

impl ToyPolicy {
    /// All-zero logits: the uniform policy.
    pub fn uniform(shape: PolicyShape) -> ToyPolicy {
        ToyPolicy { shape, params: vec![0.0; shape.param_count()] }
    }

    pub fn from_params(shape: PolicyShape, params: Vec<f64>) -> Result<ToyPolicy, RlError> {
        if params.len() != shape.param_count() {
            return Err(RlError::ShapeMismatch { expected: shape.param_count(), got: params.len() });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(RlError::NonFiniteLogProb);
        }
        Ok(ToyPolicy { shape, params })
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn vocab(&self) -> usize {
        self.shape.vocab
    }

    fn row(&self, ctx: usize) -> &[f64] {
        let v = self.shape.vocab;
        &self.params[ctx * v..(ctx + 1) * v]
    }

    fn log_softmax(row: &[f64]) -> Vec<f64> {
        let lse = crate::rl::logsumexp(row);
        row.iter().map(|x| x - lse).collect()
    }

    fn check(&self, condition: usize, tokens: &[u32]) -> Result<(), RlError> {
        if condition >= self.shape.conditions.max(1) {
            return Err(RlError::UnknownCondition { condition, conditions: self.shape.conditions });
        }
        if let Some(&token) = tokens.iter().find(|&&t| t as usize >= self.shape.vocab) {
            return Err(RlError::TokenOutOfVocab { token, vocab: self.shape.vocab });
        }
        Ok(())
    }

    /// Next-token distribution after `prefix`.
    pub fn next_token_probs(&self, condition: usize, prefix: &[u32]) -> Vec<f64> {
        let ctx = self.shape.context(condition, prefix.len(), prefix.last().copied());
        Self::log_softmax(self.row(ctx)).into_iter().map(f64::exp).collect()
    }

    fn window_range(tokens: &[u32], window: Option<(usize, usize)>) -> Result<std::ops::Range<usize>, RlError> {
        let (m, w) = window.unwrap_or((0, tokens.len()));
        if m + w > tokens.len() {
            return Err(RlError::WindowOutOfRange { m, w, len: tokens.len() });
        }
        Ok(m..m + w)
    }

    /// `Σ_{t ∈ window} log p(y_t | context)`; the whole sequence by default.
    pub fn sequence_logprob(
        &self,
        condition: usize,
        tokens: &[u32],
        window: Option<(usize, usize)>,
    ) -> Result<f64, RlError> {
        self.check(condition, tokens)?;
        let mut total = 0.0;
        for t in Self::window_range(tokens, window)? {
            let ctx = self.shape.context(condition, t, t.checked_sub(1).map(|p| tokens[p]));
            let row = self.row(ctx);
            total += row[tokens[t] as usize] - crate::rl::logsumexp(row);
        }
        Ok(total)
    }

    /// Adds `coef · ∇ sequence_logprob` into `grad`.
    pub fn accumulate_logprob_grad(
        &self,
        condition: usize,
        tokens: &[u32],
        window: Option<(usize, usize)>,
        coef: f64,
        grad: &mut [f64],
    ) -> Result<(), RlError> {
        self.check(condition, tokens)?;
        if grad.len() != self.params.len() {
            return Err(RlError::ShapeMismatch { expected: self.params.len(), got: grad.len() });
        }
        let v = self.shape.vocab;
        for t in Self::window_range(tokens, window)? {
            let ctx = self.shape.context(condition, t, t.checked_sub(1).map(|p| tokens[p]));
            let logp = Self::log_softmax(self.row(ctx));
            let base = ctx * v;
            for (j, lp) in logp.iter().enumerate() {
                grad[base + j] -= coef * lp.exp();
            }
            grad[base + tokens[t] as usize] += coef;
        }
        Ok(())
    }

    /// Dense `∇ sequence_logprob`.
    pub fn logprob_grad(
        &self,
        condition: usize,
        tokens: &[u32],
        window: Option<(usize, usize)>,
    ) -> Result<Vec<f64>, RlError> {
        let mut g = vec![0.0; self.params.len()];
        self.accumulate_logprob_grad(condition, tokens, window, 1.0, &mut g)?;
        Ok(g)
    }

    /// Autoregressive sampling by the Gumbel-max trick; the random stream is
    /// consumed one vocabulary-sized block per token, so two policies driven
    /// by equally seeded generators share their noise.
    pub fn sample(&self, condition: usize, max_len: usize, stop: StopRule, rng: &mut impl Rng) -> Vec<u32> {
        let mut out = Vec::with_capacity(max_len);
        while out.len() < max_len {
            let ctx = self.shape.context(condition, out.len(), out.last().copied());
            let row = self.row(ctx);
            let mut best = (f64::NEG_INFINITY, 0u32);
            for (j, &logit) in row.iter().enumerate() {
                let u: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
                let key = logit - (-u.ln()).ln();
                if key > best.0 {
                    best = (key, j as u32);
                }
            }
            out.push(best.1);
            if stop == StopRule::Token(best.1) {
                break;
            }
        }
        out
    }

    /// Most likely continuation, token by token.
    pub fn greedy(&self, condition: usize, max_len: usize) -> Vec<u32> {
        let mut out = Vec::with_capacity(max_len);
        while out.len() < max_len {
            let ctx = self.shape.context(condition, out.len(), out.last().copied());
            let row = self.row(ctx);
            let best = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b]).then(b.cmp(&a))).unwrap_or(0);
            out.push(best as u32);
        }
        out
    }

    /// `params − lr · gradient` as a new policy.
    pub fn sgd_step(&self, gradient: &[f64], lr: f64) -> Result<ToyPolicy, RlError> {
        if gradient.len() != self.params.len() {
            return Err(RlError::ShapeMismatch { expected: self.params.len(), got: gradient.len() });
        }
        let params = self.params.iter().zip(gradient).map(|(p, g)| p - lr * g).collect();
        ToyPolicy::from_params(self.shape, params)
    }
}

/// A policy snapshot tagged with the version it was published as.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyCheckpoint {
    pub version: u64,
    pub policy: ToyPolicy,
}

const CKPT_MAGIC: &[u8; 4] = b"QPOL";
const CKPT_FORMAT: u16 = 1;
const CKPT_HEADER: usize = 40;

/// Header (magic, format, order, vocab, positions, conditions, version,
/// parameter count; little-endian) followed by row-major `f64` parameters.
pub fn encode_checkpoint(ckpt: &PolicyCheckpoint) -> Vec<u8> {
    let shape = ckpt.policy.shape;
    let mut out = Vec::with_capacity(CKPT_HEADER + 8 * ckpt.policy.params.len());
    out.extend_from_slice(CKPT_MAGIC);
    out.extend_from_slice(&CKPT_FORMAT.to_le_bytes());
    out.extend_from_slice(&(shape.order as u16).to_le_bytes());
    out.extend_from_slice(&(shape.vocab as u32).to_le_bytes());
    out.extend_from_slice(&(shape.positions as u32).to_le_bytes());
    out.extend_from_slice(&(shape.conditions as u32).to_le_bytes());
    out.extend_from_slice(&[0u8; 4]);
    out.extend_from_slice(&ckpt.version.to_le_bytes());
    out.extend_from_slice(&(ckpt.policy.params.len() as u64).to_le_bytes());
    for p in &ckpt.policy.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<PolicyCheckpoint, RlError> {
    let bad = |m: &str| RlError::Checkpoint(m.to_string());
    if bytes.len() < CKPT_HEADER || &bytes[..4] != CKPT_MAGIC {
        return Err(bad("not a policy checkpoint"));
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let u64_at = |i: usize| u64::from_le_bytes(bytes[i..i + 8].try_into().expect("8 bytes"));
    if u16_at(4) != CKPT_FORMAT {
        return Err(bad("unsupported format version"));
    }
    let order = u16_at(6);
    if order > 1 {
        return Err(bad("context order must be 0 or 1"));
    }
    let shape = PolicyShape {
        order: order as u8,
        vocab: u32_at(8) as usize,
        positions: u32_at(12) as usize,
        conditions: u32_at(16) as usize,
    };
    let version = u64_at(24);
    let count = u64_at(32) as usize;
    let body = &bytes[CKPT_HEADER..];
    if body.len() != count * 8 {
        return Err(bad("parameter block length does not match header"));
    }
    let params = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok(PolicyCheckpoint { version, policy: ToyPolicy::from_params(shape, params)? })
}

pub fn write_checkpoint(path: impl AsRef<Path>, ckpt: &PolicyCheckpoint) -> std::io::Result<()> {
    fs::write(path, encode_checkpoint(ckpt))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<PolicyCheckpoint, RlError> {
    let bytes = fs::read(path).map_err(|e| RlError::Checkpoint(e.to_string()))?;
    decode_checkpoint(&bytes)
}
