use crate::rl::RlError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArpoConfig {
    pub beta: f64,
    /// Guard in the advantage denominator.
    pub eps: f64,
    /// Group size.
    pub k: usize,
}

impl Default for ArpoConfig {
    fn default() -> Self {
        ArpoConfig { beta: 1.0, eps: 1e-8, k: 4 }
    }
}

/// Token range `[m, m + w)` of a sequence of length `len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub m: usize,
    pub w: usize,
    pub len: usize,
}

impl Window {
    pub fn full(len: usize) -> Window {
        Window { m: 0, w: len, len }
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.m..self.m + self.w
    }

    pub fn check(&self) -> Result<(), RlError> {
        if self.m + self.w > self.len {
            return Err(RlError::WindowOutOfRange { m: self.m, w: self.w, len: self.len });
        }
        Ok(())
    }
}

/// One member of a group: log-probabilities under the current and reference
/// policies (restricted to `window` when present) and its reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub logp: f64,
    pub ref_logp: f64,
    pub reward: f64,
    pub window: Option<Window>,
}

impl Sample {
    pub fn new(logp: f64, ref_logp: f64, reward: f64) -> Sample {
        Sample { logp, ref_logp, reward, window: None }
    }

    pub fn log_ratio(&self) -> f64 {
        self.logp - self.ref_logp
    }
}

/// A group sorted by descending reward (stable, so ties keep input order).
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSamples {
    samples: Vec<Sample>,
    order: Vec<usize>,
}

impl GroupSamples {
    pub fn new(samples: Vec<Sample>) -> Result<GroupSamples, RlError> {
        if samples.is_empty() {
            return Err(RlError::EmptyGroup);
        }
        if samples.iter().any(|s| !(s.logp.is_finite() && s.ref_logp.is_finite() && s.reward.is_finite())) {
            return Err(RlError::NonFiniteLogProb);
        }
        let mut order: Vec<usize> = (0..samples.len()).collect();
        order.sort_by(|&a, &b| samples[b].reward.total_cmp(&samples[a].reward));
        let samples = order.iter().map(|&i| samples[i]).collect();
        Ok(GroupSamples { samples, order })
    }

    /// Samples in preference order.
    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// `order()[k]` is the input position of the k-th ranked sample.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.reward).collect()
    }

    /// Implicit rewards `s_i = β (log π − log π_ref)`.
    pub fn scores(&self, beta: f64) -> Vec<f64> {
        self.samples.iter().map(|s| beta * s.log_ratio()).collect()
    }
}

pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `log σ(x)` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    log_sigmoid(x).exp()
}

/// `A_k = (R_k − min R) / (Σ (R_j − min R) + ε)`.
pub fn advantages(rewards: &[f64], eps: f64) -> Vec<f64> {
    let min = rewards.iter().copied().fold(f64::INFINITY, f64::min);
    let diffs: Vec<f64> = rewards.iter().map(|r| r - min).collect();
    let total: f64 = diffs.iter().sum::<f64>() + eps;
    diffs.iter().map(|d| d / total).collect()
}

/// The per-rank terms `s_k − logsumexp(s_k..)`.
fn pl_terms(s: &[f64]) -> Vec<f64> {
    (0..s.len()).map(|k| s[k] - logsumexp(&s[k..])).collect()
}

/// Plackett–Luce log-probability of the ranking `s[0] ≻ s[1] ≻ …`.
pub fn pl_score_logprob(s: &[f64]) -> f64 {
    pl_terms(s).iter().sum()
}

pub fn pl_ranking_logprob(group: &GroupSamples, beta: f64) -> Result<f64, RlError> {
    let s = group.scores(beta);
    if s.iter().any(|x| !x.is_finite()) {
        return Err(RlError::NonFiniteLogProb);
    }
    Ok(pl_score_logprob(&s))
}

/// `−Σ_i A_i [s_i − logsumexp_{j≥i} s_j]`.
pub fn arpo_loss(group: &GroupSamples, cfg: &ArpoConfig) -> Result<f64, RlError> {
    let s = group.scores(cfg.beta);
    if s.iter().any(|x| !x.is_finite()) {
        return Err(RlError::NonFiniteLogProb);
    }
    let a = advantages(&group.rewards(), cfg.eps);
    Ok(-pl_terms(&s).iter().zip(&a).map(|(t, a)| a * t).sum::<f64>())
}

/// Same loss on window-restricted log-probabilities; every window must lie
/// inside its sequence.
pub fn truncated_arpo_loss(group: &GroupSamples, cfg: &ArpoConfig) -> Result<f64, RlError> {
    for s in group.samples() {
        if let Some(w) = s.window {
            w.check()?;
        }
    }
    arpo_loss(group, cfg)
}

pub fn dpo_loss(winner_logratio: f64, loser_logratio: f64, beta: f64) -> f64 {
    -log_sigmoid(beta * (winner_logratio - loser_logratio))
}

/// `∂L/∂s_k = −A_k + Σ_{i≤k} A_i · softmax(s_i..)_k`, in rank order.
pub fn arpo_score_gradient(s: &[f64], adv: &[f64]) -> Vec<f64> {
    let k = s.len();
    let mut grad: Vec<f64> = adv.iter().map(|a| -a).collect();
    for i in 0..k {
        if adv[i] == 0.0 {
            continue;
        }
        let lse = logsumexp(&s[i..]);
        for j in i..k {
            grad[j] += adv[i] * (s[j] - lse).exp();
        }
    }
    grad
}

fn check_grads(group: &GroupSamples, grads: &[Vec<f64>]) -> Result<usize, RlError> {
    if grads.len() != group.len() {
        return Err(RlError::ShapeMismatch { expected: group.len(), got: grads.len() });
    }
    let dim = grads[0].len();
    if let Some(g) = grads.iter().find(|g| g.len() != dim) {
        return Err(RlError::ShapeMismatch { expected: dim, got: g.len() });
    }
    Ok(dim)
}

/// Exact parameter gradient of [`arpo_loss`]. `grads[i]` is `∇ log π(y_i)` for
/// the i-th sample in input order.
pub fn arpo_gradient(group: &GroupSamples, grads: &[Vec<f64>], cfg: &ArpoConfig) -> Result<Vec<f64>, RlError> {
    let dim = check_grads(group, grads)?;
    let s = group.scores(cfg.beta);
    let a = advantages(&group.rewards(), cfg.eps);
    let ds = arpo_score_gradient(&s, &a);
    let mut out = vec![0.0; dim];
    for (rank, &input) in group.order().iter().enumerate() {
        let c = ds[rank] * cfg.beta;
        if c != 0.0 {
            for (o, g) in out.iter_mut().zip(&grads[input]) {
                *o += c * g;
            }
        }
    }
    Ok(out)
}

/// Pairwise form `−β Σ_{i<j} A_i σ(−β Δ_ij) (∇ log π_i − ∇ log π_j)`.
/// Equal to [`arpo_gradient`] for groups of two only.
pub fn arpo_gradient_pairwise(group: &GroupSamples, grads: &[Vec<f64>], cfg: &ArpoConfig) -> Result<Vec<f64>, RlError> {
    let dim = check_grads(group, grads)?;
    let s = group.scores(cfg.beta);
    let a = advantages(&group.rewards(), cfg.eps);
    let order = group.order();
    let mut out = vec![0.0; dim];
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let c = -cfg.beta * a[i] * sigmoid(-(s[i] - s[j]));
            if c == 0.0 {
                continue;
            }
            for ((o, gi), gj) in out.iter_mut().zip(&grads[order[i]]).zip(&grads[order[j]]) {
                *o += c * (gi - gj);
            }
        }
    }
    Ok(out)
}

/// Largest absolute component difference between the pairwise and exact gradients.
pub fn pairwise_discrepancy(group: &GroupSamples, grads: &[Vec<f64>], cfg: &ArpoConfig) -> Result<f64, RlError> {
    let exact = arpo_gradient(group, grads, cfg)?;
    let pairwise = arpo_gradient_pairwise(group, grads, cfg)?;
    Ok(exact.iter().zip(&pairwise).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}
