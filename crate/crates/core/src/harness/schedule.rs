use serde::Serialize;

/// Step counts and buffer sizes of the asynchronous schedule. Buffer sizes
/// and batch sizes count sample groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleConfig {
    /// Training steps before the first checkpoint.
    pub n1: usize,
    /// Training steps between later checkpoints.
    pub n2: usize,
    /// Trainer worker count.
    pub trainers: usize,
    /// Groups per trainer per step.
    pub batch: usize,
    /// Groups collected before pre-start training begins.
    pub s1: usize,
    /// Groups of the current version collected before each later cycle.
    pub s2: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Smallest allowed steady-state buffer.
    pub sigma: usize,
    /// Accept unequal pre-start and steady-state ratios.
    pub relax_equality: bool,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            n1: 50,
            n2: 20,
            trainers: 1,
            batch: 4,
            s1: 20,
            s2: 8,
            sigma_min: 8.0,
            sigma_max: 64.0,
            sigma: 4,
            relax_equality: false,
        }
    }
}

impl ScheduleConfig {
    /// `N_2 · T · B / S_2`: how often each steady-state group is reused.
    pub fn steady_ratio(&self) -> f64 {
        (self.n2 * self.trainers * self.batch) as f64 / self.s2 as f64
    }

    /// `N_1 · T · B / S_1`.
    pub fn prestart_ratio(&self) -> f64 {
        (self.n1 * self.trainers * self.batch) as f64 / self.s1 as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum ScheduleViolation {
    NonPositiveField { field: &'static str },
    RatioBelowMin { ratio: f64, min: f64 },
    RatioAboveMax { ratio: f64, max: f64 },
    RatiosDiffer { steady: f64, prestart: f64 },
    PrestartNotLarger { s1: usize, s2: usize },
    BufferBelowSigma { s2: usize, sigma: usize },
    StepsNotIncreasing { n1: usize, n2: usize },
    BatchExceedsBuffer { batch: usize, s2: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleReport {
    pub steady_ratio: f64,
    pub prestart_ratio: f64,
    pub violations: Vec<ScheduleViolation>,
}

impl ScheduleReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `σ_min ≤ N_2·T·B/S_2 = N_1·T·B/S_1 ≤ σ_max` (equality to 1e-9 relative
/// unless relaxed), `S_1 > S_2 ≥ σ`, `N_2 < N_1`, and that one step's
/// batch fits in the steady-state buffer.
pub fn validate_schedule(cfg: &ScheduleConfig) -> ScheduleReport {
    use ScheduleViolation::*;
    let mut violations = Vec::new();
    for (field, v) in [
        ("n1", cfg.n1),
        ("n2", cfg.n2),
        ("trainers", cfg.trainers),
        ("batch", cfg.batch),
        ("s1", cfg.s1),
        ("s2", cfg.s2),
    ] {
        if v == 0 {
            violations.push(NonPositiveField { field });
        }
    }
    if !violations.is_empty() {
        return ScheduleReport { steady_ratio: f64::NAN, prestart_ratio: f64::NAN, violations };
    }
    let steady = cfg.steady_ratio();
    let prestart = cfg.prestart_ratio();
    if steady < cfg.sigma_min {
        violations.push(RatioBelowMin { ratio: steady, min: cfg.sigma_min });
    }
    if steady > cfg.sigma_max {
        violations.push(RatioAboveMax { ratio: steady, max: cfg.sigma_max });
    }
    if !cfg.relax_equality && (steady - prestart).abs() > 1e-9 * steady.abs().max(1.0) {
        violations.push(RatiosDiffer { steady, prestart });
    }
    if cfg.s1 <= cfg.s2 {
        violations.push(PrestartNotLarger { s1: cfg.s1, s2: cfg.s2 });
    }
    if cfg.s2 < cfg.sigma {
        violations.push(BufferBelowSigma { s2: cfg.s2, sigma: cfg.sigma });
    }
    if cfg.n2 >= cfg.n1 {
        violations.push(StepsNotIncreasing { n1: cfg.n1, n2: cfg.n2 });
    }
    if cfg.batch * cfg.trainers > cfg.s2 {
        violations.push(BatchExceedsBuffer { batch: cfg.batch * cfg.trainers, s2: cfg.s2 });
    }
    ScheduleReport { steady_ratio: steady, prestart_ratio: prestart, violations }
}
