use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use quadrl_core::harness::{
    compare_modes, run_toy, run_toy_threaded, simulate_throughput, validate_schedule, LengthDist, PretrainConfig,
    RolloutConfig, ScheduleConfig, ScheduleViolation, SimConfig, SimMode, ToyRunConfig,
};
use quadrl_core::io::{read_obj, read_xyz, write_obj, IoError};
use quadrl_core::mesh::{QuantBounds, DEFAULT_BITS};
use quadrl_core::metrics::{broken_check, corpus_seed, quad_ratio, BrokenCheckConfig};
use quadrl_core::rewards::{analyze_mesh, report_window, RewardConfig};
use quadrl_core::rl::ArpoConfig;
use quadrl_core::tokfile::{decode_text, encode_text, read_qtok, write_qtok, TokFileError};
use quadrl_core::{canonicalize, detokenize, normalize_mesh, quantize_with_bounds, tokenize, Strictness};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Debug)]
enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

fn mesh_err(path: &Path, e: IoError) -> CliError {
    match e {
        IoError::Mesh(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => io_err(path, other),
    }
}

fn tok_err(path: &Path, e: TokFileError) -> CliError {
    match e {
        TokFileError::Token(t) => CliError::Validation(format!("{}: {t}", path.display())),
        other => io_err(path, other),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser, Debug)]
#[command(name = "quadrl", version, about = "Quad mesh tokenization, rewards and asynchronous ranking RL")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Normalize, quantize and tokenize an OBJ mesh into a QTOK file.
    Tokenize(TokenizeArgs),
    /// Decode a QTOK file back into an OBJ mesh in the normalization cube.
    Detokenize(DetokenizeArgs),
    /// Gated reward of a mesh against a condition point cloud.
    Reward(RewardArgs),
    /// Broken-mesh scores, broken ratio and quad ratio over OBJ files.
    Score(ScoreArgs),
    /// Asynchronous ARPO on the toy reproduction task.
    TrainToy(TrainArgs),
    /// Virtual-time throughput of synchronous and asynchronous training.
    BenchAsync(BenchArgs),
    /// Check a schedule against the update-frequency constraint.
    ValidateSchedule(ScheduleArgs),
}

#[derive(Args, Debug)]
struct TokenizeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_BITS)]
    bits: u32,
    /// Write one decimal token per line instead of the binary format.
    #[arg(long)]
    text: bool,
}

#[derive(Args, Debug)]
struct DetokenizeArgs {
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    /// Treat the input as the text format with this bit count.
    #[arg(long)]
    text_bits: Option<u32>,
    /// Skip malformed blocks instead of failing.
    #[arg(long)]
    permissive: bool,
}

#[derive(Args, Debug, Serialize)]
struct RewardFlags {
    #[arg(long, default_value_t = 0.1)]
    w_qr: f64,
    #[arg(long, default_value_t = 1.0)]
    theta_ray: f64,
    #[arg(long, default_value_t = 0.1)]
    theta_hd: f64,
    #[arg(long, default_value_t = 0.0)]
    theta_angle: f64,
    #[arg(long, default_value_t = 0.0005)]
    theta_ratio: f64,
    #[arg(long, default_value_t = 16)]
    probe_count: usize,
    #[arg(long, default_value_t = 0.01)]
    probe_radius: f64,
    #[arg(long, default_value_t = 32)]
    grid: usize,
    #[arg(long, default_value_t = 0.02)]
    grid_jitter: f64,
    #[arg(long, default_value_t = 16_384)]
    hd_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl RewardFlags {
    fn config(&self) -> RewardConfig {
        RewardConfig {
            w_qr: self.w_qr,
            theta_ray: self.theta_ray,
            theta_hd: self.theta_hd,
            theta_angle: self.theta_angle,
            theta_ratio: self.theta_ratio,
            probe_count: self.probe_count,
            probe_radius: self.probe_radius,
            grid_per_axis: self.grid,
            grid_jitter: self.grid_jitter,
            hd_samples: self.hd_samples,
            viewpoints: None,
            seed: self.seed,
        }
    }
}

#[derive(Args, Debug)]
struct RewardArgs {
    mesh: PathBuf,
    #[arg(long)]
    cloud: PathBuf,
    /// Score only faces `start..end`.
    #[arg(long, value_parser = parse_range)]
    window: Option<(usize, usize)>,
    #[command(flatten)]
    flags: RewardFlags,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let a: usize = a.parse().map_err(|_| "bad START")?;
    let b: usize = b.parse().map_err(|_| "bad END")?;
    if a > b {
        return Err("START exceeds END".into());
    }
    Ok((a, b))
}

#[derive(Args, Debug, Serialize)]
struct ScoreArgs {
    #[arg(required = true)]
    meshes: Vec<PathBuf>,
    /// Also write the per-mesh table here.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    theta_succ: f64,
    #[arg(long, default_value_t = 0.0)]
    theta_angle: f64,
    #[arg(long, default_value_t = 0.05)]
    sigma_rand: f64,
    #[arg(long, default_value_t = 64)]
    per_axis: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 50)]
    n1: usize,
    #[arg(long, default_value_t = 20)]
    n2: usize,
    #[arg(long, default_value_t = 1)]
    t: usize,
    #[arg(long, default_value_t = 4)]
    b: usize,
    #[arg(long, default_value_t = 20)]
    s1: usize,
    #[arg(long, default_value_t = 8)]
    s2: usize,
    #[arg(long, default_value_t = 4)]
    sigma: usize,
    #[arg(long, default_value_t = 8.0)]
    sigma_min: f64,
    #[arg(long, default_value_t = 64.0)]
    sigma_max: f64,
    /// Accept unequal pre-start and steady-state ratios.
    #[arg(long)]
    relax_equality: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

impl ScheduleArgs {
    fn config(&self) -> ScheduleConfig {
        ScheduleConfig {
            n1: self.n1,
            n2: self.n2,
            trainers: self.t,
            batch: self.b,
            s1: self.s1,
            s2: self.s2,
            sigma_min: self.sigma_min,
            sigma_max: self.sigma_max,
            sigma: self.sigma,
            relax_equality: self.relax_equality,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct TrainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    schedule: ScheduleArgs,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Truncations per generated batch.
    #[arg(long, default_value_t = 4)]
    truncations: usize,
    /// Window length in tokens.
    #[arg(long, default_value_t = 48)]
    window: usize,
    #[arg(long, default_value_t = 1.0)]
    lr: f64,
    #[arg(long, default_value_t = 0.97)]
    pretrain_accuracy: f64,
    #[arg(long, default_value_t = 2)]
    workers: usize,
    /// Last checkpoint version to train.
    #[arg(long, default_value_t = 5)]
    checkpoints: u64,
    #[arg(long, default_value_t = 5)]
    steps_per_round: usize,
    #[arg(long, default_value_t = 64)]
    eval_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1_000)]
    eval_seed: u64,
    /// Run workers and trainer on threads (not bit-reproducible).
    #[arg(long)]
    threaded: bool,
    /// Seconds the threaded trainer waits for data before giving up.
    #[arg(long, default_value_t = 120)]
    starvation_secs: u64,
    /// Directory for checkpoints and metrics.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum BenchMode {
    Sync,
    Async,
    Both,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
enum Dist {
    Constant,
    Lognormal,
}

#[derive(Args, Debug, Serialize)]
struct BenchArgs {
    #[arg(long, value_enum, default_value_t = BenchMode::Both)]
    mode: BenchMode,
    #[arg(long, value_enum, default_value_t = Dist::Lognormal)]
    dist: Dist,
    #[arg(long, default_value_t = 1.0)]
    mean: f64,
    #[arg(long, default_value_t = 1.0)]
    cv: f64,
    #[arg(long, default_value_t = 16)]
    workers: usize,
    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 64)]
    n2: usize,
    #[arg(long, default_value_t = 0.01)]
    train_step: f64,
    #[arg(long, default_value_t = 5000.0)]
    duration: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn print_json(value: &impl Serialize) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error worth a panic
    let text = serde_json::to_string_pretty(value).expect("serializable report");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn cmd_tokenize(a: &TokenizeArgs) -> Result<(), CliError> {
    let mesh = read_obj(&a.input).map_err(|e| mesh_err(&a.input, e))?;
    let normalized = normalize_mesh(&mesh).map_err(|e| CliError::Validation(e.to_string()))?;
    if !(2..=14).contains(&a.bits) {
        return Err(CliError::Validation(format!("bits must be in 2..=14, got {}", a.bits)));
    }
    let q = quantize_with_bounds(&normalized, a.bits, QuantBounds::normalized());
    let (canon, report) = canonicalize(&q.mesh);
    let seq = tokenize(&canon).map_err(|e| CliError::Validation(e.to_string()))?;
    if a.text {
        fs::write(&a.output, encode_text(&seq)).map_err(|e| io_err(&a.output, e))?;
    } else {
        write_qtok(&a.output, &seq).map_err(|e| tok_err(&a.output, e))?;
    }
    print_json(&json!({
        "faces": canon.faces().len(),
        "quads": canon.faces().iter().filter(|f| f.is_quad()).count(),
        "tokens": seq.len(),
        "bits": a.bits,
        "merged_vertices": report.merged_vertices,
        "dropped_faces": report.dropped_faces,
    }));
    Ok(())
}

fn cmd_detokenize(a: &DetokenizeArgs) -> Result<(), CliError> {
    let seq = match a.text_bits {
        Some(bits) => {
            let text = fs::read_to_string(&a.input).map_err(|e| io_err(&a.input, e))?;
            decode_text(&text, bits).map_err(|e| tok_err(&a.input, e))?
        }
        None => read_qtok(&a.input).map_err(|e| tok_err(&a.input, e))?,
    };
    let strictness = if a.permissive { Strictness::Permissive } else { Strictness::Strict };
    let decoded = detokenize(&seq, strictness).map_err(|e| CliError::Validation(e.to_string()))?;
    let mesh = decoded.mesh.dequantize(&QuantBounds::normalized());
    write_obj(&a.output, &mesh).map_err(|e| mesh_err(&a.output, e))?;
    print_json(&json!({
        "faces": mesh.faces().len(),
        "vertices": mesh.vertices().len(),
        "dropped_faces": decoded.dropped_faces,
        "bits": seq.bits(),
    }));
    Ok(())
}

fn cmd_reward(a: &RewardArgs) -> Result<(), CliError> {
    let mesh = read_obj(&a.mesh).map_err(|e| mesh_err(&a.mesh, e))?;
    let cloud = read_xyz(&a.cloud).map_err(|e| mesh_err(&a.cloud, e))?;
    let cfg = a.flags.config();
    let analysis = analyze_mesh(&mesh, &cloud, &cfg);
    let (start, end) = a.window.unwrap_or((0, mesh.faces().len()));
    let report = report_window(&mesh, &analysis, start..end, &cfg);
    print_json(&json!({
        "n_bad_faces": report.n_bad_faces,
        "hausdorff": report.hausdorff,
        "n_quad_rings": report.n_quad_rings,
        "n_quad_lines": report.n_quad_lines,
        "gate_passed": report.gated,
        "total": report.total,
        "precheck": {
            "hits": analysis.precheck.hits,
            "invalid_hits": analysis.precheck.invalid_hits,
            "invalid_ratio": analysis.precheck.invalid_ratio,
            "passed": analysis.precheck.passed,
        },
        "window": [start, end],
        "config": a.flags,
    }));
    Ok(())
}

#[derive(Serialize)]
struct ScoreRow {
    path: String,
    faces: usize,
    quad_ratio: f64,
    score: f64,
    hits: usize,
    errors: usize,
    is_broken: bool,
}

fn cmd_score(a: &ScoreArgs) -> Result<(), CliError> {
    let mut rows = Vec::with_capacity(a.meshes.len());
    for (i, path) in a.meshes.iter().enumerate() {
        let mesh = read_obj(path).map_err(|e| mesh_err(path, e))?;
        let cfg = BrokenCheckConfig {
            theta_angle: a.theta_angle,
            theta_succ: a.theta_succ,
            sigma_rand: a.sigma_rand,
            per_axis: a.per_axis,
            seed: corpus_seed(a.seed, i),
        };
        let s = broken_check(&mesh, &cfg).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let qr = quad_ratio(&mesh).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        rows.push(ScoreRow {
            path: path.display().to_string(),
            faces: mesh.faces().len(),
            quad_ratio: qr,
            score: s.score,
            hits: s.hits,
            errors: s.errors,
            is_broken: s.is_broken,
        });
    }
    if let Some(csv_path) = &a.csv {
        let mut w = csv::Writer::from_path(csv_path).map_err(|e| io_err(csv_path, e))?;
        for r in &rows {
            w.serialize(r).map_err(|e| io_err(csv_path, e))?;
        }
        w.flush().map_err(|e| io_err(csv_path, e))?;
    }
    let n = rows.len() as f64;
    print_json(&json!({
        "meshes": rows.len(),
        "broken_ratio": rows.iter().filter(|r| r.is_broken).count() as f64 / n,
        "mean_quad_ratio": rows.iter().map(|r| r.quad_ratio).sum::<f64>() / n,
        "rows": rows,
        "config": a,
    }));
    Ok(())
}

fn schedule_lines(cfg: &ScheduleConfig) -> (bool, Vec<String>) {
    let report = validate_schedule(cfg);
    let failed = |pred: &dyn Fn(&ScheduleViolation) -> bool| report.violations.iter().any(pred);
    let mark = |bad: bool| if bad { "FAIL" } else { "ok" };
    use ScheduleViolation::*;
    let mut lines = Vec::new();
    if let Some(NonPositiveField { field }) = report.violations.first() {
        lines.push(format!("{field} must be positive: FAIL"));
        return (false, lines);
    }
    lines.push(format!(
        "N2*T*B/S2 = {} within [{}, {}]: {}",
        report.steady_ratio,
        cfg.sigma_min,
        cfg.sigma_max,
        mark(failed(&|v| matches!(v, RatioBelowMin { .. } | RatioAboveMax { .. })))
    ));
    lines.push(format!(
        "N1*T*B/S1 = {} equals N2*T*B/S2{}: {}",
        report.prestart_ratio,
        if cfg.relax_equality { " (relaxed)" } else { "" },
        mark(failed(&|v| matches!(v, RatiosDiffer { .. })))
    ));
    lines.push(format!(
        "S1 = {} > S2 = {}: {}",
        cfg.s1,
        cfg.s2,
        mark(failed(&|v| matches!(v, PrestartNotLarger { .. })))
    ));
    lines.push(format!(
        "S2 = {} >= sigma = {}: {}",
        cfg.s2,
        cfg.sigma,
        mark(failed(&|v| matches!(v, BufferBelowSigma { .. })))
    ));
    lines.push(format!(
        "N2 = {} < N1 = {}: {}",
        cfg.n2,
        cfg.n1,
        mark(failed(&|v| matches!(v, StepsNotIncreasing { .. })))
    ));
    lines.push(format!(
        "T*B = {} fits in S2 = {}: {}",
        cfg.trainers * cfg.batch,
        cfg.s2,
        mark(failed(&|v| matches!(v, BatchExceedsBuffer { .. })))
    ));
    (report.is_valid(), lines)
}

fn cmd_validate_schedule(a: &ScheduleArgs) -> Result<(), CliError> {
    let cfg = a.config();
    let report = validate_schedule(&cfg);
    if a.json {
        print_json(&json!({ "valid": report.is_valid(), "report": report, "config": a }));
    } else {
        let (valid, lines) = schedule_lines(&cfg);
        for l in lines {
            println!("{l}");
        }
        println!("{}", if valid { "schedule valid" } else { "schedule invalid" });
    }
    if report.is_valid() {
        Ok(())
    } else {
        Err(CliError::Validation("schedule violates the update-frequency constraint".into()))
    }
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let schedule = a.schedule.config();
    let report = validate_schedule(&schedule);
    if !report.is_valid() {
        print_json(&json!({ "valid": false, "report": report, "config": a }));
        return Err(CliError::Validation("invalid schedule".into()));
    }
    let cfg = ToyRunConfig {
        arpo: ArpoConfig { beta: a.beta, k: a.k, ..ArpoConfig::default() },
        schedule,
        rollout: RolloutConfig { k: a.k, truncations: a.truncations, window: a.window },
        pretrain: PretrainConfig { target_accuracy: a.pretrain_accuracy, ..PretrainConfig::default() },
        lr: a.lr,
        rollout_workers: a.workers,
        final_version: a.checkpoints,
        steps_per_round: a.steps_per_round,
        eval_samples: a.eval_samples,
        seed: a.seed,
        eval_seed: a.eval_seed,
        checkpoint_dir: a.out.as_ref().map(|d| d.join("checkpoints")),
    };
    let run = if a.threaded { run_toy_threaded(&cfg, Duration::from_secs(a.starvation_secs)) } else { run_toy(&cfg) }
        .map_err(|e| match e {
        quadrl_core::harness::HarnessError::Io(m) => CliError::Io(m),
        other => CliError::Validation(other.to_string()),
    })?;
    let out = json!({
        "pretrain": run.pretrain,
        "published": run.published,
        "checkpoints": run.checkpoints,
        "training_steps": run.steps.len(),
        "rollout_batches": run.rollouts,
        "buffer": run.buffer,
        "config": a,
    });
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join("metrics.json");
        fs::write(&path, serde_json::to_string_pretty(&out).expect("serializable")).map_err(|e| io_err(&path, e))?;
    }
    print_json(&out);
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> Result<(), CliError> {
    let positive = |x: f64| x.is_finite() && x > 0.0;
    let counts_ok = a.workers > 0 && a.batch > 0 && a.n2 > 0;
    if !counts_ok || !positive(a.mean) || !positive(a.duration) || !(a.cv.is_finite() && a.cv >= 0.0) {
        return Err(CliError::Validation(
            "workers, batch, n2, mean and duration must be positive, cv non-negative".into(),
        ));
    }
    let lengths = match a.dist {
        Dist::Constant => LengthDist::Constant { mean: a.mean },
        Dist::Lognormal => LengthDist::LogNormal { mean: a.mean, cv: a.cv },
    };
    let cfg = SimConfig {
        workers: a.workers,
        batch: a.batch,
        n2: a.n2,
        train_step: a.train_step,
        lengths,
        duration: a.duration,
        seed: a.seed,
    };
    match a.mode {
        BenchMode::Both => print_json(&json!({ "comparison": compare_modes(&cfg), "config": a })),
        BenchMode::Sync => print_json(&json!({ "sync": simulate_throughput(SimMode::Sync, &cfg), "config": a })),
        BenchMode::Async => print_json(&json!({ "async": simulate_throughput(SimMode::Async, &cfg), "config": a })),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Tokenize(a) => cmd_tokenize(a),
        Command::Detokenize(a) => cmd_detokenize(a),
        Command::Reward(a) => cmd_reward(a),
        Command::Score(a) => cmd_score(a),
        Command::TrainToy(a) => cmd_train(a),
        Command::BenchAsync(a) => cmd_bench(a),
        Command::ValidateSchedule(a) => cmd_validate_schedule(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let informational =
                matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Validation(m) | CliError::Io(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(e.code())
        }
    }
}
