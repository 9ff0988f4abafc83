//! The `gridlander` command line.
//!
//! Exit codes: 0 success, 1 runtime or numeric fault, 2 usage or
//! configuration error. Every command resolves and validates its full
//! configuration and reads its inputs before it creates any output.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand};
use gridlander_core::dqn::tabular::{
    greedy_agreement, greedy_policy, q_learning, value_iteration, QLearningConfig, TabularPolicy,
};
use gridlander_core::dqn::{evaluate, success_from_all_starts, train, EvalReport, Policy, QNetwork, StopReason};
use gridlander_core::env::{enumerate_mdp, EnvConfig, Wind};
use gridlander_core::geometry::{bbox_to_offsets, discretize, offsets_to_state};
use gridlander_core::losses::{summarize, EvalSample};
use gridlander_core::perturb::{Perturbation, PerturbationKind};
use gridlander_core::vital::{detect, init_weights, Modality, MultimodalImage, VitalWeights};
use gridlander_core::Rng;
use log::{info, warn};
use serde::Serialize;

use crate::bench::LatencyStats;
use crate::checkpoint::{load_dqn, load_vital, save_dqn, save_vital, DqnSnapshot};
use crate::config::CliConfig;
use crate::error::{Error, Result};
use crate::ppm::{read_ppm, write_ppm};
use crate::records::{metrics_json, metrics_table, read_labels, write_labels, write_metrics, write_rewards, write_trace, SampleRecord};
use crate::svg;

/// Tolerance for ties between optimal actions in the tabular oracle.
const TIE_TOL: f64 = 1e-6;
const VI_TOL: f64 = 1e-10;
const VI_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Parser)]
#[command(name = "gridlander", version, about = "Multimodal marker detection and DQN landing on a grid world")]
pub struct Cli {
    /// TOML configuration file; falls back to $GRIDLANDER_CONFIG.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the landing DQN and write checkpoint, reward CSV and plot.
    Train(TrainArgs),
    /// Roll out a trained network or the value-iteration policy.
    Eval(EvalArgs),
    /// Run the detector on one image or a directory of images.
    Detect(DetectArgs),
    /// Time detector inference on random inputs.
    Bench(BenchArgs),
    /// Solve the enumerated MDP exactly and by tabular Q-learning.
    Oracle(OracleArgs),
    /// Write perturbed copies of images with a JSON manifest.
    Perturb(PerturbArgs),
    /// Write a seeded random detector checkpoint.
    InitVital(InitVitalArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Episode cap; overrides `[train] episodes`.
    #[arg(long)]
    pub episodes: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("policy").required(true).args(["checkpoint", "oracle"])))]
pub struct EvalArgs {
    /// DQN checkpoint to evaluate greedily.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Evaluate the value-iteration policy instead of a network.
    #[arg(long)]
    pub oracle: bool,
    /// Random-start episodes to roll out.
    #[arg(long, default_value_t = 100)]
    pub episodes: usize,
    /// Start once from every eligible cell instead of random starts.
    #[arg(long)]
    pub all_starts: bool,
    /// Per-step gust probability; overrides `[env] wind`.
    #[arg(long, value_name = "P")]
    pub wind: Option<f64>,
    /// Gust displacement in cells.
    #[arg(long, default_value_t = 1, requires = "wind")]
    pub wind_displacement: u32,
    /// Directory for `traces.csv` and `trajectories.svg`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// Detector checkpoint; seeded random weights when absent.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// A PPM file or a directory of them.
    #[arg(long)]
    pub image: PathBuf,
    /// Perturbation applied before detection, in order; repeatable.
    #[arg(long, value_name = "SPEC")]
    pub perturb: Vec<PerturbationKind>,
    /// Label CSV; defaults to `labels.csv` inside an image directory.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Objectness threshold for the confusion counts.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Write the metrics JSON here and the text table next to it.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Altimeter reading in metres; maps each box to a grid state.
    #[arg(long)]
    pub altitude: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Detector checkpoint; seeded random weights when absent.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Timed forward passes.
    #[arg(long, default_value_t = 20)]
    pub iters: usize,
    /// Untimed passes before timing starts.
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Discount; defaults to `[train] gamma`.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Tabular Q-learning step size.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Tabular Q-learning updates.
    #[arg(long, default_value_t = 100_000)]
    pub ql_steps: usize,
    /// Write the value-iteration policy as CSV.
    #[arg(long, value_name = "PATH")]
    pub policy: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// A PPM file or a directory of them.
    #[arg(long)]
    pub image: PathBuf,
    /// Perturbation, applied in order; repeatable.
    #[arg(long, value_name = "SPEC", required = true)]
    pub perturb: Vec<PerturbationKind>,
    /// Labels to transform alongside the images.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InitVitalArgs {
    /// Checkpoint file to write.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Info
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .format_target(false)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = CliConfig::resolve(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    match &cli.command {
        Command::Train(a) => cmd_train(cfg, a),
        Command::Eval(a) => cmd_eval(cfg, a),
        Command::Detect(a) => cmd_detect(cfg, a),
        Command::Bench(a) => cmd_bench(cfg, a),
        Command::Oracle(a) => cmd_oracle(cfg, a),
        Command::Perturb(a) => cmd_perturb(cfg, a),
        Command::InitVital(a) => cmd_init_vital(cfg, a),
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Fails when `dir` exists but is not a directory.
fn check_out_dir(dir: &Path) -> Result<()> {
    if dir.exists() && !dir.is_dir() {
        return Err(usage(format!("{} exists and is not a directory", dir.display())));
    }
    Ok(())
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn check_parent(file: &Path) -> Result<()> {
    match file.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(p) if !p.is_dir() => Err(usage(format!("directory {} does not exist", p.display()))),
        _ => Ok(()),
    }
}

fn cmd_train(mut cfg: CliConfig, a: &TrainArgs) -> Result<()> {
    if let Some(n) = a.episodes {
        cfg.train.episodes = n;
    }
    cfg.validate()?;
    if cfg.train.episodes == 0 {
        return Err(usage("--episodes must be at least 1"));
    }
    check_out_dir(&a.out)?;
    create_dir(&a.out)?;

    let started = Instant::now();
    let outcome = train(&cfg.env, &cfg.train, cfg.seed, &mut |s, _| {
        if (s.episode + 1) % 50 == 0 {
            info!(
                "episode {:>5}  return {:>9.2}  epsilon {:.3}  steps {:>3}  {}",
                s.episode + 1,
                s.total_return,
                s.epsilon,
                s.steps,
                s.terminal.name()
            );
        }
    })?;
    info!("training took {:.1} s", started.elapsed().as_secs_f64());

    let snapshot = DqnSnapshot {
        env: cfg.env.clone(),
        train: cfg.train.clone(),
        input_scale: outcome.network.input_scale,
        seed: cfg.seed,
        episodes_run: outcome.trace.episodes.len(),
    };
    let ckpt = a.out.join("dqn.ckpt");
    let csv = a.out.join("rewards.csv");
    let plot = a.out.join("rewards.svg");
    let window = cfg.train.stop_window;
    save_dqn(&ckpt, &outcome.network, &snapshot)?;
    write_rewards(&csv, &outcome.trace, window)?;
    svg::write_svg(&plot, &svg::reward_curve(&outcome.trace, window))?;

    let n = outcome.trace.episodes.len();
    let stop = match outcome.stop {
        StopReason::Criterion { .. } => "stop criterion met",
        StopReason::EpisodeCap => "episode cap reached",
    };
    let head = window.min(n);
    println!("episodes: {n} ({stop})");
    println!("mean return, first {head}: {:.2}", outcome.trace.head_mean(head));
    println!("mean return, last {head}: {:.2}", outcome.trace.tail_mean(head));
    println!("wrote {}, {}, {}", ckpt.display(), csv.display(), plot.display());
    Ok(())
}

fn cmd_eval(mut cfg: CliConfig, a: &EvalArgs) -> Result<()> {
    if let Some(p) = a.wind {
        cfg.env.wind = Some(Wind {
            probability: p,
            displacement: a.wind_displacement,
        });
    }
    cfg.validate()?;
    if a.episodes == 0 && !a.all_starts {
        return Err(usage("--episodes must be at least 1 (empty evaluation)"));
    }
    if let Some(out) = &a.out {
        check_out_dir(out)?;
    }

    let calm = EnvConfig {
        wind: None,
        ..cfg.env.clone()
    };
    let net: QNetwork;
    let mdp;
    let oracle;
    let policy: &dyn Policy = if let Some(path) = &a.checkpoint {
        let (loaded, snap) = load_dqn(path)?;
        let expected = cfg.env.half_extents().map(|v| v as f32);
        if loaded.input_scale != expected {
            warn!(
                "checkpoint input scale {:?} differs from this grid's {:?}; it was trained on another grid",
                loaded.input_scale, expected
            );
        }
        info!("loaded network trained for {} episodes, seed {}", snap.episodes_run, snap.seed);
        net = loaded;
        &net
    } else {
        mdp = enumerate_mdp(&calm)?;
        let vi = value_iteration(&mdp, cfg.train.gamma, VI_TOL, VI_MAX_SWEEPS)?;
        oracle = TabularPolicy {
            mdp: &mdp,
            actions: vi.policy,
        };
        &oracle
    };

    let report = if a.all_starts {
        success_from_all_starts(policy, &cfg.env, cfg.seed)?
    } else {
        evaluate(policy, &cfg.env, a.episodes, cfg.seed)?
    };
    print_eval(&report);

    if let Some(out) = &a.out {
        create_dir(out)?;
        let csv = out.join("traces.csv");
        let plot = out.join("trajectories.svg");
        write_trace(&csv, &report.traces)?;
        svg::write_svg(&plot, &svg::trajectories(&report.traces, &cfg.env))?;
        println!("wrote {}, {}", csv.display(), plot.display());
    }
    Ok(())
}

fn print_eval(r: &EvalReport) {
    println!("episodes: {}", r.episodes);
    println!("success rate: {:.3} ({}/{})", r.success_rate, r.successes, r.episodes);
    println!("mean return: {:.2}", r.mean_return);
    match r.mean_final_deviation_m {
        Some(d) => println!("mean touchdown deviation: {d:.2} m ({} touchdowns)", r.touchdowns),
        None => println!("mean touchdown deviation: n/a (no touchdowns)"),
    }
}

/// PPM files named by `path`: the file itself, or the sorted `.ppm`
/// entries of a directory.
fn list_images(path: &Path) -> Result<Vec<PathBuf>> {
    if !path.exists() {
        return Err(Error::Missing(path.to_path_buf()));
    }
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Error::io(path, e))? {
        let p = entry.map_err(|e| Error::io(path, e))?.path();
        if p.is_file() && p.extension().is_some_and(|e| e.eq_ignore_ascii_case("ppm")) {
            out.push(p);
        }
    }
    out.sort();
    if out.is_empty() {
        return Err(usage(format!("{} contains no .ppm files", path.display())));
    }
    Ok(out)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Seed for perturbation `j` of image `i`.
fn perturb_seed(seed: u64, i: usize, j: usize) -> u64 {
    Rng::new(seed).fork(i as u64).fork(j as u64).next_u64()
}

fn apply_all(
    kinds: &[PerturbationKind],
    seed: u64,
    index: usize,
    img: MultimodalImage,
    bbox: Option<gridlander_core::losses::BBox>,
) -> Result<(MultimodalImage, Option<gridlander_core::losses::BBox>, Vec<Perturbation>)> {
    let (mut img, mut bbox) = (img, bbox);
    let mut applied = Vec::with_capacity(kinds.len());
    for (j, kind) in kinds.iter().enumerate() {
        let p = Perturbation::new(kind.clone(), perturb_seed(seed, index, j))?;
        (img, bbox) = p.apply(&img, bbox)?;
        applied.push(p);
    }
    Ok((img, bbox, applied))
}

fn labels_for(images_path: &Path, flag: Option<&Path>) -> Result<Option<Vec<SampleRecord>>> {
    let path = match flag {
        Some(p) => p.to_path_buf(),
        None if images_path.is_dir() => {
            let p = images_path.join("labels.csv");
            if !p.exists() {
                return Ok(None);
            }
            p
        }
        None => return Ok(None),
    };
    read_labels(&path).map(Some)
}

fn vital_weights(cfg: &CliConfig, checkpoint: Option<&Path>) -> Result<VitalWeights> {
    match checkpoint {
        Some(p) => {
            let w = load_vital(p)?;
            if w.config != cfg.vital {
                info!("using the detector configuration stored in {}", p.display());
            }
            Ok(w)
        }
        None => {
            warn!("no --checkpoint given; using random weights from seed {}", cfg.seed);
            Ok(init_weights(&cfg.vital, cfg.seed)?)
        }
    }
}

fn cmd_detect(cfg: CliConfig, a: &DetectArgs) -> Result<()> {
    cfg.validate()?;
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(usage("--threshold must lie in (0, 1)"));
    }
    if let Some(h) = a.altitude {
        if !(h >= 0.0 && h.is_finite()) {
            return Err(usage("--altitude must be a non-negative number of metres"));
        }
    }
    if let Some(r) = &a.report {
        check_parent(r)?;
    }
    let images = list_images(&a.image)?;
    let labels = labels_for(&a.image, a.labels.as_deref())?;
    if let Some(labels) = &labels {
        for r in labels {
            if !images.iter().any(|p| file_name(p) == r.image) {
                return Err(Error::Missing(a.image.join(&r.image)));
            }
        }
    }
    let weights = vital_weights(&cfg, a.checkpoint.as_deref())?;
    let size = weights.config.image_size;
    let frame = cfg.camera.frame();

    let mut samples = Vec::new();
    for (i, path) in images.iter().enumerate() {
        let name = file_name(path);
        let img = read_ppm(path, size, cfg.io.channels)?;
        let record = labels.as_ref().and_then(|l| l.iter().find(|r| r.image == name));
        let (img, truth, _) = apply_all(&a.perturb, cfg.seed, i, img, record.and_then(|r| r.bbox))?;
        let det = detect(&img, &weights)?;
        let b = det.bbox;
        println!(
            "{name}: objectness {:.4} bbox [{:.4}, {:.4}, {:.4}, {:.4}]",
            det.objectness, b.x_min, b.y_min, b.x_max, b.y_max
        );
        if let Some(h) = a.altitude {
            let (du, dv) = bbox_to_offsets(&frame.to_pixels(&b), &frame, cfg.camera.offset_mode);
            let s = offsets_to_state(du, dv, h, &frame)?;
            let g = discretize(&s, &cfg.env);
            println!(
                "  offset {du:.2} px, {dv:.2} px; state ({:.3}, {:.3}, {:.3}) m; grid cell ({}, {}, {})",
                s.dx, s.dy, s.dz, g.dx, g.dy, g.dz
            );
        }
        if record.is_some() {
            samples.push(EvalSample { prediction: det, truth });
        }
    }

    if !a.perturb.is_empty() {
        let names: Vec<String> = a.perturb.iter().map(ToString::to_string).collect();
        println!("perturbations: {}", names.join("; "));
    }
    if !samples.is_empty() {
        let m = summarize(&samples, a.threshold);
        println!("labelled images: {}", samples.len());
        print!("{}", metrics_table(&m));
        println!("{}", metrics_json(&m));
        if let Some(r) = &a.report {
            write_metrics(r, &m)?;
        }
    } else if a.report.is_some() {
        return Err(usage("--report needs labelled images"));
    }
    Ok(())
}

fn random_image(size: usize, rng: &mut Rng) -> Result<MultimodalImage> {
    Ok(MultimodalImage::from_fn(size, |_, _, _| rng.uniform() as f32)?)
}

fn cmd_bench(cfg: CliConfig, a: &BenchArgs) -> Result<()> {
    cfg.validate()?;
    if a.iters == 0 {
        return Err(usage("--iters must be at least 1"));
    }
    let weights = vital_weights(&cfg, a.checkpoint.as_deref())?;
    let size = weights.config.image_size;
    let mut rng = Rng::new(cfg.seed);
    for _ in 0..a.warmup {
        let img = random_image(size, &mut rng)?;
        detect(&img, &weights)?;
    }
    let mut samples = Vec::with_capacity(a.iters);
    for _ in 0..a.iters {
        let img = random_image(size, &mut rng)?;
        let t = Instant::now();
        let det = detect(&img, &weights)?;
        samples.push(t.elapsed().as_secs_f64() * 1e3);
        std::hint::black_box(det);
    }
    let s = LatencyStats::from_samples(&samples).expect("at least one sample");
    println!("input: (3, {size}, {size}), warmup {}, iterations {}", a.warmup, s.samples);
    println!("mean: {:.3} ms", s.mean_ms);
    println!("p50: {:.3} ms", s.p50_ms);
    println!("p95: {:.3} ms", s.p95_ms);
    println!("min: {:.3} ms", s.min_ms);
    println!("max: {:.3} ms", s.max_ms);
    println!("throughput: {:.2} images/s", s.throughput);
    Ok(())
}

fn cmd_oracle(cfg: CliConfig, a: &OracleArgs) -> Result<()> {
    let gamma = a.gamma.unwrap_or(cfg.train.gamma);
    if !(0.0..=1.0).contains(&gamma) {
        return Err(usage("--gamma must lie in [0, 1]"));
    }
    if !(a.alpha > 0.0 && a.alpha <= 1.0) {
        return Err(usage("--alpha must lie in (0, 1]"));
    }
    cfg.validate()?;
    if cfg.env.wind.is_some() {
        return Err(usage("the oracle needs a windless grid; remove [env] wind"));
    }
    if let Some(p) = &a.policy {
        check_parent(p)?;
    }
    let mdp = enumerate_mdp(&cfg.env)?;
    let (nx, ny, nz) = mdp.grid.dims();
    println!("grid: {nx} x {ny} x {nz} = {} states", mdp.total_cells());
    println!("airborne states: {}", mdp.len());

    let vi = value_iteration(&mdp, gamma, VI_TOL, VI_MAX_SWEEPS)?;
    println!("value iteration: gamma {gamma}, {} sweeps, residual {:.3e}", vi.iterations, vi.residual);
    let vi_policy = TabularPolicy {
        mdp: &mdp,
        actions: vi.policy.clone(),
    };
    let vi_eval = success_from_all_starts(&vi_policy, &cfg.env, cfg.seed)?;
    println!(
        "optimal policy success from all starts: {:.3} ({}/{})",
        vi_eval.success_rate, vi_eval.successes, vi_eval.episodes
    );

    let ql_cfg = QLearningConfig {
        alpha: a.alpha,
        gamma,
        steps: a.ql_steps,
        seed: cfg.seed,
        ..Default::default()
    };
    let q = q_learning(&mdp, &ql_cfg)?;
    let agreement = greedy_agreement(&q, &vi, TIE_TOL);
    let ql_policy = TabularPolicy {
        mdp: &mdp,
        actions: greedy_policy(&q),
    };
    let ql_eval = success_from_all_starts(&ql_policy, &cfg.env, cfg.seed)?;
    println!(
        "q-learning: alpha {}, {} updates, agreement with optimal actions {:.4}",
        a.alpha, a.ql_steps, agreement
    );
    println!(
        "q-learning policy success from all starts: {:.3} ({}/{})",
        ql_eval.success_rate, ql_eval.successes, ql_eval.episodes
    );

    if let Some(p) = &a.policy {
        let mut w = csv::Writer::from_path(p).map_err(|e| usage(format!("{}: {e}", p.display())))?;
        let io = |e: csv::Error| usage(format!("{}: {e}", p.display()));
        w.write_record(["dx", "dy", "dz", "action", "value"]).map_err(io)?;
        for (i, action) in vi.policy.iter().enumerate() {
            let s = mdp.state(i);
            w.write_record([
                s.dx.to_string(),
                s.dy.to_string(),
                s.dz.to_string(),
                action.name().to_string(),
                vi.values[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    seed: u64,
    channels: [Modality; 3],
    images: Vec<ManifestEntry>,
    labels: Option<&'a str>,
}

#[derive(Serialize)]
struct ManifestEntry {
    source: String,
    output: String,
    perturbations: Vec<Perturbation>,
}

fn cmd_perturb(cfg: CliConfig, a: &PerturbArgs) -> Result<()> {
    cfg.validate()?;
    check_out_dir(&a.out)?;
    let images = list_images(&a.image)?;
    let labels = match &a.labels {
        Some(p) => Some(read_labels(p)?),
        None => None,
    };
    let size = cfg.vital.image_size;
    let loaded = images
        .iter()
        .map(|p| read_ppm(p, size, cfg.io.channels))
        .collect::<Result<Vec<_>>>()?;

    let mut outputs = Vec::with_capacity(images.len());
    let mut entries = Vec::with_capacity(images.len());
    let mut new_labels = Vec::new();
    for (i, (path, img)) in images.iter().zip(loaded).enumerate() {
        let name = file_name(path);
        let record = labels.as_ref().and_then(|l| l.iter().find(|r| r.image == name));
        let (out, bbox, applied) = apply_all(&a.perturb, cfg.seed, i, img, record.and_then(|r| r.bbox))?;
        if record.is_some() {
            new_labels.push(SampleRecord {
                image: name.clone(),
                bbox,
            });
        }
        entries.push(ManifestEntry {
            source: name.clone(),
            output: name.clone(),
            perturbations: applied,
        });
        outputs.push((name, out));
    }

    create_dir(&a.out)?;
    for (name, img) in &outputs {
        write_ppm(&a.out.join(name), img, cfg.io.channels)?;
    }
    let labels_name = labels.as_ref().map(|_| "labels.csv");
    if let Some(n) = labels_name {
        write_labels(&a.out.join(n), &new_labels)?;
    }
    let manifest = Manifest {
        seed: cfg.seed,
        channels: cfg.io.channels.rgb(),
        images: entries,
        labels: labels_name,
    };
    let path = a.out.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| usage(e.to_string()))?;
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    println!("wrote {} image(s) and {}", outputs.len(), path.display());
    Ok(())
}

fn cmd_init_vital(cfg: CliConfig, a: &InitVitalArgs) -> Result<()> {
    cfg.validate()?;
    check_parent(&a.out)?;
    let w = init_weights(&cfg.vital, cfg.seed)?;
    save_vital(&a.out, &w)?;
    println!("wrote {} ({} parameters, seed {})", a.out.display(), w.parameter_count(), cfg.seed);
    Ok(())
}
