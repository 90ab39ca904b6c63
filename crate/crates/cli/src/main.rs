//! `comotion` command line: flow estimation, pattern extraction, anomaly
//! scoring, boosted-stump training/classification, synthetic data and the
//! benchmark report.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use comotion::config::{PipelineConfig, RhoSampling};
use comotion::detect::io::{read_model, read_template, write_model, write_score_report, write_template, ScoreRow};
use comotion::detect::{
    anomaly_score, build_template, classify, roc, train_adaboost, AdaBoostConfig, Label, RealTemplate, TemplateConfig,
};
use comotion::experiment::{run_benchmark, BenchmarkConfig};
use comotion::flowcore::{read_flo, read_pgm, write_flo, write_pgm, FlowField, Frame};
use comotion::motfeat::{MotionFeatureSet, PairId};
use comotion::pattern::io::{read_pattern, write_heatmap, write_pattern_csv, write_sidecar};
use comotion::pattern::{normalize, CorrelationMatrix, NormalizedPattern, WeightMode};
use comotion::pipeline::{estimate_flows, features_from_flows, pattern_from_features, PairSummary};
use comotion::seed::{derive_seed, stage};
use comotion::synth::{generate_track, render_frames, FaceModel, SynthConfig, SynthMode};
use comotion::tracks::{read_track, write_track, LandmarkScheme};
use comotion::{Error, Result};

#[derive(Parser)]
#[command(name = "comotion", version, about = "Co-motion pattern analysis of facial landmark motion")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. They override the config file.
#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Correlation matrices per pattern.
    #[arg(long = "n-pairs", global = true)]
    n_pairs: Option<usize>,
    /// `ch` or `k-times-ch`.
    #[arg(long = "weight-mode", global = true)]
    weight_mode: Option<WeightMode>,
    /// `contiguous` or `random`.
    #[arg(long = "sample-rho", global = true)]
    sample_rho: Option<RhoSampling>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate optical flow between consecutive PGM frames.
    Flow {
        frames_dir: PathBuf,
        out_dir: PathBuf,
    },
    /// Build a co-motion pattern for one video.
    Pattern(PatternArgs),
    /// Score patterns against a real template.
    Detect(DetectArgs),
    /// Train a boosted-stump classifier on labelled patterns.
    Train {
        #[arg(long, num_args = 1.., required = true)]
        real: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        fake: Vec<PathBuf>,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        rounds: Option<usize>,
    },
    /// Classify patterns with a trained model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        /// Patterns of unknown class.
        patterns: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        real: Vec<PathBuf>,
        #[arg(long, num_args = 1..)]
        fake: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic track, its ground-truth motion and rendered frames.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "real_like")]
        mode: SynthMode,
        #[arg(long, default_value_t = SynthConfig::default().frames)]
        frames: usize,
        #[arg(long, default_value_t = SynthConfig::default().fake_decorrelation)]
        fake_decorrelation: f64,
        /// Skip rendering PGM frames.
        #[arg(long)]
        no_frames: bool,
    },
    /// Run the synthetic real-versus-fake benchmark.
    Report {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        tracks_per_class: usize,
        #[arg(long, default_value_t = 100)]
        train_per_class: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,10,35,70")]
        n_values: Vec<usize>,
    },
}

#[derive(Args)]
struct PatternArgs {
    /// Landmark CSV (`frame,landmark,x,y`).
    #[arg(long)]
    landmarks: PathBuf,
    /// Directory of PGM frames.
    #[arg(long, group = "motion_source")]
    frames: Option<PathBuf>,
    /// Directory of `.flo` files named by the first frame of each pair.
    #[arg(long, group = "motion_source")]
    flo: Option<PathBuf>,
    /// Per-landmark motion CSV (`pair,landmark,u,v`), bypassing flow.
    #[arg(long, group = "motion_source")]
    motion: Option<PathBuf>,
    /// Landmarks per frame in the CSV: 51 or 68.
    #[arg(long, default_value_t = 68)]
    landmark_count: usize,
    /// Output directory; files are named after the video id.
    #[arg(long)]
    out: PathBuf,
    /// Also write a 51x51 PGM heatmap.
    #[arg(long)]
    heatmap: bool,
    /// Also write per-pair grouping diagnostics (`<id>.pairs.json`).
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args)]
struct DetectArgs {
    /// Template JSON; written when `--build-template` is given, read otherwise.
    #[arg(long)]
    template: PathBuf,
    /// Pair diagnostics files of real videos to pool into a new template.
    #[arg(long, num_args = 1..)]
    build_template: Vec<PathBuf>,
    /// Patterns of unknown class.
    patterns: Vec<PathBuf>,
    /// Patterns known to be real (used for the ROC).
    #[arg(long, num_args = 1..)]
    real: Vec<PathBuf>,
    /// Patterns known to be fake (used for the ROC).
    #[arg(long, num_args = 1..)]
    fake: Vec<PathBuf>,
    /// Scores at or above this are labelled fake; defaults to the Youden
    /// threshold when a ROC is computed.
    #[arg(long)]
    threshold: Option<f64>,
    /// Write the ROC curve here (needs `--real` and `--fake`).
    #[arg(long)]
    roc: Option<PathBuf>,
    /// Score report CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn config(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::from_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(n) = common.n_pairs {
        cfg.n_pairs = n;
    }
    if let Some(m) = common.weight_mode {
        cfg.weight_mode = m;
    }
    if let Some(s) = common.sample_rho {
        cfg.sample_rho = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(p: &Path) -> Result<()> {
    fs::create_dir_all(p).map_err(|e| Error::io(p, e))
}

/// Trailing decimal digits of a file stem, e.g. `frame_0012` -> 12.
fn stem_index(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
    digits.chars().rev().collect::<String>().parse().ok()
}

/// Files in `dir` with extension `ext`, keyed by the index in their name.
fn indexed_files(dir: &Path, ext: &str) -> Result<Vec<(usize, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        let idx = stem_index(&path)
            .ok_or_else(|| Error::InvalidInput(format!("{}: no frame index in file name", path.display())))?;
        out.push((idx, path));
    }
    out.sort();
    if out.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidInput(format!("{}: two files share a frame index", dir.display())));
    }
    Ok(out)
}

fn read_frames(dir: &Path) -> Result<Vec<(usize, Frame<f32>)>> {
    let files = indexed_files(dir, "pgm")?;
    if files.len() < 2 {
        return Err(Error::InvalidInput(format!("{}: need at least 2 PGM frames, found {}", dir.display(), files.len())));
    }
    files.into_iter().map(|(i, p)| Ok((i, read_pgm(&p)?))).collect()
}

fn cmd_flow(frames_dir: &Path, out_dir: &Path, cfg: &PipelineConfig) -> Result<()> {
    let frames = read_frames(frames_dir)?;
    let flows = estimate_flows(&frames, &cfg.flow)?;
    create_dir(out_dir)?;
    for (i, f) in &flows {
        write_flo(f, out_dir.join(format!("{i:06}.flo")))?;
    }
    println!("wrote {} flow fields to {}", flows.len(), out_dir.display());
    Ok(())
}

fn read_motion_csv(path: &Path, gate: &comotion::motfeat::MotionGateConfig) -> Result<Vec<MotionFeatureSet<f32>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut pairs: std::collections::BTreeMap<usize, Vec<Option<[f32; 2]>>> = Default::default();
    for (no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let bad = || Error::format(path, format!("line {}: expected pair,landmark,u,v", no + 1));
        if f.len() != 4 {
            return Err(bad());
        }
        let (t, i): (usize, usize) = (f[0].parse().map_err(|_| bad())?, f[1].parse().map_err(|_| bad())?);
        let (u, v): (f32, f32) = (f[2].parse().map_err(|_| bad())?, f[3].parse().map_err(|_| bad())?);
        let row = pairs.entry(t).or_default();
        if row.len() <= i {
            row.resize(i + 1, None);
        }
        row[i] = Some([u, v]);
    }
    pairs
        .into_iter()
        .map(|(t, row)| {
            let feats = row
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::format(path, format!("pair {t} is missing landmarks")))?;
            MotionFeatureSet::new(PairId::new(0, t), feats, gate)
        })
        .collect()
}

fn cmd_pattern(args: &PatternArgs, cfg: &PipelineConfig) -> Result<()> {
    let scheme = LandmarkScheme::from_count(args.landmark_count)?;
    let track = read_track(&args.landmarks, scheme)?;
    if track.dropped_frames > 0 {
        log::warn!("{}: dropped {} incomplete frames", track.video_id, track.dropped_frames);
    }
    let sets = if let Some(dir) = &args.frames {
        let flows = estimate_flows(&read_frames(dir)?, &cfg.flow)?;
        features_from_flows(&flows, &track, 0, &cfg.gate)?
    } else if let Some(dir) = &args.flo {
        let flows: Vec<(usize, FlowField<f32>)> =
            indexed_files(dir, "flo")?.into_iter().map(|(i, p)| Ok((i, read_flo(&p)?))).collect::<Result<_>>()?;
        features_from_flows(&flows, &track, 0, &cfg.gate)?
    } else if let Some(p) = &args.motion {
        read_motion_csv(p, &cfg.gate)?
    } else {
        return Err(Error::InvalidInput("one of --frames, --flo or --motion is required".into()));
    };
    let (vp, grouping) = pattern_from_features(&track.video_id, 0, &sets, cfg)?;
    create_dir(&args.out)?;
    let base = args.out.join(&track.video_id);
    write_pattern_csv(&vp.pattern, base.with_extension("csv"))?;
    write_sidecar(&vp.sidecar, base.with_extension("json"))?;
    if args.heatmap {
        write_heatmap(&vp.pattern, base.with_extension("pgm"))?;
    }
    if args.diagnostics {
        let path = args.out.join(format!("{}.pairs.json", track.video_id));
        let json = serde_json::to_string(&grouping.summaries()).expect("diagnostics serialize");
        fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    }
    println!(
        "{}: {} pairs used, {} gated, {} available",
        track.video_id, vp.sidecar.pairs_used, vp.sidecar.pairs_gated, vp.sidecar.pairs_available
    );
    Ok(())
}

fn video_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn load_normalized(path: &Path, cfg: &PipelineConfig) -> Result<NormalizedPattern<f64>> {
    let (cp, _) = read_pattern::<f64>(path)?;
    normalize(&cp, cfg.epsilon)
}

fn read_pair_summaries(path: &Path) -> Result<Vec<PairSummary>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}

fn cmd_detect(args: &DetectArgs, cfg: &PipelineConfig) -> Result<()> {
    let template: RealTemplate<f64> = if args.build_template.is_empty() {
        read_template(&args.template)?
    } else {
        let mut rhos = Vec::new();
        for (v, path) in args.build_template.iter().enumerate() {
            for s in read_pair_summaries(path)? {
                // re-key by file so pair ids stay unique across videos
                let pair = PairId::new(v, s.pair.frame);
                rhos.push(CorrelationMatrix::from_labels(pair, s.labels, s.ch_score)?);
            }
        }
        let t = build_template(
            &rhos,
            &TemplateConfig {
                sample_size: cfg.template_sample_size,
                rng_seed: derive_seed(cfg.seed, &[stage::TEMPLATE]),
                weight_mode: cfg.weight_mode,
                epsilon: cfg.epsilon,
            },
        )?;
        write_template(&t, &args.template)?;
        println!("template pooled from {} correlation matrices", t.source_count);
        t
    };

    let score_all = |paths: &[PathBuf]| -> Result<Vec<(String, f64)>> {
        paths.iter().map(|p| Ok((video_id(p), anomaly_score(&load_normalized(p, cfg)?, &template)?))).collect()
    };
    let unknown = score_all(&args.patterns)?;
    let real = score_all(&args.real)?;
    let fake = score_all(&args.fake)?;

    let mut threshold = args.threshold;
    if !real.is_empty() && !fake.is_empty() {
        let curve = roc(
            &real.iter().map(|s| s.1).collect::<Vec<_>>(),
            &fake.iter().map(|s| s.1).collect::<Vec<_>>(),
        )?;
        let op = curve.youden();
        println!("auc {:.6} youden threshold {} accuracy {:.4}", curve.auc, op.threshold, op.accuracy);
        if let Some(p) = &args.roc {
            fs::write(p, curve.to_csv()).map_err(|e| Error::io(p, e))?;
        }
        threshold.get_or_insert(op.threshold);
    } else if args.roc.is_some() {
        return Err(Error::InvalidInput("--roc needs both --real and --fake patterns".into()));
    }

    let rows: Vec<ScoreRow> = unknown
        .iter()
        .chain(&real)
        .chain(&fake)
        .map(|(id, score)| {
            let label = match threshold {
                Some(t) if *score >= t => Label::Fake,
                _ => Label::Real,
            };
            ScoreRow { video_id: id.clone(), score: *score, label }
        })
        .collect();
    if threshold.is_none() {
        log::warn!("no threshold given; every video is labelled real");
    }
    match &args.out {
        Some(p) => write_score_report(&rows, p)?,
        None => {
            for r in &rows {
                println!("{},{},{}", r.video_id, r.score, r.label);
            }
        }
    }
    Ok(())
}

fn cmd_train(real: &[PathBuf], fake: &[PathBuf], model: &Path, rounds: Option<usize>, cfg: &PipelineConfig) -> Result<()> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (paths, label) in [(real, Label::Real), (fake, Label::Fake)] {
        for p in paths {
            x.push(load_normalized(p, cfg)?);
            y.push(label);
        }
    }
    let e = train_adaboost(&x, &y, &AdaBoostConfig { rounds: rounds.unwrap_or(cfg.adaboost_rounds) })?;
    write_model(&e, model)?;
    println!("trained {} stumps on {} patterns", e.rounds(), x.len());
    Ok(())
}

fn cmd_classify(model: &Path, unknown: &[PathBuf], real: &[PathBuf], fake: &[PathBuf], out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let e = read_model(model)?;
    let mut rows = Vec::new();
    let (mut hits, mut known) = (0usize, 0usize);
    for (paths, truth) in [(unknown, None), (real, Some(Label::Real)), (fake, Some(Label::Fake))] {
        for p in paths {
            let c = classify(&e, load_normalized(p, cfg)?.values())?;
            if let Some(t) = truth {
                known += 1;
                hits += usize::from(c.label == t);
            }
            rows.push(ScoreRow { video_id: video_id(p), score: c.margin, label: c.label });
        }
    }
    write_score_report(&rows, out)?;
    if known > 0 {
        println!("accuracy {:.4} ({hits}/{known})", hits as f64 / known as f64);
    }
    Ok(())
}

fn cmd_synth(out: &Path, cfg: &SynthConfig, render: bool) -> Result<()> {
    let model = FaceModel::standard();
    let s = generate_track(&model, cfg)?;
    create_dir(out)?;
    write_track(&s.track, out.join(format!("{}.csv", s.track.video_id)))?;
    let motion = out.join("motion.csv");
    fs::write(&motion, s.motion_csv()).map_err(|e| Error::io(&motion, e))?;
    if render {
        let dir = out.join("frames");
        create_dir(&dir)?;
        let seed = derive_seed(cfg.rng_seed, &[stage::TEXTURE]);
        for (f, frame) in s.track.frames().iter().zip(render_frames(&s.track, &model.rest_positions, seed)?) {
            write_pgm(&frame, dir.join(format!("{:06}.pgm", f.frame_index)))?;
        }
    }
    println!("{}: {} frames", s.track.video_id, s.track.len());
    Ok(())
}

fn cmd_report(out: &Path, tracks: usize, train: usize, n_values: Vec<usize>, cfg: &PipelineConfig, seed: Option<u64>) -> Result<()> {
    let bench = BenchmarkConfig {
        tracks_per_class: tracks,
        train_per_class: train,
        n_values,
        seed: seed.unwrap_or(BenchmarkConfig::default().seed),
        pipeline: cfg.clone(),
        ..Default::default()
    };
    let report = run_benchmark(&bench, Some(out))?;
    let table = report.to_table();
    let path = out.join("summary.csv");
    fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
    print!("{table}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    }
    let cfg = config(&cli.common)?;
    match &cli.command {
        Command::Flow { frames_dir, out_dir } => cmd_flow(frames_dir, out_dir, &cfg),
        Command::Pattern(args) => cmd_pattern(args, &cfg),
        Command::Detect(args) => cmd_detect(args, &cfg),
        Command::Train { real, fake, model, rounds } => cmd_train(real, fake, model, *rounds, &cfg),
        Command::Classify { model, patterns, real, fake, out } => cmd_classify(model, patterns, real, fake, out, &cfg),
        Command::Synth { out, mode, frames, fake_decorrelation, no_frames } => {
            let sc = SynthConfig {
                mode: *mode,
                frames: *frames,
                fake_decorrelation: *fake_decorrelation,
                rng_seed: cfg.seed,
                ..Default::default()
            };
            cmd_synth(out, &sc, !no_frames)
        }
        Command::Report { out, tracks_per_class, train_per_class, n_values } => {
            cmd_report(out, *tracks_per_class, *train_per_class, n_values.clone(), &cfg, cli.common.seed)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = e.to_string().replace('\n', " ");
            eprintln!("{}: {line}", e.code());
            ExitCode::FAILURE
        }
    }
}
