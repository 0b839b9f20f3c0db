//! Command-line surface: train, detect, eval, synth, and bench subcommands.
//! Usage errors exit 2 (clap's default); runtime failures exit 1 with the
//! error on standard error.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::detector::{detect, train_detector, DetectMode};
use crate::error::{Error, Result};
use crate::eval::{dual_pixel_eval, frame_level_eval, frame_score, pixel_level_eval};
use crate::io::{
    load_dataset, load_detections, load_model, roc_csv, save_dataset, save_detections,
    save_model, scores_csv, summary_csv, verify_model_matches_config, write_map_pgm,
    DatasetLayout, SavedDetections,
};
use crate::synth::{generate, Plant, SynthSpec};

#[derive(Parser)]
#[command(
    name = "vigil",
    version,
    about = "Video anomaly detection with per-region reconstruction models"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a detector on normal frames and write a model file.
    Train(TrainArgs),
    /// Score frames with a trained model; write CSV and detection maps.
    Detect(DetectArgs),
    /// Evaluate saved detections against ground truth.
    Eval(EvalArgs),
    /// Generate a seeded synthetic dataset with planted anomalies.
    Synth(SynthArgs),
    /// Time the pipeline stages on a synthetic workload.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set epochs=10`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Override the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                RunConfig::from_str_cfg(&text)?
            }
            None => RunConfig::default(),
        };
        for kv in &self.sets {
            let (key, value) = kv.split_once('=').ok_or_else(|| {
                Error::Config(format!("--set expects KEY=VALUE, got {kv:?}"))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset root containing `frames/`.
    #[arg(long)]
    data: PathBuf,
    /// Output model file.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct DetectArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Dataset root containing `frames/`.
    #[arg(long)]
    data: PathBuf,
    /// Output directory for `scores.csv` and `detections.bin`.
    #[arg(long)]
    out: PathBuf,
    /// Update the region models after each scored chunk.
    #[arg(long)]
    streaming: bool,
    /// Override the model's per-pixel threshold.
    #[arg(long)]
    beta: Option<f64>,
    /// Override the model's persistence span.
    #[arg(long)]
    gamma: Option<usize>,
    /// Also write per-frame filtered score maps as graymaps.
    #[arg(long)]
    overlays: bool,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvalArgs {
    /// Detection dump produced by `detect`.
    #[arg(long)]
    detections: PathBuf,
    /// Dataset root with `labels.txt` (and `masks/` for pixel levels).
    #[arg(long)]
    data: PathBuf,
    /// Output directory for ROC and summary CSV files.
    #[arg(long)]
    out: PathBuf,
    /// Minimum fraction of detected pixels that must be true anomaly
    /// pixels for the dual criterion.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// Output dataset root.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    frames: usize,
    #[arg(long, default_value_t = 160)]
    height: usize,
    #[arg(long, default_value_t = 240)]
    width: usize,
    /// Texture cell size in pixels.
    #[arg(long, default_value_t = 16)]
    cell: usize,
    /// Per-frame Gaussian pixel noise.
    #[arg(long, default_value_t = 0.02)]
    noise: f64,
    /// Uniform brightness drift per frame.
    #[arg(long, default_value_t = 0.0)]
    drift: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Planted anomaly `t0:t1:row:col:height:width:intensity`. Repeatable.
    #[arg(long = "plant", value_name = "SPEC")]
    plants: Vec<String>,
}

#[derive(Args)]
struct BenchArgs {
    /// Frames in the synthetic benchmark sequence.
    #[arg(long, default_value_t = 40)]
    frames: usize,
    #[command(flatten)]
    config: ConfigArgs,
}

pub fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Train(args) => run_train(&args),
        Command::Detect(args) => run_detect(&args),
        Command::Eval(args) => run_eval(&args),
        Command::Synth(args) => run_synth(&args),
        Command::Bench(args) => run_bench(&args),
    }
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let layout = DatasetLayout::from_root(&args.data)?;
    let (frames, _) = load_dataset(&layout, cfg.resize_h, cfg.resize_w)?;
    eprintln!("training on {} frames at {}x{}", frames.len(), cfg.resize_h, cfg.resize_w);
    let model = train_detector(&frames, &cfg)?;
    for sm in &model.scales {
        eprintln!(
            "  scale {}: {} regions over a {}x{} grid",
            sm.scale,
            sm.detectors.len(),
            sm.cluster_map.labels.nrows(),
            sm.cluster_map.labels.ncols()
        );
    }
    save_model(&args.out, &model)?;
    eprintln!("model written to {}", args.out.display());
    Ok(())
}

fn run_detect(args: &DetectArgs) -> Result<()> {
    let cfg = args.config.build()?;
    let mut model = load_model(&args.model)?;
    if args.config.config.is_some() {
        verify_model_matches_config(&model, &cfg)?;
    }
    if let Some(beta) = args.beta {
        model.beta = beta;
    }
    if let Some(gamma) = args.gamma {
        model.gamma = gamma;
    }
    let layout = DatasetLayout::from_root(&args.data)?;
    let (frames, _) = load_dataset(&layout, model.frame_h, model.frame_w)?;
    let mode = if args.streaming {
        DetectMode::Streaming
    } else {
        DetectMode::Frozen
    };
    eprintln!(
        "scoring {} frames (beta {}, gamma {}, chunks of {})",
        frames.len(),
        model.beta,
        model.gamma,
        cfg.chunk_len
    );
    let output = detect(&frames, &mut model, mode, &cfg)?;

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let scores_path = args.out.join("scores.csv");
    std::fs::write(&scores_path, scores_csv(&output.final_maps))
        .map_err(|e| Error::io(&scores_path, e))?;
    let dump = SavedDetections {
        beta: model.beta,
        gamma: model.gamma,
        chunk_len: output.chunk_len,
        raw_maps: output.raw_maps,
        final_maps: output.final_maps,
    };
    save_detections(&args.out.join("detections.bin"), &dump)?;
    if args.overlays {
        let overlay_dir = args.out.join("overlays");
        std::fs::create_dir_all(&overlay_dir).map_err(|e| Error::io(&overlay_dir, e))?;
        let peak = dump
            .final_maps
            .iter()
            .map(frame_score)
            .fold(0.0, f64::max);
        for (i, map) in dump.final_maps.iter().enumerate() {
            write_map_pgm(&overlay_dir.join(format!("{i:06}.pgm")), map.view(), peak)?;
        }
    }
    eprintln!("results written to {}", args.out.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<()> {
    let saved = load_detections(&args.detections)?;
    let (map_h, map_w) = saved.raw_maps[0].dim();
    let layout = DatasetLayout::from_root(&args.data)?;
    let (_, gt) = load_dataset(&layout, map_h, map_w)?;
    let gt = gt.ok_or_else(|| {
        Error::Dataset("evaluation needs labels.txt in the dataset root".into())
    })?;

    let frame_scores: Vec<f64> = saved.final_maps.iter().map(frame_score).collect();
    let frame_curve = frame_level_eval(&frame_scores, &gt)?;
    eprintln!(
        "frame level: auc {:.4}, eer {}",
        frame_curve.auc,
        frame_curve
            .eer
            .map(|e| format!("{e:.4}"))
            .unwrap_or_else(|| "-".into())
    );

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let write = |name: &str, text: String| -> Result<()> {
        let path = args.out.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    };
    write("roc_frame.csv", roc_csv(&frame_curve))?;

    let mut summary = vec![("frame", frame_curve.clone())];
    if gt.masks.is_some() {
        let pixel_curve = pixel_level_eval(
            &saved.raw_maps,
            &gt,
            saved.gamma,
            saved.chunk_len,
            None,
        )?;
        eprintln!("pixel level: auc {:.4}", pixel_curve.auc);
        write("roc_pixel.csv", roc_csv(&pixel_curve))?;
        let dual_curve = dual_pixel_eval(
            &saved.raw_maps,
            &gt,
            saved.gamma,
            saved.chunk_len,
            args.alpha,
            None,
        )?;
        eprintln!("dual pixel level: auc {:.4}", dual_curve.auc);
        write("roc_dual_pixel.csv", roc_csv(&dual_curve))?;
        summary.push(("pixel", pixel_curve));
        summary.push(("dual_pixel", dual_curve));
    } else {
        eprintln!("no masks/ directory: skipping pixel-level evaluation");
    }
    let rows: Vec<(&str, &crate::eval::RocCurve)> =
        summary.iter().map(|(n, c)| (*n, c)).collect();
    write("summary.csv", summary_csv(&rows))?;
    eprintln!("evaluation written to {}", args.out.display());
    Ok(())
}

fn parse_plant(spec: &str) -> Result<Plant> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 7 {
        return Err(Error::Config(format!(
            "plant spec {spec:?} must be t0:t1:row:col:height:width:intensity"
        )));
    }
    let field = |i: usize| -> Result<usize> {
        parts[i]
            .parse()
            .map_err(|_| Error::Config(format!("plant spec {spec:?}: bad field {:?}", parts[i])))
    };
    Ok(Plant {
        t0: field(0)?,
        t1: field(1)?,
        row: field(2)?,
        col: field(3)?,
        h: field(4)?,
        w: field(5)?,
        intensity: parts[6]
            .parse()
            .map_err(|_| Error::Config(format!("plant spec {spec:?}: bad intensity")))?,
    })
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let plants = args
        .plants
        .iter()
        .map(|s| parse_plant(s))
        .collect::<Result<Vec<_>>>()?;
    let spec = SynthSpec {
        n_frames: args.frames,
        height: args.height,
        width: args.width,
        cell: args.cell,
        noise_sigma: args.noise,
        drift_per_frame: args.drift,
        plants,
    };
    let data = generate(&spec, args.seed)?;
    save_dataset(
        &args.out,
        &data.frames,
        Some(&data.masks),
        Some(&data.labels),
    )?;
    let abnormal = data.labels.iter().filter(|&&l| l == 1).count();
    eprintln!(
        "wrote {} frames ({abnormal} abnormal) to {}",
        data.frames.len(),
        args.out.display()
    );
    Ok(())
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    // Default to a reduced geometry so an unconfigured run finishes quickly.
    let cfg = if args.config.config.is_none() && args.config.sets.is_empty() {
        RunConfig {
            resize_h: 120,
            resize_w: 180,
            scales: vec![1.0, 0.5],
            detect_hidden: 32,
            epochs: 3,
            seed: args.config.seed.unwrap_or_default(),
            ..RunConfig::default()
        }
    } else {
        args.config.build()?
    };
    cfg.validate()?;

    let spec = SynthSpec {
        n_frames: args.frames,
        height: cfg.resize_h,
        width: cfg.resize_w,
        cell: 16,
        noise_sigma: 0.02,
        drift_per_frame: 0.0,
        plants: Vec::new(),
    };

    let stage = |name: &str, start: Instant| {
        println!("{name},{:.3}", start.elapsed().as_secs_f64());
    };

    let t = Instant::now();
    let data = generate(&spec, cfg.seed)?;
    stage("generate", t);

    let t = Instant::now();
    let sc = cfg.scale_config();
    let grids: Vec<_> = data
        .frames
        .iter()
        .map(|f| crate::patch::extract_patches(f, &sc, 1.0))
        .collect::<Result<_>>()?;
    stage("extract_patches", t);
    drop(grids);

    let t = Instant::now();
    let model = train_detector(&data.frames, &cfg)?;
    stage("train", t);

    let t = Instant::now();
    let maps = model.score_frames(&data.frames)?;
    stage("score", t);

    let t = Instant::now();
    let errors = crate::volume::ErrorTensor::from_frames(&maps)?;
    let filtered = crate::volume::persistence_filter(&errors, cfg.beta, cfg.gamma)?;
    stage("persistence_filter", t);
    let kept = filtered.values.iter().filter(|&&v| v > 0.0).count();
    eprintln!("({kept} voxels kept at beta {}, gamma {})", cfg.beta, cfg.gamma);
    Ok(())
}
