//! `sedkit`: feature extraction, augmentation preview, CRNN inference,
//! post-processing, ensembling and evaluation from one binary.
//!
//! Logging level comes from the `SEDKIT_LOG` environment variable
//! (error|warn|info|debug), defaulting to warn.

mod config;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use config::{parse_f64_range, parse_usize_range, PipelineConfig};
use rayon::prelude::*;
use sedkit_core::augment::{apply_filter_augment, rng_from_seed, sample_filter_config, FilterKind};
use sedkit_core::frontend::{extract_logmel, normalize_minmax, LogMelSpectrogram};
use sedkit_core::model::{model_forward, AttentionDim, ModelWeights};
use sedkit_core::pipeline::{
    decode_at_thresholds, default_thresholds, evaluate, EvalReport, PostprocConfig, PostprocMode,
};
use sedkit_core::postproc::{events_to_tsv, read_events_tsv, Event};
use sedkit_core::{eval, io as sedio, wav, Predictions32};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "sedkit", version, about = "Sound event detection pipeline")]
struct Cli {
    /// Configuration file (`key = value` lines under [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for file-level parallelism. Outputs do not depend on
    /// this value.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert WAV files into SEDF feature dumps.
    Extract {
        /// WAV file or directory of WAV files.
        #[arg(long)]
        input: PathBuf,
        /// Output directory for `<stem>.sedf` files.
        #[arg(long)]
        output: PathBuf,
    },
    /// Apply a randomly sampled frequency filter to a feature file.
    Augment {
        /// Input SEDF feature file.
        #[arg(long)]
        input: PathBuf,
        /// Augmented SEDF output.
        #[arg(long)]
        output: PathBuf,
        /// step or linear.
        #[arg(long = "filter-kind")]
        filter_kind: Option<FilterKind>,
        /// Gain range in dB as `low:high`.
        #[arg(long = "db-range", allow_hyphen_values = true)]
        db_range: Option<String>,
        /// Inclusive band count range as `min:max`.
        #[arg(long)]
        bands: Option<String>,
        /// Minimum band width in mel bins.
        #[arg(long = "min-bandwidth")]
        min_bandwidth: Option<usize>,
        /// Where to write the sampled filter description
        /// (default: output path with extension `filter.txt`).
        #[arg(long = "filter-out")]
        filter_out: Option<PathBuf>,
    },
    /// Run the CRNN over feature files, writing SEDP score dumps and
    /// thresholded event TSVs.
    Infer {
        /// SEDF file or directory.
        #[arg(long)]
        features: PathBuf,
        /// SEDW weight container; omitted means seeded random weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        output: PathBuf,
        /// Weak-head attention axis (class or time).
        #[arg(long = "attention-dim")]
        attention_dim: Option<AttentionDim>,
    },
    /// Re-decode SEDP score dumps into per-threshold event TSVs.
    Postprocess {
        /// SEDP file or directory.
        #[arg(long)]
        scores: PathBuf,
        /// Output directory for `th_<value>.tsv` files.
        #[arg(long)]
        output: PathBuf,
        /// mask or weaksed.
        #[arg(long)]
        mode: Option<PostprocMode>,
        /// Clip-probability cutoff for mask mode.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Average several SEDP dumps of the same clip.
    Ensemble {
        /// Averaged SEDP output.
        #[arg(long)]
        output: PathBuf,
        /// Input SEDP files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Score detection TSVs against ground truth.
    Eval {
        /// Directory of `th_<value>.tsv` detection files.
        #[arg(long)]
        detections: PathBuf,
        /// Ground-truth event TSV.
        #[arg(long = "ground-truth")]
        ground_truth: PathBuf,
        /// Clip duration TSV (`filename\tduration`).
        #[arg(long)]
        durations: PathBuf,
        #[arg(long = "psds1-dtc")]
        psds1_dtc: Option<f64>,
        #[arg(long = "psds1-gtc")]
        psds1_gtc: Option<f64>,
        #[arg(long = "psds2-dtc")]
        psds2_dtc: Option<f64>,
        #[arg(long = "psds2-gtc")]
        psds2_gtc: Option<f64>,
        /// Write a per-class collar-F1 breakdown TSV here.
        #[arg(long = "per-class")]
        per_class: Option<PathBuf>,
        /// Write ROC staircases to `<prefix>_psds1.tsv` / `<prefix>_psds2.tsv`.
        #[arg(long = "roc-dump")]
        roc_dump: Option<PathBuf>,
    },
    /// Finite-difference verification of the frequency-adaptive layer.
    Gradcheck {
        /// Number of random layer instances.
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Maximum allowed relative error.
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
    /// Run the built-in acceptance checks.
    Selftest,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("SEDKIT_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .ok();
    }
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match cli.command {
        Command::Extract { input, output } => cmd_extract(&cfg, &input, &output),
        Command::Augment {
            input,
            output,
            filter_kind,
            db_range,
            bands,
            min_bandwidth,
            filter_out,
        } => {
            if let Some(kind) = filter_kind {
                cfg.augment = match kind {
                    FilterKind::Step => sedkit_core::augment::FilterAugParams::step_defaults(),
                    FilterKind::Linear => sedkit_core::augment::FilterAugParams::linear_defaults(),
                };
            }
            if let Some(r) = db_range {
                cfg.augment.db_range = parse_f64_range(&r)?;
            }
            if let Some(r) = bands {
                cfg.augment.band_range = parse_usize_range(&r)?;
            }
            if let Some(b) = min_bandwidth {
                cfg.augment.min_bandwidth = b;
            }
            cmd_augment(&cfg, &input, &output, filter_out.as_deref())
        }
        Command::Infer {
            features,
            weights,
            output,
            attention_dim,
        } => {
            if let Some(dim) = attention_dim {
                cfg.model.attention_dim = dim;
            }
            if weights.is_some() {
                cfg.weights = weights;
            }
            cmd_infer(&cfg, &features, &output)
        }
        Command::Postprocess {
            scores,
            output,
            mode,
            threshold,
        } => {
            if let Some(m) = mode {
                cfg.postproc_mode = m;
            }
            if let Some(t) = threshold {
                cfg.postproc_threshold = t;
            }
            cmd_postprocess(&cfg, &scores, &output)
        }
        Command::Ensemble { output, inputs } => cmd_ensemble(&inputs, &output),
        Command::Eval {
            detections,
            ground_truth,
            durations,
            psds1_dtc,
            psds1_gtc,
            psds2_dtc,
            psds2_gtc,
            per_class,
            roc_dump,
        } => {
            if let Some(v) = psds1_dtc {
                cfg.psds1.dtc = v;
            }
            if let Some(v) = psds1_gtc {
                cfg.psds1.gtc = v;
            }
            if let Some(v) = psds2_dtc {
                cfg.psds2.dtc = v;
            }
            if let Some(v) = psds2_gtc {
                cfg.psds2.gtc = v;
            }
            cmd_eval(
                &cfg,
                &detections,
                &ground_truth,
                &durations,
                per_class.as_deref(),
                roc_dump.as_deref(),
            )
        }
        Command::Gradcheck { trials, tol } => cmd_gradcheck(&cfg, trials, tol),
        Command::Selftest => cmd_selftest(),
    }
}

/// Files under `path` with the given extension (or `path` itself), sorted
/// by name so every aggregation is order-stable.
fn collect_files(path: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    if !path.is_dir() {
        bail!("{} does not exist", path.display());
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(path)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(ext))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no .{ext} files under {}", path.display());
    }
    Ok(files)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_extract(cfg: &PipelineConfig, input: &Path, output: &Path) -> Result<()> {
    let files = collect_files(input, "wav")?;
    std::fs::create_dir_all(output)?;
    files.par_iter().try_for_each(|path| -> Result<()> {
        let wave = wav::load_wav(path).with_context(|| path.display().to_string())?;
        if wave.rate_warning {
            log::warn!(
                "{}: sample rate {} differs from {}; features are computed as-is",
                path.display(),
                wave.sample_rate,
                wav::EXPECTED_SAMPLE_RATE
            );
        }
        let mel: LogMelSpectrogram<f32> = extract_logmel(&wave, &cfg.frontend)?;
        let out = output.join(format!("{}.sedf", stem(path)));
        sedio::write_features(&out, &mel)?;
        log::info!("{} -> {}", path.display(), out.display());
        Ok(())
    })?;
    Ok(())
}

fn cmd_augment(
    cfg: &PipelineConfig,
    input: &Path,
    output: &Path,
    filter_out: Option<&Path>,
) -> Result<()> {
    let mel = sedio::read_features(input)?;
    let mut rng = rng_from_seed(cfg.seed);
    let filter = sample_filter_config(&mut rng, &cfg.augment, mel.n_mels())?;

    // Features are stored in the log domain; the filter acts on amplitudes.
    let amplitude = mel.values.map(|v| v.exp());
    let filtered = apply_filter_augment(&amplitude, &filter)?;
    let floor = cfg.frontend.log_floor as f32;
    let back = LogMelSpectrogram {
        values: filtered.map(|v| v.max(floor).ln()),
        frame_hop_s: mel.frame_hop_s,
    };
    sedio::write_features(output, &back)?;

    let filter_path = filter_out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| output.with_extension("filter.txt"));
    sedio::write_atomic(&filter_path, format!("{filter}\n").as_bytes())?;
    println!("{filter}");
    Ok(())
}

fn load_or_init_weights(cfg: &PipelineConfig) -> Result<ModelWeights<f32>> {
    match &cfg.weights {
        Some(path) => {
            log::info!("loading weights from {}", path.display());
            Ok(sedio::load_weights(path)?)
        }
        None => {
            log::info!("no weight file given; initializing random weights from seed {}", cfg.seed);
            Ok(ModelWeights::random(&cfg.model, &mut rng_from_seed(cfg.seed))?)
        }
    }
}

fn predictions_for_features(
    cfg: &PipelineConfig,
    weights: &ModelWeights<f32>,
    path: &Path,
) -> Result<Predictions32> {
    let mel = sedio::read_features(path)?;
    let batch = mel
        .values
        .reshape(&[1, mel.n_mels(), mel.n_frames()])
        .map_err(|e| anyhow!("{}: {e}", path.display()))?;
    let norm = normalize_minmax(&batch)?;
    let mut preds = model_forward(&norm, weights, &cfg.model, mel.frame_hop_s)?;
    Ok(preds.remove(0))
}

/// Write `th_<value>.tsv` files aggregating all clips' events per threshold.
fn write_threshold_tsvs(
    output: &Path,
    thresholds: &[f64],
    per_clip: &[Vec<(f64, Vec<Event>)>],
) -> Result<()> {
    for (i, th) in thresholds.iter().enumerate() {
        let mut events = Vec::new();
        for clip in per_clip {
            events.extend(clip[i].1.iter().cloned());
        }
        let path = output.join(format!("th_{th:.4}.tsv"));
        sedio::write_atomic(&path, events_to_tsv(&events).as_bytes())?;
    }
    Ok(())
}

fn cmd_infer(cfg: &PipelineConfig, features: &Path, output: &Path) -> Result<()> {
    let files = collect_files(features, "sedf")?;
    std::fs::create_dir_all(output)?;
    let weights = load_or_init_weights(cfg)?;
    let post = PostprocConfig {
        mode: cfg.postproc_mode,
        mask_threshold: cfg.postproc_threshold,
        table: cfg.class_table()?,
    };
    let thresholds = default_thresholds(cfg.threshold_count);

    let per_clip: Vec<Vec<(f64, Vec<Event>)>> = files
        .par_iter()
        .map(|path| -> Result<Vec<(f64, Vec<Event>)>> {
            let pred = predictions_for_features(cfg, &weights, path)?;
            let clip = stem(path);
            sedio::write_scores(&output.join(format!("{clip}.sedp")), &pred)?;
            Ok(decode_at_thresholds(&pred, &post, &thresholds, &clip)?)
        })
        .collect::<Result<_>>()?;

    write_threshold_tsvs(output, &thresholds, &per_clip)?;
    println!(
        "inferred {} clip(s), wrote score dumps and {} threshold TSVs to {}",
        files.len(),
        thresholds.len(),
        output.display()
    );
    Ok(())
}

fn cmd_postprocess(cfg: &PipelineConfig, scores: &Path, output: &Path) -> Result<()> {
    let files = collect_files(scores, "sedp")?;
    std::fs::create_dir_all(output)?;
    let post = PostprocConfig {
        mode: cfg.postproc_mode,
        mask_threshold: cfg.postproc_threshold,
        table: cfg.class_table()?,
    };
    let thresholds = default_thresholds(cfg.threshold_count);

    let per_clip: Vec<Vec<(f64, Vec<Event>)>> = files
        .par_iter()
        .map(|path| -> Result<Vec<(f64, Vec<Event>)>> {
            let pred = sedio::read_scores(path)?;
            Ok(decode_at_thresholds(&pred, &post, &thresholds, &stem(path))?)
        })
        .collect::<Result<_>>()?;

    write_threshold_tsvs(output, &thresholds, &per_clip)?;
    println!(
        "decoded {} clip(s) at {} thresholds into {}",
        files.len(),
        thresholds.len(),
        output.display()
    );
    Ok(())
}

fn cmd_ensemble(inputs: &[PathBuf], output: &Path) -> Result<()> {
    let preds = inputs
        .iter()
        .map(|p| sedio::read_scores(p).map_err(|e| anyhow!("{}: {e}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let avg = eval::ensemble_average(&preds)?;
    sedio::write_scores(output, &avg)?;
    println!("averaged {} dumps into {}", preds.len(), output.display());
    Ok(())
}

fn cmd_eval(
    cfg: &PipelineConfig,
    detections: &Path,
    ground_truth: &Path,
    durations: &Path,
    per_class: Option<&Path>,
    roc_dump: Option<&Path>,
) -> Result<()> {
    let det_files = collect_files(detections, "tsv")?;
    let mut sweep = Vec::new();
    for path in &det_files {
        let name = stem(path);
        let Some(th) = name.strip_prefix("th_").and_then(|v| v.parse::<f64>().ok()) else {
            log::warn!("skipping {} (not a th_<value>.tsv file)", path.display());
            continue;
        };
        sweep.push((th, read_events_tsv(path)?));
    }
    if sweep.is_empty() {
        bail!("no th_<value>.tsv files under {}", detections.display());
    }
    sweep.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite thresholds"));

    let gts = read_events_tsv(ground_truth)?;
    let dur_text = std::fs::read_to_string(durations)?;
    let durs = eval::parse_durations_tsv(&dur_text, &durations.display().to_string())?;

    let report: EvalReport = evaluate(&sweep, &gts, &durs, &cfg.psds1, &cfg.psds2)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    println!("{}", report.summary_line());

    if let Some(path) = per_class {
        let mut text = String::from("class\ttp\tfp\tfn\tf1\n");
        for c in &report.collar.per_class {
            text.push_str(&format!("{}\t{}\t{}\t{}\t{:.4}\n", c.class, c.tp, c.fp, c.fn_, c.f1));
        }
        sedio::write_atomic(path, text.as_bytes())?;
    }
    if let Some(prefix) = roc_dump {
        let base = prefix.display().to_string();
        sedio::write_atomic(
            Path::new(&format!("{base}_psds1.tsv")),
            eval::roc_to_tsv(&report.roc1).as_bytes(),
        )?;
        sedio::write_atomic(
            Path::new(&format!("{base}_psds2.tsv")),
            eval::roc_to_tsv(&report.roc2).as_bytes(),
        )?;
    }
    Ok(())
}

fn cmd_gradcheck(cfg: &PipelineConfig, trials: usize, tol: f64) -> Result<()> {
    match sedkit_core::selftest::gradient_trials(trials, tol, cfg.seed) {
        Ok(worst) => {
            println!("gradcheck: {trials} trials passed, max relative error {worst:.3e} (tolerance {tol:e})");
            Ok(())
        }
        Err(detail) => {
            println!("{detail}");
            bail!("gradient check failed (tolerance {tol:e})");
        }
    }
}

fn cmd_selftest() -> Result<()> {
    let results = sedkit_core::selftest::run_all();
    for r in &results {
        println!("{}", r.line());
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        bail!("{failed} of {} checks failed", results.len());
    }
    println!("all {} checks passed", results.len());
    Ok(())
}
