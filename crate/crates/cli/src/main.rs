mod config;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use nids_core::synth::SynthSpec;
use nids_core::{Error, Result};

use config::PipelineConfig;
use manifest::{DirLock, RunManifest, STALE_MARKER};

/// Hybrid network-intrusion-detection pipeline: clean and encode a dataset,
/// balance it with SMOTE, rank features by boosted-tree gain, pick the
/// smallest accurate feature prefix, and evaluate classifiers with k-fold
/// cross-validation.
#[derive(Parser, Debug)]
#[command(name = "nids", version, about)]
struct Cli {
    /// TOML config file; flags below override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Input CSV path (config: input.path).
    #[arg(long, global = true)]
    data: Option<PathBuf>,

    /// Input schema: kdd | malmem | generic (config: input.kind).
    #[arg(long, global = true)]
    kind: Option<String>,

    /// Task: binary | multilabel (config: input.task).
    #[arg(long, global = true)]
    task: Option<String>,

    /// Output directory for all artifacts (config: run.out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Global seed; every random stream derives from it (config: run.seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread cap, 0 = all cores (config: run.threads, env NIDS_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Stratified row cap applied at ingest (config: run.sample_rows).
    #[arg(long = "sample-rows", global = true)]
    sample_rows: Option<usize>,

    /// SMOTE neighbor count (config: smote.k_neighbors).
    #[arg(long = "smote-k", global = true)]
    smote_k: Option<usize>,

    /// Quantile bins for boosted splits, 0 = exact (config: boost.quantile_bins).
    #[arg(long = "quantile-bins", global = true)]
    quantile_bins: Option<usize>,

    /// Selection accuracy threshold (config: select.threshold).
    #[arg(long, global = true)]
    threshold: Option<f64>,

    /// Selection k decrement (config: select.step).
    #[arg(long, global = true)]
    step: Option<usize>,

    /// Pin the chosen prefix size, skipping the sweep (config: select.top_k).
    #[arg(long = "top-k", global = true)]
    top_k: Option<usize>,

    /// Sweep prefixes from small k upward, stopping at the first pass
    /// (config: select.early_exit).
    #[arg(long = "early-exit", global = true)]
    early_exit: bool,

    /// CV folds inside the selection sweep (config: select.folds).
    #[arg(long = "select-folds", global = true)]
    select_folds: Option<usize>,

    /// Evaluation folds (config: eval.folds).
    #[arg(long, global = true)]
    folds: Option<usize>,

    /// SMOTE/scaling scope: global | train-only (config: eval.scope).
    #[arg(long, global = true)]
    scope: Option<String>,

    /// KNN reference-set cap (config: learners.knn.sample_cap).
    #[arg(long = "knn-sample", global = true)]
    knn_sample: Option<usize>,

    /// Comma-separated learner list for evaluation (config: eval.learners).
    #[arg(long, global = true)]
    learners: Option<String>,

    /// Comma-separated epoch counts for the scalability check
    /// (config: eval.scalability_epochs).
    #[arg(long = "scalability-epochs", global = true)]
    scalability_epochs: Option<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic Gaussian-cluster dataset CSV.
    Synth {
        /// Where to write the CSV.
        path: PathBuf,
        /// Comma-separated per-class row counts, e.g. 500,500.
        #[arg(long, default_value = "500,500")]
        counts: String,
        #[arg(long, default_value_t = 3)]
        informative: usize,
        #[arg(long, default_value_t = 7)]
        noise: usize,
        #[arg(long = "synth-seed", default_value_t = 0)]
        synth_seed: u64,
    },
    /// Load, clean, encode and scale the input CSV into prepared.bin.
    Ingest,
    /// Equalize class counts with SMOTE into balanced.bin (skipped when
    /// already balanced).
    Balance,
    /// Train the boosted forest and write the gain ranking.
    Rank,
    /// Run the prefix sweep (or pin --top-k) and write selection.json.
    Select,
    /// Train one learner on the chosen features and save its model.
    Train {
        #[arg(long)]
        learner: String,
    },
    /// Cross-validate all configured learners and write the report files.
    Evaluate,
    /// Regenerate CSV reports from eval.json without retraining.
    Report,
    /// Full pipeline: ingest, balance, rank, select, evaluate.
    Run,
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("{what}: cannot parse '{t}'")))
        })
        .collect()
}

fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = &cli.data {
        cfg.input.path = v.clone();
    }
    if let Some(v) = &cli.kind {
        cfg.input.kind = v.clone();
    }
    if let Some(v) = &cli.task {
        cfg.input.task = v.clone();
    }
    if let Some(v) = &cli.out {
        cfg.run.out_dir = v.clone();
    }
    if let Some(v) = cli.seed {
        cfg.run.seed = v;
    }
    if let Some(v) = cli.threads {
        cfg.run.threads = v;
    }
    if let Some(v) = cli.sample_rows {
        cfg.run.sample_rows = v;
    }
    if let Some(v) = cli.smote_k {
        cfg.smote.k_neighbors = v;
    }
    if let Some(v) = cli.quantile_bins {
        cfg.boost.quantile_bins = v;
    }
    if let Some(v) = cli.threshold {
        cfg.select.threshold = v;
    }
    if let Some(v) = cli.step {
        cfg.select.step = v;
    }
    if let Some(v) = cli.top_k {
        cfg.select.top_k = v;
    }
    if cli.early_exit {
        cfg.select.early_exit = true;
    }
    if let Some(v) = cli.select_folds {
        cfg.select.folds = v;
    }
    if let Some(v) = cli.folds {
        cfg.eval.folds = v;
    }
    if let Some(v) = &cli.scope {
        cfg.eval.scope = v.clone();
    }
    if let Some(v) = cli.knn_sample {
        cfg.learners.knn.sample_cap = v;
    }
    if let Some(v) = &cli.learners {
        cfg.eval.learners = parse_list(v, "--learners")?;
    }
    if let Some(v) = &cli.scalability_epochs {
        cfg.eval.scalability_epochs = parse_list(v, "--scalability-epochs")?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads(cfg: &PipelineConfig) {
    let n = if cfg.run.threads > 0 {
        cfg.run.threads
    } else {
        std::env::var("NIDS_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    };
    if n > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
}

/// Run stages under the output-directory lock, timing each and flagging
/// partial artifacts on failure.
fn run_stages(cfg: &PipelineConfig, names: &[&str]) -> Result<()> {
    let _lock = DirLock::acquire(&cfg.run.out_dir)?;
    let mut m = RunManifest::load_or_default(&cfg.run.out_dir);
    m.tool_version = env!("CARGO_PKG_VERSION").to_string();
    m.config = Some(cfg.clone());

    let stale = cfg.run.out_dir.join(STALE_MARKER);
    for &name in names {
        log::info!("stage {name} starting");
        let t0 = Instant::now();
        match stages::dispatch_stage(name, cfg, &mut m) {
            Ok(()) => {
                m.timings_ms
                    .insert(name.to_string(), t0.elapsed().as_millis() as u64);
                log::info!("stage {name} done in {:?}", t0.elapsed());
            }
            Err(e) => {
                // flag partial artifacts so later stages refuse stale reads
                let _ = std::fs::write(&stale, format!("failed in stage '{name}': {e}\n"));
                let _ = m.save(&cfg.run.out_dir);
                return Err(e.in_stage(name));
            }
        }
    }
    let _ = std::fs::remove_file(&stale);
    m.save(&cfg.run.out_dir)?;
    Ok(())
}

fn train_command(cfg: &PipelineConfig, learner: &str) -> Result<()> {
    let _lock = DirLock::acquire(&cfg.run.out_dir)?;
    let mut m = RunManifest::load_or_default(&cfg.run.out_dir);
    let t0 = Instant::now();
    stages::stage_train(cfg, &mut m, learner).map_err(|e| e.in_stage("train"))?;
    m.timings_ms
        .insert("train".to_string(), t0.elapsed().as_millis() as u64);
    m.save(&cfg.run.out_dir)
}

fn real_main() -> Result<()> {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();

    if let Command::Synth {
        path,
        counts,
        informative,
        noise,
        synth_seed,
    } = &cli.command
    {
        let spec = SynthSpec {
            class_counts: parse_list(counts, "--counts")?,
            informative: *informative,
            noise: *noise,
            seed: *synth_seed,
        };
        return stages::stage_synth(&spec, path);
    }

    let cfg = effective_config(&cli)?;
    init_threads(&cfg);

    match &cli.command {
        Command::Synth { .. } => unreachable!("handled above"),
        Command::Ingest => run_stages(&cfg, &["ingest"]),
        Command::Balance => run_stages(&cfg, &["balance"]),
        Command::Rank => run_stages(&cfg, &["rank"]),
        Command::Select => run_stages(&cfg, &["select"]),
        Command::Train { learner } => train_command(&cfg, learner),
        Command::Evaluate => run_stages(&cfg, &["evaluate"]),
        Command::Report => run_stages(&cfg, &["report"]),
        Command::Run => run_stages(&cfg, &stages::stage_names_for_run()),
    }
}

/// Exit codes: 0 success, 2 config error, 3 data error, 4 stage failure.
/// Stage wrappers are unwrapped so config/data causes keep their codes.
fn classify(err: &Error) -> u8 {
    match err {
        Error::Stage { source, .. } => classify(source),
        Error::Config(_) | Error::Argument(_) => 2,
        Error::Parse { .. }
        | Error::Data(_)
        | Error::UnknownSubcategory(_)
        | Error::UnmappedCategory(_)
        | Error::Balance { .. }
        | Error::Csv(_) => 3,
        _ => 4,
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::from(classify(&e))
        }
    }
}
