//! Command-line interface. Exit status: 0 on success, 1 when a hard
//! property fails or a run diverges, 2 on usage and input errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gesc_core::graph::global_homophily;
use gesc_core::model::evaluate;
use gesc_core::train::train_with;
use gesc_core::{AttentionMode, Dataset, SyntheticSpec};
use serde::Serialize;

use crate::bundle::{save_bundle, write_json};
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::error::{IoError, IoResult};
use crate::exec::Parallel;
use crate::report::{write_band_csv, write_jobs_csv, write_reports, Checked, MetricsLog};
use crate::runconfig::{load_dataset, DatasetSource, RunConfig};
use crate::suites;

#[derive(Debug, Parser)]
#[command(name = "gesc", version, about = "Gauge-equivariant complex graph attention: train, evaluate, verify")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model; writes metrics.jsonl, checkpoint.gesc, config.json and summary.json.
    Train(Common),
    /// Accuracy of a checkpoint on one split.
    Eval(EvalArgs),
    /// Run a verification suite; writes one JSON report per property.
    Verify(VerifyArgs),
    /// Write a synthetic graph bundle.
    GenSynth(GenSynthArgs),
    /// Train the full and additive models across depths.
    DepthSweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttentionArg {
    Hybrid,
    PhaseAided,
    PhaseNorm,
}

impl From<AttentionArg> for AttentionMode {
    fn from(a: AttentionArg) -> Self {
        match a {
            AttentionArg::Hybrid => Self::Hybrid,
            AttentionArg::PhaseAided => Self::PhaseAided,
            AttentionArg::PhaseNorm => Self::PhaseNorm,
        }
    }
}

/// Dataset selection, config file, seed, output directory and overrides.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration; flags take precedence over its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Graph-bundle directory.
    #[arg(long, conflicts_with_all = ["content", "cites"])]
    pub bundle: Option<PathBuf>,
    /// Citation `.content` file (with --cites).
    #[arg(long, requires = "cites")]
    pub content: Option<PathBuf>,
    #[arg(long, requires = "content")]
    pub cites: Option<PathBuf>,
    #[arg(long)]
    pub eta_sic: Option<f64>,
    #[arg(long)]
    pub lambda_js: Option<f64>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, value_enum)]
    pub attention_mode: Option<AttentionArg>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub patience: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MaskArg {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub mask: MaskArg,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Gauge,
    Bounds,
    Lipschitz,
    Notch,
    Depth,
    SicGrid,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 0.5, 0.75, 1.0])]
    pub alpha_scales: Vec<f64>,
    /// Gauge trials per scale.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Random layers for the bound and Lipschitz checks.
    #[arg(long, default_value_t = 1000)]
    pub bound_trials: usize,
    /// Perturbation pairs per Lipschitz instance.
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    /// Stack depth of the spectral probe.
    #[arg(long, default_value_t = 8)]
    pub depth: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 12])]
    pub depths: Vec<usize>,
    /// Seeds 0..N for the training sweeps.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub nodes: usize,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    #[arg(long, default_value_t = 0.2)]
    pub homophily: f64,
    #[arg(long, default_value_t = 8.0)]
    pub mean_degree: f64,
    #[arg(long, default_value_t = 0.3)]
    pub signal: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 12])]
    pub depths: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[command(flatten)]
    pub common: Common,
}

/// Merges file values, flags and the command's default dataset.
pub fn resolve(common: &Common, default_source: DatasetSource) -> IoResult<RunConfig> {
    let mut rc = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let (m, t) = (&mut rc.gesc.model, &mut rc.gesc.train);
    if let Some(v) = common.seed {
        t.seed = v;
    }
    if let Some(v) = common.eta_sic {
        m.eta_sic = v;
    }
    if let Some(v) = common.lambda_js {
        t.lambda_js = v;
    }
    if let Some(v) = common.layers {
        m.layers = v;
    }
    if let Some(v) = common.heads {
        m.heads = v;
    }
    if let Some(v) = common.dim {
        m.hidden_dim = v;
        m.sic_rank = m.sic_rank.min(v.max(1));
    }
    if let Some(v) = common.attention_mode {
        m.attention_mode = v.into();
    }
    if let Some(v) = common.epochs {
        t.max_epochs = v;
    }
    if let Some(v) = common.lr {
        t.lr = v;
    }
    if let Some(v) = common.patience {
        t.patience = v;
    }
    if let Some(path) = &common.bundle {
        rc.dataset = Some(DatasetSource::Bundle { path: path.clone() });
    } else if let (Some(content), Some(cites)) = (&common.content, &common.cites) {
        rc.dataset = Some(DatasetSource::Citation {
            content: content.clone(),
            cites: cites.clone(),
        });
    } else if rc.dataset.is_none() {
        rc.dataset = Some(default_source);
    }
    rc.gesc.validate()?;
    Ok(rc)
}

fn dataset(rc: &RunConfig) -> IoResult<Dataset> {
    let source = rc.dataset.clone().unwrap_or_default();
    let loaded = load_dataset(&source, rc.gesc.train.per_class_train, rc.gesc.train.seed)?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    Ok(loaded.data)
}

fn out_dir(common: &Common, fallback: &str) -> IoResult<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(fallback));
    std::fs::create_dir_all(&dir).map_err(|e| IoError::io(&dir, e))?;
    Ok(dir)
}

#[derive(Serialize)]
struct TrainSummary {
    best_epoch: usize,
    epochs: usize,
    train_acc: f64,
    val_acc: f64,
    test_acc: f64,
    num_parameters: usize,
}

fn cmd_train(common: &Common) -> IoResult<bool> {
    let rc = resolve(common, DatasetSource::default())?;
    let data = dataset(&rc)?;
    let dir = out_dir(common, "gesc-out/train")?;
    rc.save(&dir.join("config.json"))?;
    let mut log = MetricsLog::create(&dir.join("metrics.jsonl"))?;
    let mut log_err = None;
    let outcome = train_with(&data, &rc.gesc, |m| {
        if log_err.is_none() {
            log_err = log.record(m).err();
        }
    })?;
    if let Some(e) = log_err {
        return Err(e);
    }
    log.finish()?;
    save_checkpoint(&outcome.params, dir.join("checkpoint.gesc"))?;
    let best = outcome.best();
    let summary = TrainSummary {
        best_epoch: outcome.best_epoch,
        epochs: outcome.history.len(),
        train_acc: best.train_acc,
        val_acc: best.val_acc,
        test_acc: best.test_acc,
        num_parameters: outcome.params.num_parameters(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    println!(
        "best epoch {} of {}: train {:.4} val {:.4} test {:.4} -> {}",
        summary.best_epoch,
        summary.epochs,
        summary.train_acc,
        summary.val_acc,
        summary.test_acc,
        dir.display()
    );
    Ok(true)
}

#[derive(Serialize)]
struct EvalResult {
    mask: String,
    nodes: usize,
    accuracy: f64,
}

fn cmd_eval(args: &EvalArgs) -> IoResult<bool> {
    let params = load_checkpoint(&args.checkpoint)?;
    let rc = resolve(&args.common, DatasetSource::default())?;
    let data = dataset(&rc)?;
    params.check_dataset(&data)?;
    let n = data.num_nodes();
    let mask = match args.mask {
        MaskArg::Train => data.splits.train.clone(),
        MaskArg::Val => data.splits.val.clone(),
        MaskArg::Test => data.splits.test.clone(),
        MaskArg::All => vec![true; n],
    };
    let accuracy = evaluate(&params, &data, &mask)?;
    let name = format!("{:?}", args.mask).to_lowercase();
    println!("accuracy ({name}): {accuracy:.6}");
    if let Some(dir) = &args.common.out {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
        let r = EvalResult {
            mask: name,
            nodes: mask.iter().filter(|b| **b).count(),
            accuracy,
        };
        write_json(&dir.join("eval.json"), &r)?;
    }
    Ok(true)
}

fn synthetic(num_nodes: usize, homophily: f64) -> DatasetSource {
    DatasetSource::Synthetic(SyntheticSpec {
        num_nodes,
        target_homophily: homophily,
        ..SyntheticSpec::default()
    })
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

fn print_reports(reports: &[Checked]) {
    for r in reports {
        let status = match (r.report.pass, r.hard) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "warn",
        };
        println!("{status:4} {} (max deviation {:.3e}, threshold {:.3e})", r.report.property, r.report.max_deviation, r.report.threshold);
    }
}

fn cmd_verify(args: &VerifyArgs) -> IoResult<bool> {
    let suites = match args.suite {
        Suite::All => vec![Suite::Gauge, Suite::Bounds, Suite::Lipschitz, Suite::Notch, Suite::Depth, Suite::SicGrid],
        s => vec![s],
    };
    let dir = out_dir(&args.common, "gesc-out/verify")?;
    let exec = Parallel::from_env();
    let mut all = Vec::new();
    for suite in suites {
        let started = Instant::now();
        let reports = match suite {
            Suite::Gauge => {
                let rc = resolve(&args.common, synthetic(50, 0.2))?;
                let data = dataset(&rc)?;
                suites::gauge(&rc.gesc.model, &data, &args.alpha_scales, args.trials, rc.gesc.train.seed)?
            }
            Suite::Bounds => suites::bounds(args.bound_trials, seed_of(&args.common)),
            Suite::Lipschitz => suites::lipschitz(args.bound_trials, args.pairs, seed_of(&args.common)),
            Suite::Notch => {
                let rc = resolve(&args.common, synthetic(300, 0.8))?;
                let data = dataset(&rc)?;
                let (rows, reports) = suites::notch(&rc.gesc.model, &data, args.depth, rc.gesc.train.seed)?;
                write_band_csv(&dir.join("notch.csv"), &rows)?;
                reports
            }
            Suite::Depth => {
                let rc = resolve(&args.common, DatasetSource::default())?;
                let data = dataset(&rc)?;
                let (rows, reports) = suites::depth(&exec, &data, &rc.gesc, &args.depths, &seeds(args.seeds), 0.08)?;
                write_jobs_csv(&dir.join("depth.csv"), &rows)?;
                reports
            }
            Suite::SicGrid => {
                let rc = resolve(&args.common, DatasetSource::default())?;
                let data = dataset(&rc)?;
                let (rows, reports) = suites::sic_grid(&exec, &data, &rc.gesc, &seeds(args.seeds))?;
                write_jobs_csv(&dir.join("sic_grid.csv"), &rows)?;
                reports
            }
            Suite::All => unreachable!("expanded above"),
        };
        eprintln!("{suite:?}: {:.1}s", started.elapsed().as_secs_f64());
        write_reports(&dir, &reports)?;
        print_reports(&reports);
        all.extend(reports);
    }
    Ok(!all.iter().any(Checked::failed_hard))
}

fn seed_of(common: &Common) -> u64 {
    common.seed.unwrap_or(0)
}

fn cmd_gen_synth(args: &GenSynthArgs) -> IoResult<bool> {
    let spec = SyntheticSpec {
        num_nodes: args.nodes,
        num_classes: args.classes,
        feature_dim: args.feature_dim,
        target_homophily: args.homophily,
        mean_degree: args.mean_degree,
        feature_signal_strength: args.signal,
        rng_seed: args.seed,
    };
    let data = gesc_core::graph::generate_synthetic(&spec)?;
    save_bundle(&data, &args.out)?;
    let h = global_homophily(&data).unwrap_or(f64::NAN);
    println!(
        "wrote {} nodes, {} edges, homophily {h:.4} -> {}",
        data.num_nodes(),
        data.graph.num_edges(),
        args.out.display()
    );
    Ok(true)
}

fn cmd_depth_sweep(args: &SweepArgs) -> IoResult<bool> {
    let rc = resolve(&args.common, DatasetSource::default())?;
    let data = dataset(&rc)?;
    let dir = out_dir(&args.common, "gesc-out/depth-sweep")?;
    let exec = Parallel::from_env();
    let (rows, reports) = suites::depth(&exec, &data, &rc.gesc, &args.depths, &seeds(args.seeds), 0.08)?;
    write_jobs_csv(&dir.join("depth_sweep.csv"), &rows)?;
    write_reports(&dir, &reports)?;
    for r in &rows {
        println!("{:8} depth {:2} seed {} test {:.4}", r.label, r.layers, r.seed, r.test_acc);
    }
    print_reports(&reports);
    Ok(true)
}

/// Runs a parsed command. `Ok(false)` means a hard property failed.
pub fn run(cli: &Cli) -> IoResult<bool> {
    match &cli.command {
        Command::Train(c) => cmd_train(c),
        Command::Eval(a) => cmd_eval(a),
        Command::Verify(a) => cmd_verify(a),
        Command::GenSynth(a) => cmd_gen_synth(a),
        Command::DepthSweep(a) => cmd_depth_sweep(a),
    }
}

/// Process entry point.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 1 })
        }
    }
}

