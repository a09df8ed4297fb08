//! Command implementations behind the `modeconv` binary.

pub mod bench;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use modeconv::config::{canonical_hash, LayerKind, RunConfig, ThresholdKind};
use modeconv::manifest::{DataFormat, Manifest};
use modeconv::nn::checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use modeconv::pipeline::{evaluate, fit, prepare, Evaluation};
use modeconv::simulator::{emit_dataset, simulate, ScenarioSpec};
use modeconv::{Error, Result, VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "modeconv",
    version,
    about = "Modal graph convolution for vibration anomaly detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a damage scenario and write a dataset.
    Simulate(SimulateArgs),
    /// Train an autoencoder on the normal windows of a dataset.
    Train(TrainArgs),
    /// Score the test split and write anomaly reports.
    Eval(EvalArgs),
    /// Count multiply-adds and time single-layer forward passes.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Binary,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayerArg {
    Fast,
    Laplace,
    Cheb,
}

impl From<LayerArg> for LayerKind {
    fn from(l: LayerArg) -> Self {
        match l {
            LayerArg::Fast => LayerKind::Fast,
            LayerArg::Laplace => LayerKind::Laplace,
            LayerArg::Cheb => LayerKind::Cheb,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    L1,
    Mahalanobis,
}

impl From<ThresholdArg> for ThresholdKind {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::L1 => ThresholdKind::L1,
            ThresholdArg::Mahalanobis => ThresholdKind::Mahalanobis,
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    /// Scenario spec (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: FormatArg,
}

#[derive(Debug, clap::Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Run configuration (JSON); defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub layer: Option<LayerArg>,
    /// Total epochs (a resumed run continues up to this count).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Continue from this checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Layer indices whose parameters stay fixed.
    #[arg(long, value_delimiter = ',')]
    pub freeze: Vec<usize>,
}

#[derive(Debug, clap::Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "l1")]
    pub threshold: ThresholdArg,
}

/// Run a parsed command, mapping errors to exit codes.
pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Simulate(a) => cmd_simulate(&a).map(|_| ()),
        Command::Train(a) => cmd_train(&a).map(|_| ()),
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Bench(a) => bench::cmd_bench(&a).map(|_| ()),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Manifest> {
    let mut spec = ScenarioSpec::from_json(&read(&args.config)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let output = simulate(&spec)?;
    let format = match args.format {
        FormatArg::Binary => DataFormat::Binary,
        FormatArg::Csv => DataFormat::Csv,
    };
    emit_dataset(&spec, &output, &args.out, format)
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_json(&read(p)?),
        None => Ok(RunConfig::default()),
    }
}

#[derive(Debug, Serialize)]
struct TrainReport<'a> {
    version: &'a str,
    config_hash: &'a str,
    dataset_hash: &'a str,
    epochs: usize,
    best_epoch: Option<usize>,
    best_loss: Option<f64>,
    final_train_loss: Option<f64>,
    train_windows: usize,
    validation_windows: usize,
}

pub fn cmd_train(args: &TrainArgs) -> Result<Checkpoint> {
    let mut cfg = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(layer) = args.layer {
        cfg.layer = layer.into();
    }
    if let Some(epochs) = args.epochs {
        cfg.epochs = epochs;
    }
    cfg.validate()?;
    let (manifest, base) = Manifest::load(&args.manifest)?;
    let dataset_hash = canonical_hash(&manifest);

    let resume = match &args.resume {
        Some(path) => {
            let ck = Checkpoint::load(path)?;
            let mut same = ck.config.clone();
            same.epochs = cfg.epochs;
            if same != cfg {
                return Err(Error::Config(
                    "resumed run must use the checkpoint's configuration".into(),
                ));
            }
            if ck.dataset_hash != dataset_hash {
                return Err(Error::Config(
                    "checkpoint was trained on a different dataset".into(),
                ));
            }
            Some(ck)
        }
        None => None,
    };
    let data = prepare(
        manifest,
        &base,
        &cfg,
        resume.as_ref().map(|c| c.normalization.clone()),
    )?;
    let layers = 2 * cfg.layer_count;
    if let Some(&bad) = args.freeze.iter().find(|&&i| i >= layers) {
        return Err(Error::Config(format!(
            "cannot freeze layer {bad}, the model has {layers}"
        )));
    }
    let frozen: Vec<bool> = (0..layers).map(|i| args.freeze.contains(&i)).collect();
    let outcome = fit(
        &data,
        &cfg,
        &frozen,
        resume.map(|c| (c.params, c.state, c.best)),
    )?;

    let config_hash = cfg.hash();
    let ck = Checkpoint {
        checkpoint_version: CHECKPOINT_VERSION,
        library_version: VERSION.into(),
        config: cfg.clone(),
        config_hash: config_hash.clone(),
        dataset_hash: dataset_hash.clone(),
        normalization: data.normalization.clone(),
        params: outcome.params,
        best: outcome.best,
        state: outcome.state,
    };
    write(&args.out.join("checkpoint.json"), &ck.to_json()?)?;
    write(&args.out.join("loss_history.csv"), &loss_history_csv(&ck))?;
    write_json(
        &args.out.join("train_report.json"),
        &TrainReport {
            version: VERSION,
            config_hash: &config_hash,
            dataset_hash: &dataset_hash,
            epochs: ck.state.epoch,
            best_epoch: ck.state.best_epoch,
            best_loss: ck.state.best_loss,
            final_train_loss: ck.state.train_loss.last().copied(),
            train_windows: data.split.train.len(),
            validation_windows: data.split.validation.len(),
        },
    )?;
    Ok(ck)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn loss_history_csv(ck: &Checkpoint) -> String {
    let mut s = String::from("epoch,train_loss,validation_loss,gradient_norm\n");
    let st = &ck.state;
    for e in 0..st.epoch {
        let _ = writeln!(
            s,
            "{e},{},{},{}",
            st.train_loss[e],
            opt(st.validation_loss[e]),
            st.gradient_norm[e]
        );
    }
    s
}

#[derive(Debug, Serialize)]
pub struct EvalReport {
    pub version: String,
    pub config_hash: String,
    pub dataset_hash: String,
    pub threshold_kind: ThresholdKind,
    pub evaluation: Evaluation,
}

fn threshold_name(k: ThresholdKind) -> &'static str {
    match k {
        ThresholdKind::L1 => "l1",
        ThresholdKind::Mahalanobis => "mahalanobis",
    }
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let (manifest, base) = Manifest::load(&args.manifest)?;
    let dataset_hash = canonical_hash(&manifest);
    let cfg = ck.config.clone();
    let data = prepare(manifest, &base, &cfg, Some(ck.normalization.clone()))?;
    if data.split.test.is_empty() {
        return Err(Error::Config("the dataset has no test windows".into()));
    }
    let kind: ThresholdKind = args.threshold.into();
    let evaluation = evaluate(&data, &ck.best, kind, cfg.percentile, cfg.batch_size)?;
    let report = EvalReport {
        version: VERSION.into(),
        config_hash: ck.config_hash.clone(),
        dataset_hash,
        threshold_kind: kind,
        evaluation,
    };
    let name = threshold_name(kind);
    write_json(&args.out.join(format!("report_{name}.json")), &report)?;
    write(
        &args.out.join(format!("report_{name}.csv")),
        &summary_csv(&report),
    )?;
    write(
        &args.out.join(format!("scores_{name}.csv")),
        &scores_csv(&report),
    )?;
    Ok(report)
}

/// One header row and one data row, for aggregation across runs.
pub fn summary_csv(r: &EvalReport) -> String {
    let m = &r.evaluation.report.metrics;
    format!(
        "version,config_hash,dataset_hash,threshold_kind,threshold,windows,true_positives,false_positives,\
         true_negatives,false_negatives,precision,recall,f1,balanced_accuracy,auc\n\
         {},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        r.version,
        r.config_hash,
        r.dataset_hash,
        threshold_name(r.threshold_kind),
        r.evaluation.report.threshold.threshold,
        r.evaluation.windows.len(),
        m.true_positives,
        m.false_positives,
        m.true_negatives,
        m.false_negatives,
        m.precision,
        m.recall,
        m.f1,
        m.balanced_accuracy,
        m.auc
    )
}

/// Per-window rows: index, label, reconstruction error, score, flag.
pub fn scores_csv(r: &EvalReport) -> String {
    let e = &r.evaluation;
    let mut s = String::from("window,label,reconstruction_error,score,flag\n");
    for (k, &w) in e.windows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{w},{},{},{},{}",
            u8::from(e.report.truth[k]),
            e.reconstruction_error[k],
            e.report.scores[k],
            u8::from(e.report.flags[k])
        );
    }
    s
}
