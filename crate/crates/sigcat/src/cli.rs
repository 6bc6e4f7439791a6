//! The `sigcat` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use sigcat_core::augment::{build_concatenated_keyed, sample_key, NUM_VARIANTS};
use sigcat_core::model::{build_model, describe_table, ModelParams};
use sigcat_core::preprocess::preprocess_pipeline;
use sigcat_core::signal::{generate_synthetic, stratified_split, Dataset, Signal, Split};
use sigcat_core::train::{ensemble_predict, evaluate, prepare_inputs, train, AugmentMode, EnsembleRule};

use crate::bench::{bench, bench_text};
use crate::checkpoint;
use crate::config::RunConfig;
use crate::csvio::{self, DataConfig};
use crate::report;
use crate::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "sigcat", version, about = "Concatenation-augmented biosignal classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic sine dataset.
    Synth(SynthArgs),
    /// Assign train/val/test splits and write one CSV per split.
    Split(PipelineArgs),
    /// Denoise, remove baseline and standardize every signal.
    Preprocess(PipelineArgs),
    /// Write the seven-variant concatenation of every signal.
    Augment(PipelineArgs),
    /// Train a model or an ensemble.
    Train(PipelineArgs),
    /// Report metrics of trained checkpoints on labeled data.
    Evaluate(EvalArgs),
    /// Write class probabilities for every row.
    Predict(EvalArgs),
    /// Print the per-stage shape and parameter table.
    Describe(DescribeArgs),
    /// Time inference and estimate memory.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory [default: sigcat-<command>].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for splitting, augmentation, initialization and synthesis.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
pub struct DataArgs {
    /// A CSV file, or a directory holding data.csv or train/val/test.csv.
    #[arg(long)]
    pub data: PathBuf,
    /// "last", "none" or a header name.
    #[arg(long)]
    pub label_column: Option<String>,
    /// "none", "first" or a header name.
    #[arg(long)]
    pub id_column: Option<String>,
    /// "uci" or raw:class pairs such as 1:1,2:0.
    #[arg(long)]
    pub label_map: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeArg {
    PerEpoch,
    Frozen,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum RuleArg {
    Mean,
    Vote,
}

#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long, value_enum)]
    pub augment_mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    pub ensemble_rule: Option<RuleArg>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// Augmentation noise standard deviation.
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub scale_factor: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub shift_amount: Option<i64>,
    #[arg(long)]
    pub warp_factor: Option<f64>,
    #[arg(long)]
    pub cutout_segments: Option<usize>,
    #[arg(long)]
    pub cutout_length: Option<usize>,
    #[arg(long)]
    pub jitter_std: Option<f64>,
    #[arg(long)]
    pub wavelet_level: Option<usize>,
    #[arg(long)]
    pub threshold_scale: Option<f64>,
    #[arg(long)]
    pub baseline_kernel: Option<usize>,
    #[arg(long)]
    pub clip_bound: Option<f64>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub val_fraction: Option<f64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PipelineArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub per_class: Option<usize>,
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    /// Cycles per signal for each class, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub freqs: Option<Vec<f64>>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
pub enum SplitArg {
    All,
    Train,
    Val,
    Test,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Checkpoint file or directory of checkpoints; repeat for an ensemble.
    #[arg(long, required = true)]
    pub checkpoint: Vec<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Positive class for binary metrics [default: 1].
    #[arg(long)]
    pub positive_class: Option<usize>,
    /// Which rows to use [default: all for a file, test for a directory].
    #[arg(long, value_enum)]
    pub split: Option<SplitArg>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long, value_enum)]
    pub ensemble_rule: Option<RuleArg>,
}

#[derive(Args, Debug)]
pub struct DescribeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Writes describe.txt and config.json here when given.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Raw signal length; the network sees seven times this.
    #[arg(long)]
    pub signal_length: Option<usize>,
    #[arg(long)]
    pub classes: Option<usize>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub common: Common,
    /// Time a trained model instead of a freshly initialized one.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub signal_length: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub repetitions: usize,
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        set!(cfg.train.batch_size, self.batch_size);
        set!(cfg.train.max_epochs, self.epochs);
        set!(cfg.train.patience, self.patience);
        set!(cfg.train.optimizer.learning_rate, self.lr);
        set!(cfg.train.optimizer.weight_decay, self.weight_decay);
        set!(cfg.train.loss.gamma, self.gamma);
        set!(cfg.train.loss.alpha, self.alpha);
        set!(cfg.train.ensemble_size, self.ensemble_size);
        set!(cfg.train.augment_mode, self.augment_mode.map(mode));
        set!(cfg.train.ensemble_rule, self.ensemble_rule.map(rule));
        set!(cfg.model.dropout, self.dropout);
        set!(cfg.augment.noise_std, self.noise_std);
        set!(cfg.augment.scale_factor, self.scale_factor);
        set!(cfg.augment.shift_amount, self.shift_amount);
        set!(cfg.augment.warp_factor, self.warp_factor);
        set!(cfg.augment.cutout_segments, self.cutout_segments);
        set!(cfg.augment.cutout_length, self.cutout_length);
        set!(cfg.augment.jitter_std, self.jitter_std);
        set!(cfg.preprocess.denoise.wavelet.level, self.wavelet_level);
        set!(cfg.preprocess.denoise.threshold_scale, self.threshold_scale);
        set!(cfg.preprocess.baseline_kernel, self.baseline_kernel);
        set!(cfg.preprocess.clip_bound, self.clip_bound);
        set!(cfg.split.train_fraction, self.train_fraction);
        set!(cfg.split.val_fraction, self.val_fraction);
        set!(cfg.split.test_fraction, self.test_fraction);
    }
}

fn mode(m: ModeArg) -> AugmentMode {
    match m {
        ModeArg::PerEpoch => AugmentMode::PerEpoch,
        ModeArg::Frozen => AugmentMode::Frozen,
    }
}

fn rule(r: RuleArg) -> EnsembleRule {
    match r {
        RuleArg::Mean => EnsembleRule::MeanProbability,
        RuleArg::Vote => EnsembleRule::MajorityVote,
    }
}

impl DataArgs {
    fn apply(&self, cfg: &mut DataConfig) {
        if let Some(c) = &self.label_column {
            cfg.label_column = c.clone();
        }
        if let Some(c) = &self.id_column {
            cfg.id_column = c.clone();
        }
        if let Some(m) = &self.label_map {
            cfg.label_map = (m != "none").then(|| m.clone());
        }
    }
}

fn base_config(common: &Common) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.train.seed = s;
        cfg.split.seed = s;
        cfg.augment.seed = s;
        cfg.synth.seed = s;
    }
    Ok(cfg)
}

fn out_dir(out: &Option<PathBuf>, command: &str) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from(format!("sigcat-{command}")));
    std::fs::create_dir_all(&dir).map_err(Error::io(&dir))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(Error::io(path))
}

/// Concatenates per-split files into one dataset with split assignments.
fn merge(parts: Vec<(Split, Dataset)>, cfg: &DataConfig) -> Result<Dataset> {
    let mut signals = Vec::new();
    let mut splits = Vec::new();
    let mut names = None;
    for (split, d) in parts {
        names.get_or_insert_with(|| d.class_names().to_vec());
        for s in d.signals() {
            let id = format!("{}/{}", split.name(), s.source_id.as_deref().unwrap_or_default());
            signals.push(s.clone().with_source_id(id));
            splits.push(split);
        }
    }
    let mut merged = match (&cfg.label_map, names) {
        (Some(_), Some(names)) => Dataset::new(signals, names.len(), names)?,
        _ => Dataset::from_labeled(signals)?,
    };
    merged.assign_splits(splits)?;
    Ok(merged)
}

/// Loads `--data`: a CSV file, a directory of per-split files, or a
/// directory holding `data.csv`. Returns whether splits came from files.
fn load_data(path: &Path, cfg: &DataConfig) -> Result<(Dataset, bool)> {
    if !path.is_dir() {
        return Ok((csvio::load_csv_dataset(path, cfg)?, false));
    }
    let train_file = path.join("train.csv");
    if train_file.exists() {
        let mut parts = Vec::new();
        for split in Split::ALL {
            let f = path.join(format!("{}.csv", split.name()));
            if f.exists() {
                parts.push((split, csvio::load_csv_dataset(&f, cfg)?));
            } else if split != Split::Test {
                return Err(Error::Usage(format!("{} is missing", f.display())));
            }
        }
        if parts.len() == 2 {
            return Ok((merge_without_test(parts, cfg)?, true));
        }
        return Ok((merge(parts, cfg)?, true));
    }
    let data = path.join("data.csv");
    if data.exists() {
        return Ok((csvio::load_csv_dataset(&data, cfg)?, false));
    }
    Err(Error::Usage(format!(
        "{} holds neither train.csv nor data.csv",
        path.display()
    )))
}

fn merge_without_test(parts: Vec<(Split, Dataset)>, cfg: &DataConfig) -> Result<Dataset> {
    // Dataset split assignment requires three non-empty splits, so the
    // validation rows double as a (reported) test split.
    let mut parts = parts;
    let val = parts[1].1.clone();
    parts.push((Split::Test, val));
    merge(parts, cfg)
}

fn split_dataset(data: Dataset, presplit: bool, cfg: &RunConfig) -> Result<Dataset> {
    if presplit {
        Ok(data)
    } else {
        Ok(stratified_split(&data, &cfg.split)?)
    }
}

fn pipeline_config(args: &PipelineArgs) -> Result<RunConfig> {
    let mut cfg = base_config(&args.common)?;
    args.overrides.apply(&mut cfg);
    args.data.apply(&mut cfg.data);
    Ok(cfg)
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let mut cfg = base_config(&args.common)?;
    let s = &mut cfg.synth;
    if let Some(v) = args.classes {
        s.classes = v;
    }
    if let Some(v) = args.per_class {
        s.per_class = v;
    }
    if let Some(v) = args.length {
        s.length = v;
    }
    if let Some(v) = args.noise_std {
        s.noise_std = v;
    }
    if let Some(v) = &args.freqs {
        s.freqs = v.clone();
    }
    let data = generate_synthetic(&cfg.synth.spec()?)?;
    let dir = out_dir(&args.common.out, "synth")?;
    csvio::write_csv(&dir.join("data.csv"), data.signals())?;
    write(&dir, "summary.txt", &csvio::summary(&data))?;
    cfg.echo(&dir)?;
    info!("wrote {} signals to {}", data.len(), dir.display());
    Ok(())
}

fn cmd_split(args: &PipelineArgs) -> Result<()> {
    let cfg = pipeline_config(args)?;
    let (data, presplit) = load_data(&args.data.data, &cfg.data)?;
    let data = split_dataset(data, presplit, &cfg)?;
    let dir = out_dir(&args.common.out, "split")?;
    for split in Split::ALL {
        let rows: Vec<Signal> = data.split_signals(split).into_iter().cloned().collect();
        csvio::write_csv(&dir.join(format!("{}.csv", split.name())), &rows)?;
    }
    write(&dir, "summary.txt", &csvio::summary(&data))?;
    cfg.echo(&dir)
}

fn cmd_preprocess(args: &PipelineArgs) -> Result<()> {
    let cfg = pipeline_config(args)?;
    cfg.preprocess.validate()?;
    let (data, _) = load_data(&args.data.data, &cfg.data)?;
    let out: Vec<Signal> = data
        .signals()
        .iter()
        .map(|s| preprocess_pipeline(s, &cfg.preprocess))
        .collect::<sigcat_core::Result<_>>()?;
    let dir = out_dir(&args.common.out, "preprocess")?;
    csvio::write_csv(&dir.join("preprocessed.csv"), &out)?;
    cfg.echo(&dir)
}

fn cmd_augment(args: &PipelineArgs) -> Result<()> {
    let cfg = pipeline_config(args)?;
    let (data, _) = load_data(&args.data.data, &cfg.data)?;
    cfg.augment.validate(data.signal_len().unwrap_or(0))?;
    let out: Vec<Signal> = data
        .signals()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let key = sample_key(s.source_id.as_deref(), i);
            s.with_samples(build_concatenated_keyed(s.samples(), &cfg.augment, key)?)
        })
        .collect::<sigcat_core::Result<_>>()?;
    let dir = out_dir(&args.common.out, "augment")?;
    csvio::write_csv(&dir.join("augmented.csv"), &out)?;
    cfg.echo(&dir)
}

/// Trains per the config and writes checkpoints, logs and (when a test
/// split exists) the ensemble's test report into `dir`.
pub fn train_to_dir(data: &Dataset, cfg: &mut RunConfig, dir: &Path, presplit_test: bool) -> Result<()> {
    cfg.model.num_classes = data.num_classes();
    let len = data.signal_len().unwrap_or(0);
    cfg.pipeline().validate(len)?;
    cfg.echo(dir)?;
    let n = cfg.train.ensemble_size;
    let mut models = Vec::with_capacity(n);
    let mut summaries = Vec::with_capacity(n);
    for k in 0..n {
        let mut member = cfg.pipeline();
        member.train.seed = cfg.train.seed.wrapping_add(k as u64);
        let out = train(data, &member, &mut |r| {
            info!(
                "member {k} epoch {}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}, lr {:e}",
                r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc, r.learning_rate
            );
        })?;
        let suffix = if n == 1 { String::new() } else { format!("-{k}") };
        checkpoint::save(&dir.join(checkpoint::member_file_name(k, n)), &out.model, cfg)?;
        write(dir, &format!("train_log{suffix}.csv"), &report::train_log_csv(&out.log))?;
        summaries.push(serde_json::json!({
            "member": k,
            "seed": member.train.seed,
            "best_epoch": out.log.best_epoch,
            "best_val_acc": out.log.best().map(|r| r.val_acc),
            "epochs": out.log.epochs.len(),
            "stop_reason": out.log.stop_reason,
        }));
        models.push(out.model);
    }
    let mut summary = serde_json::to_string_pretty(&summaries).expect("summary serializes");
    summary.push('\n');
    write(dir, "train_summary.json", &summary)?;
    if presplit_test {
        let test = data.split_signals(Split::Test);
        let refs: Vec<&ModelParams> = models.iter().collect();
        let ev = evaluate(&refs, &test, &cfg.pipeline(), None)?;
        write_evaluation(dir, &ev, data.class_names())?;
    }
    Ok(())
}

fn write_evaluation(dir: &Path, ev: &sigcat_core::train::Evaluation, names: &[String]) -> Result<()> {
    write(dir, "metrics.txt", &report::metrics_table(&ev.report, names))?;
    write(dir, "metrics.json", &report::metrics_json(&ev.report, &ev.confusion, names))?;
    write(dir, "confusion.csv", &report::confusion_csv(&ev.confusion))
}

fn cmd_train(args: &PipelineArgs) -> Result<()> {
    let mut cfg = pipeline_config(args)?;
    let (data, presplit) = load_data(&args.data.data, &cfg.data)?;
    let has_test = !presplit || args.data.data.join("test.csv").exists();
    let data = split_dataset(data, presplit, &cfg)?;
    let dir = out_dir(&args.common.out, "train")?;
    train_to_dir(&data, &mut cfg, &dir, has_test)?;
    info!("outputs in {}", dir.display());
    Ok(())
}

fn load_members(args: &EvalArgs) -> Result<(RunConfig, Vec<ModelParams>)> {
    let paths = checkpoint::resolve_paths(&args.checkpoint)?;
    let mut cfg = None;
    let mut models = Vec::with_capacity(paths.len());
    for p in &paths {
        let (c, m) = checkpoint::load(p)?;
        cfg.get_or_insert(c);
        models.push(m);
    }
    let mut cfg = cfg.ok_or_else(|| Error::Usage("no checkpoints given".into()))?;
    args.data.apply(&mut cfg.data);
    if let Some(b) = args.batch_size {
        cfg.train.batch_size = b;
    }
    if let Some(r) = args.ensemble_rule {
        cfg.train.ensemble_rule = rule(r);
    }
    Ok((cfg, models))
}

fn selected(data: &Dataset, presplit: bool, args: &EvalArgs, cfg: &RunConfig) -> Result<Vec<Signal>> {
    let is_dir = args.data.data.is_dir();
    let which = args.split.unwrap_or(if is_dir { SplitArg::Test } else { SplitArg::All });
    let split = match which {
        SplitArg::All => return Ok(data.signals().to_vec()),
        SplitArg::Train => Split::Train,
        SplitArg::Val => Split::Val,
        SplitArg::Test => Split::Test,
    };
    let d = split_dataset(data.clone(), presplit, cfg)?;
    Ok(d.split_signals(split).into_iter().cloned().collect())
}

fn cmd_evaluate(args: &EvalArgs) -> Result<()> {
    let (cfg, models) = load_members(args)?;
    let (data, presplit) = load_data(&args.data.data, &cfg.data)?;
    let signals = selected(&data, presplit, args, &cfg)?;
    let refs: Vec<&ModelParams> = models.iter().collect();
    let sig_refs: Vec<&Signal> = signals.iter().collect();
    let ev = evaluate(&refs, &sig_refs, &cfg.pipeline(), args.positive_class)?;
    let dir = out_dir(&args.out, "evaluate")?;
    let names = data.class_names();
    write_evaluation(&dir, &ev, names)?;
    cfg.echo(&dir)?;
    print!("{}", report::metrics_table(&ev.report, names));
    Ok(())
}

fn cmd_predict(args: &EvalArgs) -> Result<()> {
    let (cfg, models) = load_members(args)?;
    let (data, presplit) = load_data(&args.data.data, &cfg.data)?;
    let signals = selected(&data, presplit, args, &cfg)?;
    let sig_refs: Vec<&Signal> = signals.iter().collect();
    let inputs = prepare_inputs(&sig_refs, &cfg.preprocess, &cfg.augment)?;
    let refs: Vec<&ModelParams> = models.iter().collect();
    let pred = ensemble_predict(&refs, &inputs, cfg.train.ensemble_rule, cfg.train.batch_size)?;
    let c = cfg.model.num_classes;
    let mut out = String::from("row,id,label,predicted");
    for k in 0..c {
        out.push_str(&format!(",p{k}"));
    }
    out.push('\n');
    for (i, (s, (probs, class))) in signals.iter().zip(pred.probabilities.iter().zip(&pred.classes)).enumerate() {
        let label = s.label.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!("{i},{},{label},{class}", s.source_id.as_deref().unwrap_or_default()));
        for p in probs {
            out.push_str(&format!(",{p:?}"));
        }
        out.push('\n');
    }
    let dir = out_dir(&args.out, "predict")?;
    write(&dir, "predictions.csv", &out)?;
    cfg.echo(&dir)
}

fn cmd_describe(args: &DescribeArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(c) = args.classes {
        cfg.model.num_classes = c;
    }
    let n = args.signal_length.unwrap_or(cfg.synth.length);
    let len = NUM_VARIANTS * n;
    let table = describe_table(&cfg.model, len)?;
    let text = format!("input length {len} ({NUM_VARIANTS} x {n})\n{table}");
    print!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(Error::io(dir))?;
        write(dir, "describe.txt", &text)?;
        cfg.echo(dir)?;
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let (cfg, model) = match &args.checkpoint {
        Some(p) => checkpoint::load(p)?,
        None => {
            let cfg = base_config(&args.common)?;
            let m = build_model(&cfg.model, cfg.train.seed)?;
            (cfg, m)
        }
    };
    let n = args.signal_length.unwrap_or(cfg.synth.length);
    let r = bench(&model, NUM_VARIANTS * n, args.repetitions, args.warmup, cfg.train.ensemble_size)?;
    let text = bench_text(&r);
    print!("{text}");
    let dir = out_dir(&args.common.out, "bench")?;
    write(&dir, "bench.txt", &text)?;
    let mut json = serde_json::to_string_pretty(&r).expect("bench report serializes");
    json.push('\n');
    write(&dir, "bench.json", &json)?;
    cfg.echo(&dir)
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Split(a) => cmd_split(a),
        Command::Preprocess(a) => cmd_preprocess(a),
        Command::Augment(a) => cmd_augment(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Describe(a) => cmd_describe(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIGCAT_LOG", "info"))
        .format_target(false)
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}
