use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dgsta::bench::{run_bench, BenchShape};
use dgsta::data::{
    index_dhg, index_shrec, load_dataset, synth_gestures, Dataset, Split, SynthSpec,
};
use dgsta::gradcheck::{run_gradcheck, tiny_config};
use dgsta::graph::{
    build_mask_of_kind, load_bone_list, GraphShape, MaskKind, DEFAULT_HAND_BONES,
};
use dgsta::model::{load_checkpoint, Constants, ModelConfig, Variant};
use dgsta::report::{mean_accuracy, EvalReport, FoldSummary, RunSummary};
use dgsta::seeding;
use dgsta::train::{
    evaluate, folds_for, run_fold, run_overfit, AugmentConfig, FoldSpec, Protocol, TrainOptions,
};
use dgsta::{Error, Result};

#[derive(Parser)]
#[command(name = "dgsta", version, about = "Skeleton-based hand-gesture recognition with masked spatial-temporal attention")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the classifier; writes per-fold CSV metrics, checkpoints, and summary.json.
    Train(TrainArgs),
    /// Score a saved checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Time the per-edge attention path against the masked matrix path.
    Bench(BenchArgs),
    /// Dump an attention mask as ASCII art or a PGM image.
    Masks(MasksArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DatasetArg {
    Dhg,
    Shrec,
    Synthetic,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Dgsta,
    Gat,
    Ssg,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Dgsta => Variant::Dgsta,
            VariantArg::Gat => Variant::Gat,
            VariantArg::Ssg => Variant::Ssg,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    /// Leave-one-subject-out cross-validation.
    Loso,
    /// The dataset's own train/test split.
    Fixed,
    /// Train and score on the full dataset (memorization check).
    Overfit,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset family.
    #[arg(long, value_enum, default_value_t = DatasetArg::Synthetic)]
    dataset: DatasetArg,
    /// Directory holding the skeleton files (dhg and shrec only).
    #[arg(long, value_name = "DIR")]
    data_root: Option<PathBuf>,
    /// Synthetic generator settings, e.g. classes=3,per_class=20,seed=7,frames=32.
    #[arg(long, value_name = "SPEC")]
    synthetic: Option<SynthSpec>,
    /// Label space: 14 coarse gestures or 28 gesture-finger combinations.
    #[arg(long, value_name = "14|28")]
    gestures: Option<usize>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let gestures = match self.gestures {
            None => 14,
            Some(g @ (14 | 28)) => g,
            Some(g) => {
                return Err(Error::Usage(format!("--gestures must be 14 or 28, got {g}")));
            }
        };
        match self.dataset {
            DatasetArg::Synthetic => {
                if self.data_root.is_some() {
                    return Err(Error::Usage(
                        "--data-root does not apply to synthetic data".into(),
                    ));
                }
                if self.gestures.is_some() {
                    return Err(Error::Usage(
                        "--gestures does not apply to synthetic data; set classes= in --synthetic".into(),
                    ));
                }
                let spec = self.synthetic.clone().unwrap_or_default();
                let mut rng = seeding::stream_rng(spec.seed, seeding::SYNTH_DATA, 0);
                synth_gestures(&spec, &mut rng)
            }
            DatasetArg::Dhg | DatasetArg::Shrec => {
                if self.synthetic.is_some() {
                    return Err(Error::Usage(
                        "--synthetic only applies to --dataset synthetic".into(),
                    ));
                }
                let root = self.data_root.as_ref().ok_or_else(|| {
                    Error::Usage("--data-root is required for dhg and shrec".into())
                })?;
                match self.dataset {
                    DatasetArg::Dhg => load_dataset(&index_dhg(root)?, gestures, "dhg"),
                    _ => load_dataset(&index_shrec(root)?, gestures, "shrec"),
                }
            }
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = VariantArg::Dgsta)]
    variant: VariantArg,
    /// Restrict temporal attention to same-joint edges.
    #[arg(long)]
    temporal_same_joint: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Adam step size.
    #[arg(long, default_value_t = TrainOptions::default().lr)]
    lr: f64,
    /// Frames sampled per sequence (the model's T).
    #[arg(long, default_value_t = 8)]
    frames: usize,
    /// Dropout rate on attention outputs and the penultimate layer.
    #[arg(long, default_value_t = ModelConfig::default().dropout)]
    dropout: f64,
    /// Disable training-time augmentation.
    #[arg(long)]
    no_augment: bool,
    /// Cross-validation protocol; defaults to loso for dhg, fixed otherwise.
    #[arg(long, value_enum)]
    protocol: Option<ProtocolArg>,
    /// Stop a fold early once held-out accuracy reaches this level.
    #[arg(long, value_name = "ACC")]
    stop_at_acc: Option<f64>,
    /// Output directory for summary.json, fold_<k>.csv, fold_<k>.ckpt.json.
    #[arg(long, default_value = "dgsta-out")]
    out: PathBuf,
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let started = Instant::now();
    let dataset = args.data.load()?;
    let cfg = ModelConfig {
        t: args.frames,
        classes: dataset.classes,
        variant: args.variant.into(),
        temporal_same_joint_only: args.temporal_same_joint,
        dropout: args.dropout,
        ..ModelConfig::default()
    };
    cfg.validate()?;

    let protocol = args.protocol.unwrap_or(match args.data.dataset {
        DatasetArg::Dhg => ProtocolArg::Loso,
        _ => ProtocolArg::Fixed,
    });
    let folds: Vec<Option<FoldSpec>> = match protocol {
        ProtocolArg::Loso => folds_for(&dataset, Protocol::Loso)?.into_iter().map(Some).collect(),
        ProtocolArg::Fixed => {
            folds_for(&dataset, Protocol::FixedSplit)?.into_iter().map(Some).collect()
        }
        ProtocolArg::Overfit => vec![None],
    };

    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.display().to_string(),
        source,
    })?;

    let augment = if args.no_augment { AugmentConfig::disabled() } else { AugmentConfig::default() };
    let mut summaries = Vec::with_capacity(folds.len());
    for (k, fold) in folds.iter().enumerate() {
        let csv_name = format!("fold_{k}.csv");
        let ckpt_name = format!("fold_{k}.ckpt.json");
        let opts = TrainOptions {
            epochs: args.epochs,
            batch_size: args.batch_size,
            lr: args.lr,
            augment: augment.clone(),
            seed: args.seed,
            fold_id: k as u64,
            csv_path: Some(args.out.join(&csv_name)),
            checkpoint_path: Some(args.out.join(&ckpt_name)),
            stop_at_test_acc: args.stop_at_acc,
            ..TrainOptions::default()
        };
        let outcome = match fold {
            Some(spec) => run_fold(&dataset, spec, &cfg, &opts)?,
            None => run_overfit(&dataset, &cfg, &opts)?,
        };
        eprintln!(
            "fold {}: accuracy {:.4} (best epoch {}/{})",
            outcome.fold, outcome.accuracy, outcome.best_epoch, outcome.epochs_run
        );
        // Artifact paths are stored relative to --out so the summary does not
        // depend on where the run happened.
        summaries.push(FoldSummary::from_outcome(&outcome, csv_name, ckpt_name));
    }

    let summary = RunSummary {
        dataset: dataset.name.clone(),
        protocol: match protocol {
            ProtocolArg::Loso => "loso",
            ProtocolArg::Fixed => "fixed_split",
            ProtocolArg::Overfit => "overfit",
        }
        .to_string(),
        seed: args.seed,
        epochs: args.epochs,
        batch_size: args.batch_size,
        lr: args.lr,
        augmented: !args.no_augment,
        config: cfg,
        mean_accuracy: mean_accuracy(&summaries),
        folds: summaries,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        summary_path: "summary.json".to_string(),
    };
    let json = to_pretty(&summary)?;
    let path = args.out.join("summary.json");
    std::fs::write(&path, &json)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    println!("{json}");
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Args)]
struct EvalArgs {
    /// Checkpoint produced by `train`.
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Which rows to score.
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let dataset = args.data.load()?;
    let (cfg, params) = load_checkpoint(&args.checkpoint)?;
    if cfg.classes != dataset.classes {
        return Err(Error::Usage(format!(
            "checkpoint was trained for {} classes but the dataset has {}",
            cfg.classes, dataset.classes
        )));
    }
    let consts = Constants::build(&cfg)?;
    let indices: Vec<usize> = dataset
        .sequences
        .iter()
        .enumerate()
        .filter(|(_, s)| match args.split {
            SplitArg::All => true,
            SplitArg::Train => s.split == Some(Split::Train),
            SplitArg::Test => s.split == Some(Split::Test),
        })
        .map(|(i, _)| i)
        .collect();
    if indices.is_empty() && dataset.sequences.iter().all(|s| s.split.is_none()) {
        return Err(Error::Usage(
            "dataset carries no train/test split tags; use --split all".into(),
        ));
    }
    let eval = evaluate(&params, &cfg, &consts, &dataset, &indices, dgsta::data::PALM_JOINT)?;
    let report = EvalReport {
        checkpoint: args.checkpoint.display().to_string(),
        dataset: dataset.name.clone(),
        split: match args.split {
            SplitArg::Train => "train",
            SplitArg::Test => "test",
            SplitArg::All => "all",
        }
        .to_string(),
        accuracy: eval.accuracy,
        total: eval.total,
        confusion: eval.confusion,
    };
    let json = to_pretty(&report)?;
    if let Some(path) = &args.out {
        std::fs::write(path, &json)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    }
    println!("{json}");
    Ok(())
}

#[derive(Args)]
struct GradcheckArgs {
    /// Random (params, input, label) draws to test.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Corrupt this parameter group's analytic gradient (negative control).
    #[arg(long, value_name = "GROUP")]
    corrupt: Option<String>,
}

fn cmd_gradcheck(args: &GradcheckArgs) -> Result<()> {
    let report = run_gradcheck(&tiny_config(), args.seeds, args.seed, args.corrupt.as_deref())?;
    let width = report.groups.iter().map(|g| g.group.len()).max().unwrap_or(0);
    println!("{:width$}  {:>12}  status", "group", "max rel err");
    for g in &report.groups {
        println!(
            "{:width$}  {:>12.3e}  {}",
            g.group,
            g.max_rel_err,
            if g.pass { "ok" } else { "FAIL" }
        );
    }
    println!(
        "gradient check: {} (tolerance {:.0e}, {} seeds)",
        if report.pass { "PASS" } else { "FAIL" },
        report.tolerance,
        report.seeds
    );
    if report.pass {
        Ok(())
    } else {
        let failed = report.groups.iter().filter(|g| !g.pass).count();
        Err(Error::Train(format!(
            "gradient check failed: {failed} parameter group(s) over tolerance"
        )))
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Frames.
    #[arg(long, default_value_t = 8)]
    t: usize,
    /// Joints per frame.
    #[arg(long, default_value_t = 22)]
    n: usize,
    /// Per-head feature dimension.
    #[arg(long, default_value_t = 32)]
    d: usize,
    #[arg(long, default_value_t = 8)]
    heads: usize,
    /// Timed repetitions (warm-ups excluded).
    #[arg(long, default_value_t = 30)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for bench.json.
    #[arg(long, default_value = "dgsta-out")]
    out: PathBuf,
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let shape = BenchShape { t: args.t, n: args.n, d: args.d, h: args.heads };
    let report = run_bench(shape, args.reps, args.seed)?;
    std::fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.display().to_string(),
        source,
    })?;
    let json = to_pretty(&report)?;
    let path = args.out.join("bench.json");
    std::fs::write(&path, &json)
        .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
    println!("{json}");
    Ok(())
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MaskKindArg {
    Spatial,
    Temporal,
    Ssg,
    Full,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Ascii,
    Pgm,
}

#[derive(Args)]
struct MasksArgs {
    #[arg(long, value_enum, default_value_t = MaskKindArg::Spatial)]
    kind: MaskKindArg,
    /// Frames.
    #[arg(long, default_value_t = 8)]
    t: usize,
    /// Joints per frame.
    #[arg(long, default_value_t = 22)]
    n: usize,
    /// Restrict temporal edges to same-joint pairs.
    #[arg(long)]
    temporal_same_joint: bool,
    /// Bone list file for the ssg mask: one `i j` joint pair per line.
    #[arg(long)]
    bones: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Ascii)]
    format: FormatArg,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn cmd_masks(args: &MasksArgs) -> Result<()> {
    let kind = match args.kind {
        MaskKindArg::Spatial => MaskKind::Spatial,
        MaskKindArg::Temporal => MaskKind::Temporal,
        MaskKindArg::Ssg => MaskKind::Ssg,
        MaskKindArg::Full => MaskKind::Full,
    };
    let bones = match &args.bones {
        Some(path) => load_bone_list(path)?,
        None => {
            if kind == MaskKind::Ssg && args.n != DEFAULT_HAND_BONES.len() + 1 {
                return Err(Error::Usage(format!(
                    "the built-in bone list assumes n=22; pass --bones for n={}",
                    args.n
                )));
            }
            DEFAULT_HAND_BONES.to_vec()
        }
    };
    let shape = GraphShape::new(args.t, args.n)?;
    let mask = build_mask_of_kind(shape, kind, &bones, args.temporal_same_joint)?;
    let rendered = match args.format {
        FormatArg::Ascii => mask.ascii(),
        FormatArg::Pgm => mask.pgm(),
    };
    match &args.out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn to_pretty<T: serde::Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::Train(format!("JSON serialization failed: {e}")))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Masks(args) => cmd_masks(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dgsta: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
