//! `superseg` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 bad input. Failures print a
//! one-line JSON object `{"error": <code>, "message": <text>}` on stderr.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use superseg::config::PipelineConfig;
use superseg::evalkit::{average_precision, EvalError, DEFAULT_TAU_BERT};
use superseg::output::{read_ground_truth, read_instances};
use superseg::pcio::{layout, load_embedding_table, validate_dataset, Dataset, PcioError};
use superseg::pipeline::{
    ablation_csv, ablation_sweep, run_segment, write_segment_output, AblationParam, PipelineError,
};
use superseg::semantics::{query, Instance3D, SemanticsError};
use superseg::superpoint::read_superpoint_cache;
use superseg::synth::{generate_scene, preset, read_scene_spec, write_scene, SynthError};

#[derive(Parser)]
#[command(name = "superseg", version, about = "Superpoint-based 3D instance segmentation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a dataset directory into labeled instances.
    Segment(SegmentArgs),
    /// Score predicted instances against ground truth.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Check a dataset directory and report every problem found.
    Validate(ValidateArgs),
    /// Rank segmented instances by similarity to a label.
    Query(QueryArgs),
    /// Sweep one threshold and record AP per value.
    Ablate(AblateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON config file; missing keys keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set superpoint.kf=0.1`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<PipelineConfig, CliError> {
        let base = match &self.config {
            Some(p) => PipelineConfig::load(p).map_err(PipelineError::from)?,
            None => PipelineConfig::default(),
        };
        Ok(base.with_overrides(&self.overrides).map_err(PipelineError::from)?)
    }
}

#[derive(Args)]
struct SegmentArgs {
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// Restrict labels to this list (one per line) instead of the scene
    /// vocabulary.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Reuse a superpoint partition written by an earlier `--debug` run.
    #[arg(long)]
    superpoints: Option<PathBuf>,
    /// Also write superpoints, overlaps and the affinity matrix.
    #[arg(long)]
    debug: bool,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Embedding table used for label matching.
    #[arg(long)]
    table: PathBuf,
    /// JSON object mapping labels to category groups.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TAU_BERT)]
    tau_bert: f64,
    /// Write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write per-class AP as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Built-in scene: boxes3, planes2, cluttered8 or perf.
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    preset: Option<String>,
    /// Scene description in JSON.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Override the seed of the scene.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ValidateArgs {
    dataset: PathBuf,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct QueryArgs {
    /// Instances file written by `segment`.
    #[arg(long)]
    instances: PathBuf,
    #[arg(long)]
    table: PathBuf,
    /// Label whose embedding is the query.
    #[arg(long)]
    label: String,
    #[arg(long, default_value_t = 5)]
    top_k: usize,
}

#[derive(Args)]
struct AblateArgs {
    dataset: PathBuf,
    /// tau_iou or tau_sim.
    #[arg(long)]
    param: String,
    /// Comma-separated values in [0, 1).
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Ground truth (default: gt_instances.json in the dataset).
    #[arg(long)]
    gt: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Debug)]
struct CliError {
    code: String,
    message: String,
    exit: u8,
}

impl CliError {
    fn input(code: &str, message: impl Display) -> Self {
        Self {
            code: code.to_string(),
            message: message.to_string(),
            exit: 2,
        }
    }

    fn runtime(code: &str, message: impl Display) -> Self {
        Self {
            code: code.to_string(),
            message: message.to_string(),
            exit: 1,
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        Self {
            code: e.code().to_string(),
            message: e.to_string(),
            exit: e.exit_code() as u8,
        }
    }
}

impl From<PcioError> for CliError {
    fn from(e: PcioError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<SemanticsError> for CliError {
    fn from(e: SemanticsError) -> Self {
        PipelineError::from(e).into()
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io(e) => e.into(),
            e => CliError::input(e.code(), e),
        }
    }
}

fn read_vocab(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input("Io", format!("{}: {e}", path.display())))?;
    let labels: Vec<String> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect();
    if labels.is_empty() {
        return Err(CliError::input("EmptyVocabulary", format!("{} lists no labels", path.display())));
    }
    Ok(labels)
}

fn segment(args: SegmentArgs) -> Result<(), CliError> {
    let config = args.config.load()?;
    let dataset = Dataset::load(&args.dataset)?;
    let vocab = args.vocab.as_deref().map(read_vocab).transpose()?;
    let sps = match &args.superpoints {
        Some(p) => Some(
            read_superpoint_cache(p, &dataset.cloud).map_err(PipelineError::from)?,
        ),
        None => None,
    };
    let out = run_segment(&dataset, &config, vocab.as_deref(), sps)?;
    write_segment_output(&out, dataset.cloud.len(), &args.out, args.debug)?;

    println!("points       {}", dataset.cloud.len());
    println!("frames       {}", dataset.frames.len());
    println!("superpoints  {}", out.superpoints.len());
    println!("instances    {}", out.instances.len());
    if out.degenerate_normals > 0 {
        println!("degenerate normals {}", out.degenerate_normals);
    }
    for t in &out.timings {
        println!("time {:<12} {:.3}s", t.stage, t.seconds);
    }
    println!("time {:<12} {:.3}s", "total", out.total_time().as_secs_f64());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<(), CliError> {
    let table = load_embedding_table(&args.table)?;
    let preds = read_instances(&args.pred)?.predictions();
    let gts = read_ground_truth(&args.gt)?;
    let groups: Option<BTreeMap<String, String>> = match &args.groups {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::input("Io", format!("{}: {e}", p.display())))?;
            Some(serde_json::from_str(&text).map_err(|e| CliError::input("Json", format!("{}: {e}", p.display())))?)
        }
        None => None,
    };
    let report = average_precision(&preds, &gts, &table, args.tau_bert, groups.as_ref())?;
    println!("{report}");
    if let Some(p) = &args.json {
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(p, text + "\n").map_err(|e| CliError::runtime("Io", format!("{}: {e}", p.display())))?;
    }
    if let Some(p) = &args.csv {
        std::fs::write(p, report.per_class_csv()).map_err(|e| CliError::runtime("Io", format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let mut spec = match (&args.preset, &args.spec) {
        (Some(name), _) => preset(name)?,
        (None, Some(p)) => read_scene_spec(p)?,
        (None, None) => unreachable!("clap requires one of --preset/--spec"),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let scene = generate_scene(&spec)?;
    write_scene(&scene, &args.out)?;
    for w in &scene.warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "wrote {} points, {} frames, {} objects to {}",
        scene.cloud.len(),
        scene.frames.len(),
        scene.ground_truth.len(),
        args.out.display()
    );
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<u8, CliError> {
    let report = validate_dataset(&args.dataset);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        println!("{report}");
    }
    Ok(report.exit_code() as u8)
}

fn query_cmd(args: QueryArgs) -> Result<(), CliError> {
    let table = load_embedding_table(&args.table)?;
    let file = read_instances(&args.instances)?;
    let q = table
        .get(&args.label)
        .ok_or_else(|| CliError::input("UnknownLabel", format!("label {:?} is not in the embedding table", args.label)))?;
    let instances: Vec<Instance3D> = file.to_instances();
    if let Some(bad) = instances
        .iter()
        .find(|i| !i.embedding.is_empty() && i.embedding.len() != table.dim())
    {
        return Err(CliError::input(
            "DimMismatch",
            format!("instance {} has dimension {}, table has {}", bad.id, bad.embedding.len(), table.dim()),
        ));
    }
    let padded: Vec<Instance3D> = instances
        .into_iter()
        .map(|mut i| {
            if i.embedding.is_empty() {
                i.embedding = vec![0.0; table.dim()];
            }
            i
        })
        .collect();
    let by_id: BTreeMap<usize, &Instance3D> = padded.iter().map(|i| (i.id, i)).collect();
    for (id, score) in query(&padded, q, args.top_k)? {
        let inst = by_id[&id];
        println!("{id:>5}  {score:>8.4}  {:<16} {} points", inst.label, inst.point_indices.len());
    }
    Ok(())
}

fn ablate(args: AblateArgs) -> Result<(), CliError> {
    let param: AblationParam = args.param.parse().map_err(PipelineError::from)?;
    if args.values.is_empty() {
        return Err(CliError::input("EmptyValues", "no ablation values given"));
    }
    let config = args.config.load()?;
    let dataset = Dataset::load(&args.dataset)?;
    let gt_path = args
        .gt
        .clone()
        .unwrap_or_else(|| args.dataset.join(layout::GROUND_TRUTH));
    let gts = read_ground_truth(&gt_path)?;
    let rows = ablation_sweep(&dataset, &gts, &config, param, &args.values)?;
    let csv = ablation_csv(&rows);
    std::fs::write(&args.out, &csv).map_err(|e| CliError::runtime("Io", format!("{}: {e}", args.out.display())))?;
    print!("{csv}");
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::input("InvalidParameter", "--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::runtime("ThreadPool", e))?;
    }
    match cli.command {
        Command::Segment(a) => segment(a).map(|_| 0),
        Command::Eval(a) => eval(a).map(|_| 0),
        Command::Synth(a) => synth(a).map(|_| 0),
        Command::Validate(a) => validate(a),
        Command::Query(a) => query_cmd(a).map(|_| 0),
        Command::Ablate(a) => ablate(a).map(|_| 0),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code, "message": e.message }));
            ExitCode::from(e.exit)
        }
    }
}
