//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for bad input (arguments, files, netlists,
//! mismatched model and data), 2 when an internal invariant fails.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bondgraph::{to_bond_graph, BondGraphError};
use crate::datagen::{generate_split, load_dataset, save_dataset, DatagenError, Dataset, Suite};
use crate::experiments::{format_results, run_set, ExperimentError};
use crate::featurize::{FeatureConfig, FeatureError};
use crate::gcn::{train, Checkpoint, GcnError, TrainConfig};
use crate::metrics::{embeddings_csv, embeddings_svg, evaluate, format_table, metrics_csv};
use crate::netlist::{parse_netlist, validate, Mode};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<DatagenError> for CliError {
    fn from(e: DatagenError) -> Self {
        match e {
            DatagenError::Netlist(_) | DatagenError::BondGraph(_) | DatagenError::Feature(FeatureError::DivisionByZero(_)) => {
                CliError::Internal(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<GcnError> for CliError {
    fn from(e: GcnError) -> Self {
        match e {
            GcnError::NonFinite => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::NoSuchSet(_) => CliError::Input(e.to_string()),
            ExperimentError::Data(d) => d.into(),
            ExperimentError::Training(g) => g.into(),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Settings shared by every subcommand; command-line flags override the
/// values read from `--config`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub suite: Suite,
    pub per_class: usize,
    pub seed: u64,
    pub train_fraction: f64,
    /// Defaults to the suite's own configuration when absent.
    pub feature_config: Option<FeatureConfig>,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            suite: Suite::Continuous,
            per_class: 857,
            seed: 0,
            train_fraction: 0.7,
            feature_config: None,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn feature_config(&self) -> FeatureConfig {
        self.feature_config.unwrap_or_else(|| self.suite.default_feature_config())
    }
}

#[derive(Debug, Parser)]
#[command(name = "circuit-graph", version, about = "Circuit bond graphs and a GCN circuit classifier")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration; explicit flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// continuous7 or switching6.
    #[arg(long, global = true)]
    pub suite: Option<Suite>,
    #[arg(long, global = true)]
    pub per_class: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub hidden: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a netlist to its bond graph.
    Convert {
        netlist: PathBuf,
        /// Override the netlist's `.mode` directive (cont, ccm or dcm).
        #[arg(long)]
        mode: Option<Mode>,
        /// Write the JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a dataset as DIR/train.jsonl and DIR/test.jsonl.
    Gen {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on DIR/train.jsonl, tracking DIR/test.jsonl.
    Train {
        #[arg(long)]
        data: PathBuf,
        /// Checkpoint path; the training history goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint on DIR/test.jsonl.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Directory for report.json and metrics.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Project the test set's readouts to 2-D.
    Embed {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Directory for embeddings.csv and embeddings.svg.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one of the four feature-representation experiment sets.
    Experiments {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        set: u8,
        /// Also write the results as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_run_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            serde_json::from_str(&text).map_err(|e| io_error(path, e))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.suite {
        cfg.suite = s;
    }
    if let Some(n) = common.per_class {
        cfg.per_class = n;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
        cfg.train.seed = s;
    }
    if let Some(e) = common.epochs {
        cfg.train.epochs = e;
    }
    if let Some(lr) = common.lr {
        cfg.train.learning_rate = lr;
    }
    if let Some(h) = common.hidden {
        cfg.train.hidden = h;
    }
    cfg.train.validate()?;
    Ok(cfg)
}

fn distinct_paths(paths: &[&Path]) -> Result<(), CliError> {
    for (i, a) in paths.iter().enumerate() {
        if paths[i + 1..].contains(a) {
            return Err(CliError::Input(format!("path {} is used for two different roles", a.display())));
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn load_split(dir: &Path, name: &str) -> Result<Dataset, CliError> {
    Ok(load_dataset(&dir.join(name))?)
}

fn load_checkpoint(path: &Path, data: &Dataset) -> Result<Checkpoint, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| io_error(path, e))?;
    if ck.feature_config_fingerprint != data.feature_config.fingerprint() {
        return Err(CliError::Input(format!(
            "model was trained with feature configuration {} but the data uses {}",
            ck.feature_config_fingerprint,
            data.feature_config.fingerprint()
        )));
    }
    Ok(ck)
}

fn history_path(model: &Path) -> PathBuf {
    model.with_extension("history.json")
}

fn convert(netlist: &Path, mode: Option<Mode>, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let text = fs::read_to_string(netlist).map_err(|e| io_error(netlist, e))?;
    let mut circuit = parse_netlist(&text).map_err(|e| CliError::Input(format!("{}: {e}", netlist.display())))?;
    if let Some(m) = mode {
        circuit.mode = m;
    }
    let violations = validate(&circuit);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
        return Err(CliError::Input(format!("{}: invalid circuit\n{}", netlist.display(), list.join("\n"))));
    }
    let graph = to_bond_graph(&circuit).map_err(|e| match e {
        BondGraphError::InvalidCircuit(_) | BondGraphError::UnsupportedDcmCell(_) => CliError::Input(e.to_string()),
        other => CliError::Internal(other.to_string()),
    })?;
    let json = to_json(&graph)?;
    let emit = |w: &mut dyn Write, bytes: &[u8]| w.write_all(bytes).map_err(|e| CliError::Internal(e.to_string()));
    match out {
        Some(path) => write_file(path, &json)?,
        None => emit(stdout, &json)?,
    }
    emit(stdout, graph.summary().as_bytes())
}

fn gen(cfg: &RunConfig, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let features = cfg.feature_config();
    let (train_set, test_set) = generate_split(&cfg.suite.templates(), cfg.per_class, cfg.seed, &features, cfg.train_fraction)?;
    create_dir(out)?;
    save_dataset(&train_set, &out.join("train.jsonl"))?;
    save_dataset(&test_set, &out.join("test.jsonl"))?;
    writeln!(
        stdout,
        "{} suite: {} train / {} test samples, {} classes -> {}",
        cfg.suite,
        train_set.len(),
        test_set.len(),
        train_set.class_count(),
        out.display()
    )
    .map_err(|e| CliError::Internal(e.to_string()))
}

fn train_cmd(cfg: &RunConfig, data: &Path, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    let hist = history_path(out);
    distinct_paths(&[data, out, &hist])?;
    let train_set = load_split(data, "train.jsonl")?;
    let test_set = load_split(data, "test.jsonl")?;
    if train_set.feature_config != test_set.feature_config || train_set.normalization != test_set.normalization {
        return Err(CliError::Input("train.jsonl and test.jsonl were not generated together".into()));
    }
    let (model, history) = train(&train_set.samples, &test_set.samples, cfg.seed, &cfg.train)?;
    let ck = Checkpoint::from_model(&model, cfg.seed, train_set.feature_config.fingerprint());
    write_file(out, &to_json(&ck)?)?;
    write_file(&hist, &to_json(&history)?)?;
    let last = history.last().expect("validated epochs >= 1");
    writeln!(
        stdout,
        "{} epochs: train loss {:.5}, train accuracy {:.4}, test accuracy {:.4}",
        history.epochs.len(),
        last.train_loss,
        last.train_accuracy,
        last.test_accuracy
    )
    .map_err(|e| CliError::Internal(e.to_string()))
}

fn eval_cmd(data: &Path, model: &Path, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    distinct_paths(&[data, model, out])?;
    let test_set = load_split(data, "test.jsonl")?;
    let ck = load_checkpoint(model, &test_set)?;
    let report = evaluate(&ck.to_model::<f64>()?, &test_set.samples)?;
    create_dir(out)?;
    write_file(&out.join("report.json"), &to_json(&report)?)?;
    write_file(&out.join("metrics.csv"), metrics_csv(&report, &test_set.class_names).as_bytes())?;
    stdout.write_all(format_table(&report, &test_set.class_names).as_bytes()).map_err(|e| CliError::Internal(e.to_string()))
}

fn embed_cmd(data: &Path, model: &Path, out: &Path, stdout: &mut dyn Write) -> Result<(), CliError> {
    distinct_paths(&[data, model, out])?;
    let test_set = load_split(data, "test.jsonl")?;
    let ck = load_checkpoint(model, &test_set)?;
    let report = evaluate(&ck.to_model::<f64>()?, &test_set.samples)?;
    create_dir(out)?;
    write_file(&out.join("embeddings.csv"), embeddings_csv(&report.embeddings).as_bytes())?;
    write_file(&out.join("embeddings.svg"), embeddings_svg(&report.embeddings, &test_set.class_names).as_bytes())?;
    if report.embedding_degenerate {
        writeln!(stdout, "warning: all readouts coincide; every point is at the origin")
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    writeln!(stdout, "{} points -> {}", report.embeddings.len(), out.display()).map_err(|e| CliError::Internal(e.to_string()))
}

fn experiments_cmd(cfg: &RunConfig, set: u8, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let results = run_set(set, cfg.per_class, cfg.seed, &cfg.train)?;
    if let Some(path) = out {
        write_file(path, &to_json(&results)?)?;
    }
    stdout.write_all(format_results(&results).as_bytes()).map_err(|e| CliError::Internal(e.to_string()))
}

/// Executes a parsed command line.
pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = load_run_config(&cli.common)?;
    match &cli.command {
        Command::Convert { netlist, mode, out } => convert(netlist, *mode, out.as_deref(), stdout),
        Command::Gen { out } => gen(&cfg, out, stdout),
        Command::Train { data, out } => train_cmd(&cfg, data, out, stdout),
        Command::Eval { data, model, out } => eval_cmd(data, model, out, stdout),
        Command::Embed { data, model, out } => embed_cmd(data, model, out, stdout),
        Command::Experiments { set, out } => experiments_cmd(&cfg, *set, out.as_deref(), stdout),
    }
}

/// Parses `args`, runs the command and maps the outcome to an exit code.
pub fn run<I, S>(args: I) -> ExitCode
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
