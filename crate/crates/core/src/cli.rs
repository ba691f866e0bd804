//! The `wsd` command line: ingest, featurize, train, eval, bench, report.
//!
//! Exit codes: 0 success, 1 I/O or validation failure, 2 usage error,
//! 3 benchmark finished with failed cells.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baselines::{Metric, SgdConfig, SvmConfig, TrainConfig};
use crate::corpus::{parse_answer_key, parse_senseval2, Corpus, Split};
use crate::dbn::DbnSchedule;
use crate::eval::{micro_recall, run_benchmark, BenchConfig, BenchReport, TaskResult};
use crate::features::{FeatureConfig, FeatureSet};
use crate::model::{train_model, train_model_encoded, Algorithm, FeaturizedCorpus, ModelConfig, ModelFile};
use crate::util::sha256_hex;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BENCH_FAILED: i32 = 3;

pub const MANIFEST_FORMAT: &str = "wsd-run-manifest";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Parser, Serialize)]
#[command(name = "wsd", version, about = "Word sense disambiguation benchmark", arg_required_else_help = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Convert a lexical-sample XML file (plus optional answer key) to JSONL.
    Ingest(IngestArgs),
    /// Fit per-task vocabularies and cache the encoded training vectors.
    Featurize(FeaturizeArgs),
    /// Train one algorithm on every word task.
    Train(TrainArgs),
    /// Score a model on a test corpus.
    Eval(EvalArgs),
    /// Train and score the full algorithm x feature-set grid.
    Bench(BenchArgs),
    /// Render a saved benchmark report as a Markdown table.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub xml: PathBuf,
    /// Answer key; its senses replace any inline answers.
    #[arg(long)]
    pub key: Option<PathBuf>,
    #[arg(long, default_value = "train", value_parser = parse_split)]
    pub split: Split,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long, default_value = "all")]
    pub features: FeatureSet,
    #[arg(long, default_value_t = 7)]
    pub window: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Hyperparameters shared by `train` and `bench`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Local-feature window half-width.
    #[arg(long, default_value_t = 7)]
    pub window: usize,
    /// PCA / KPCA target dimension.
    #[arg(long, default_value_t = 30)]
    pub dim: usize,
    /// DBN hidden layer sizes, bottom first.
    #[arg(long, value_delimiter = ',', default_value = "100,100,100")]
    pub layers: Vec<usize>,
    #[arg(long, default_value_t = 25)]
    pub pretrain_epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub pretrain_lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub finetune_lr: f64,
    /// Candidate DBN finetune epoch counts, picked on a held-out tenth.
    #[arg(long, value_delimiter = ',', default_value = "10,25,50,100,200")]
    pub finetune_grid: Vec<usize>,
    /// SVM cost.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// RBF width for SVM and KPCA.
    #[arg(long, default_value_t = 3.0)]
    pub gamma: f64,
    /// Polynomial degree for SVM and KPCA.
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value_t = 20)]
    pub svm_epochs: usize,
    #[arg(long, default_value_t = 1000)]
    pub mlp_hidden: usize,
    #[arg(long, default_value_t = 0.13)]
    pub logreg_lr: f64,
    #[arg(long, default_value_t = 0.01)]
    pub mlp_lr: f64,
    /// Neighbour metric for 1-NN: euclidean or cosine.
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    pub metric: Metric,
}

impl ModelArgs {
    pub fn model_config(&self, features: FeatureSet) -> ModelConfig {
        let defaults = ModelConfig::default();
        ModelConfig {
            features: FeatureConfig { window: self.window, features, ..defaults.features },
            train: TrainConfig {
                logreg: SgdConfig { learning_rate: self.logreg_lr, ..SgdConfig::logreg() },
                mlp: SgdConfig { learning_rate: self.mlp_lr, ..SgdConfig::mlp() },
                mlp_hidden: self.mlp_hidden,
                svm: SvmConfig { c: self.c, epochs: self.svm_epochs, ..SvmConfig::default() },
                poly_degree: self.degree,
                gamma: self.gamma,
                knn_metric: self.metric,
                ..defaults.train
            }
            .with_seed(self.seed),
            dbn: DbnSchedule {
                hidden_layers: self.layers.clone(),
                pretrain_epochs: self.pretrain_epochs,
                pretrain_rate: self.pretrain_lr,
                finetune_rate: self.finetune_lr,
                finetune_grid: self.finetune_grid.clone(),
                seed: self.seed,
                ..defaults.dbn
            },
            reduction_dim: self.dim,
        }
    }
}

#[derive(Debug, Args, Serialize)]
#[command(group = clap::ArgGroup::new("input").required(true).args(["train", "featurized"]))]
pub struct TrainArgs {
    /// Training corpus (JSONL).
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Cache written by `featurize`; its feature settings take precedence.
    #[arg(long)]
    pub featurized: Option<PathBuf>,
    #[arg(long)]
    pub algo: Algorithm,
    #[arg(long, default_value = "all")]
    pub features: FeatureSet,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Test corpus (JSONL).
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub key: Option<PathBuf>,
    /// Per-task results TSV; printed to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    /// Answer key for the test corpus.
    #[arg(long)]
    pub key: Option<PathBuf>,
    /// Algorithms in row order [default: all twelve].
    #[arg(long, value_delimiter = ',')]
    pub algo: Vec<Algorithm>,
    /// Feature sets in column order [default: topical,local,pos,all].
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<FeatureSet>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write one model file per cell under `models/`.
    #[arg(long)]
    pub save_models: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// `report.json` written by `bench`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_split(s: &str) -> Result<Split, String> {
    match s {
        "train" => Ok(Split::Train),
        "test" => Ok(Split::Test),
        "dev" => Ok(Split::Dev),
        other => Err(format!("unknown split '{other}'")),
    }
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    match s {
        "euclidean" => Ok(Metric::Euclidean),
        "cosine" => Ok(Metric::Cosine),
        other => Err(format!("unknown metric '{other}'")),
    }
}

/// Provenance written next to every artifact; its `args` replay the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format: String,
    pub version: u32,
    pub command: String,
    pub args: Vec<String>,
    /// Every flag after defaults were applied.
    pub resolved: serde_json::Value,
    pub seed: Option<u64>,
    /// sha256 of each input file, keyed by the path as given.
    pub inputs: BTreeMap<String, String>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub timestamp_unix: u64,
}

impl RunManifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let m: RunManifest = serde_json::from_reader(BufReader::new(File::open(path).map_err(|e| io_err(path, e))?))?;
        if m.format != MANIFEST_FORMAT || m.version != MANIFEST_VERSION {
            return Err(CliError::Invalid(format!("unsupported manifest {} version {}", m.format, m.version)));
        }
        Ok(m)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Eval(#[from] crate::eval::EvalError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_err(path, e))?))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let mut f = create(path)?;
    f.write_all(bytes).and_then(|()| f.flush()).map_err(|e| io_err(path, e))
}

fn load_corpus(path: &Path, split: Split, key: Option<&Path>) -> Result<Corpus, CliError> {
    let mut corpus = Corpus::load_jsonl(BufReader::new(File::open(path).map_err(|e| io_err(path, e))?), split)?;
    if let Some(key) = key {
        corpus.apply_answer_key(&parse_answer_key(&read_text(key)?)?);
    }
    Ok(corpus)
}

struct Context<'a> {
    argv: &'a [String],
    cli: &'a Cli,
    inputs: BTreeMap<String, String>,
}

impl Context<'_> {
    fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    fn manifest(&self, command: &str, seed: Option<u64>, outputs: &[&Path], at: &Path) -> Result<(), CliError> {
        let m = RunManifest {
            format: MANIFEST_FORMAT.to_string(),
            version: MANIFEST_VERSION,
            command: command.to_string(),
            args: self.argv.to_vec(),
            resolved: serde_json::to_value(self.cli)?,
            seed,
            inputs: self.inputs.clone(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp_unix: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        write_file(at, serde_json::to_string_pretty(&m)?.as_bytes())
    }
}

/// `<artifact>.manifest.json` next to a single-file artifact.
pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

fn task_table(results: &[TaskResult], overall: f64) -> String {
    let mut out = String::from("task\tn_test\tn_correct\trecall\n");
    for r in results {
        out.push_str(&format!("{}\t{}\t{}\t{:.6}\n", r.task_id, r.n_test, r.n_correct, r.recall()));
    }
    let n: usize = results.iter().map(|r| r.n_test).sum();
    let c: usize = results.iter().map(|r| r.n_correct).sum();
    out.push_str(&format!("ALL\t{n}\t{c}\t{overall:.6}\n"));
    out
}

fn execute(ctx: &mut Context) -> Result<i32, CliError> {
    match &ctx.cli.command {
        Command::Ingest(a) => {
            ctx.input(&a.xml)?;
            let mut corpus = Corpus::new(parse_senseval2(&read_text(&a.xml)?)?, a.split)?;
            if let Some(key) = &a.key {
                ctx.input(key)?;
                corpus.apply_answer_key(&parse_answer_key(&read_text(key)?)?);
            }
            let mut out = create(&a.out)?;
            corpus.save_jsonl(&mut out)?;
            out.flush().map_err(|e| io_err(&a.out, e))?;
            ctx.manifest("ingest", None, &[&a.out], &manifest_path(&a.out))?;
            eprintln!("{} instances, {} tasks", corpus.len(), corpus.task_ids().len());
        }
        Command::Featurize(a) => {
            ctx.input(&a.train)?;
            let corpus = load_corpus(&a.train, Split::Train, None)?;
            let config = FeatureConfig { window: a.window, features: a.features, ..FeatureConfig::default() };
            let cache = FeaturizedCorpus::build(&corpus, config)?;
            let mut out = create(&a.out)?;
            cache.write(&mut out)?;
            out.flush().map_err(|e| io_err(&a.out, e))?;
            ctx.manifest("featurize", None, &[&a.out], &manifest_path(&a.out))?;
        }
        Command::Train(a) => {
            let config = a.model.model_config(a.features);
            let model = if let Some(path) = &a.featurized {
                ctx.input(path)?;
                let cache = FeaturizedCorpus::read(BufReader::new(File::open(path).map_err(|e| io_err(path, e))?))?;
                train_model_encoded(a.algo, &cache, &config, a.model.seed)?
            } else {
                let path = a.train.as_ref().expect("clap enforces one input");
                ctx.input(path)?;
                train_model(a.algo, &load_corpus(path, Split::Train, None)?, &config, a.model.seed)?
            };
            let mut out = create(&a.out)?;
            model.write(&mut out)?;
            out.flush().map_err(|e| io_err(&a.out, e))?;
            ctx.manifest("train", Some(a.model.seed), &[&a.out], &manifest_path(&a.out))?;
        }
        Command::Eval(a) => {
            ctx.input(&a.model)?;
            ctx.input(&a.test)?;
            let model = ModelFile::read(BufReader::new(File::open(&a.model).map_err(|e| io_err(&a.model, e))?))?;
            if let Some(key) = &a.key {
                ctx.input(key)?;
            }
            let test = load_corpus(&a.test, Split::Test, a.key.as_deref())?;
            let mut predictions = std::collections::HashMap::new();
            for inst in &test.instances {
                predictions.insert(inst.instance_id.clone(), model.predict(inst)?.to_string());
            }
            let (overall, results) = micro_recall(&predictions, &test.instances)?;
            let table = task_table(&results, overall);
            match &a.out {
                Some(path) => {
                    write_file(path, table.as_bytes())?;
                    ctx.manifest("eval", Some(model.seed), &[path], &manifest_path(path))?;
                    println!("micro_recall\t{overall:.6}");
                }
                None => print!("{table}"),
            }
        }
        Command::Bench(a) => return bench(ctx, a),
        Command::Report(a) => {
            ctx.input(&a.report)?;
            let report = BenchReport::from_json(&read_text(&a.report)?).map_err(CliError::Invalid)?;
            let md = report.to_markdown();
            match &a.out {
                Some(path) => {
                    write_file(path, md.as_bytes())?;
                    ctx.manifest("report", Some(report.seed), &[path], &manifest_path(path))?;
                }
                None => print!("{md}"),
            }
        }
    }
    Ok(EXIT_OK)
}

fn bench(ctx: &mut Context, a: &BenchArgs) -> Result<i32, CliError> {
    ctx.input(&a.train)?;
    ctx.input(&a.test)?;
    if let Some(key) = &a.key {
        ctx.input(key)?;
    }
    let train = load_corpus(&a.train, Split::Train, None)?;
    let test = load_corpus(&a.test, Split::Test, a.key.as_deref())?;
    let algorithms = if a.algo.is_empty() { Algorithm::ALL.to_vec() } else { a.algo.clone() };
    let feature_sets = if a.features.is_empty() { FeatureSet::ALL_SETS.to_vec() } else { a.features.clone() };
    let config = BenchConfig { model: a.model.model_config(FeatureSet::All), seed: a.model.seed, keep_models: a.save_models };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Invalid(e.to_string()))?;
    let report = pool.install(|| run_benchmark(&train, &test, &algorithms, &feature_sets, &config));

    let dir = &a.out_dir;
    let tsv = dir.join("report.tsv");
    let md = dir.join("report.md");
    let json = dir.join("report.json");
    write_file(&tsv, report.to_tsv().as_bytes())?;
    write_file(&md, report.to_markdown().as_bytes())?;
    write_file(&json, report.to_json()?.as_bytes())?;
    let mut outputs = vec![tsv, md, json];
    if a.save_models {
        for cell in &report.cells {
            if let Some(model) = &cell.model {
                let path = dir.join("models").join(format!("{}__{}.json", cell.algorithm, cell.feature_set));
                let mut out = create(&path)?;
                model.write(&mut out)?;
                out.flush().map_err(|e| io_err(&path, e))?;
                outputs.push(path);
            }
        }
    }
    let refs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    ctx.manifest("bench", Some(a.model.seed), &refs, &dir.join("manifest.json"))?;

    print!("{}", report.to_markdown());
    for cell in report.cells.iter().filter(|c| c.n_tasks_failed > 0) {
        for t in cell.tasks.iter().filter(|t| t.error.is_some()) {
            eprintln!(
                "{} / {}: task {} failed: {}",
                cell.algorithm,
                cell.feature_set,
                t.result.task_id,
                t.error.as_deref().unwrap_or_default()
            );
        }
    }
    Ok(if report.failed_cells() > 0 { EXIT_BENCH_FAILED } else { EXIT_OK })
}

/// Runs the tool on `argv` (without the program name) and returns the exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(std::iter::once("wsd".to_string()).chain(argv.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut ctx = Context { argv, cli: &cli, inputs: BTreeMap::new() };
    match execute(&mut ctx) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn default_flags_match_library_defaults() {
        let cli = Cli::try_parse_from(["wsd", "train", "--train", "x", "--algo", "dbn", "--out", "m"]).unwrap();
        let Command::Train(a) = cli.command else { panic!() };
        assert_eq!(a.model.model_config(FeatureSet::All), ModelConfig::default());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(&[]), EXIT_USAGE);
        assert_eq!(run(&["frobnicate".into()]), EXIT_USAGE);
        assert_eq!(run(&["bench".into(), "--nope".into()]), EXIT_USAGE);
        assert_eq!(run(&["--help".into()]), EXIT_OK);
    }

    #[test]
    fn manifest_sits_next_to_artifact() {
        assert_eq!(manifest_path(Path::new("out/model.json")), Path::new("out/model.json.manifest.json"));
    }
}
