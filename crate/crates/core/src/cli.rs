//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 runtime or output error.

use std::ffi::OsString;
use std::fmt;
use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::eval::{run_loocv, EvalError, EvalReport, FitScope};
use crate::features::FeatureKey;
use crate::ingest::{
    fetch_playtype_stats, generate_synthetic_dataset, parse_dataset_csv, serialize_dataset_csv, Dataset, FetchError,
    IngestError, RetryPolicy, SyntheticSpec,
};
use crate::io::write_atomic;
use crate::model::{
    load_model, model_to_json, parse_hidden_shape, search_mlp_architecture, ModelError, ModelSpec, SearchEntry,
    TrainConfig, TrainedPredictor,
};
use crate::optimize::{plan_document, sensitivity_rank, OptimizeConfig, OptimizeError, SensitivityReport};
use crate::service;
use crate::transform::DEFAULT_COMPONENTS;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unusable input; exit code 1.
    User(String),
    /// Failure while computing or writing results; exit code 2.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::User(m) | CliError::Internal(m) => f.write_str(m),
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::User(e.to_string())
    }
}

impl From<FetchError> for CliError {
    fn from(e: FetchError) -> Self {
        match e {
            FetchError::Argument(_) | FetchError::Translation(_) => CliError::User(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Argument(_) | ModelError::Version { .. } | ModelError::Parse(_) | ModelError::Transform(_) => {
                CliError::User(e.to_string())
            }
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Argument(_) => CliError::User(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<OptimizeError> for CliError {
    fn from(e: OptimizeError) -> Self {
        CliError::User(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "ortg-lab", version, about = "Model team offensive rating from playtype profiles")]
pub struct Cli {
    /// Worker threads for cross-validation folds and optimizer restarts
    /// (default: all cores). Results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic dataset with a planted linear rule.
    Synth(SynthArgs),
    /// Download playtype and team statistics and write the dataset CSV.
    Fetch(FetchArgs),
    /// Fit a predictor on a dataset and save the model file.
    Train(TrainArgs),
    /// Leave-one-out cross-validation report.
    Evaluate(EvaluateArgs),
    /// Rank MLP hidden-layer shapes by cross-validated error.
    Search(SearchArgs),
    /// Search the feasible region for the highest predicted ORTG.
    Optimize(OptimizeArgs),
    /// Run the HTTP API.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: u64,
    /// Number of rows.
    #[arg(short = 'n', long = "rows", default_value_t = 240)]
    pub rows: usize,
    /// Output CSV.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    /// Target noise standard deviation, in ORTG points.
    #[arg(long, default_value_t = 2.0)]
    pub sigma: f64,
}

#[derive(Args, Debug)]
pub struct FetchArgs {
    /// Season label such as 2022-23; repeat for several seasons.
    #[arg(long, required = true)]
    pub season: Vec<String>,
    /// Base URL of the statistics service.
    #[arg(long)]
    pub endpoint: String,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
    /// Retries per request after a transient failure.
    #[arg(long, default_value_t = 3)]
    pub retries: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Linear,
    Mlp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Global,
    PerFold,
}

impl From<ScopeArg> for FitScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Global => FitScope::Global,
            ScopeArg::PerFold => FitScope::PerFold,
        }
    }
}

/// Optional training hyperparameters shared by train, evaluate and search.
#[derive(Args, Debug, Clone)]
pub struct TrainingFlags {
    /// Independent MLP initializations.
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 2000)]
    pub max_epochs: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
}

impl TrainingFlags {
    fn config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            seed,
            restarts: self.restarts,
            max_epochs: self.max_epochs,
            learning_rate: self.learning_rate,
            ..TrainConfig::default()
        }
    }
}

#[derive(Args, Debug)]
pub struct ModelFlags {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Hidden layer widths for the MLP, e.g. 3 or 4,2.
    #[arg(long, default_value = "3")]
    pub shape: String,
    /// PCA components.
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl ModelFlags {
    fn spec(&self) -> Result<ModelSpec, CliError> {
        match self.model {
            Some(ModelKind::Linear) => Ok(ModelSpec::Linear),
            Some(ModelKind::Mlp) => Ok(ModelSpec::Mlp { hidden: parse_hidden_shape(&self.shape)? }),
            None => Err(CliError::User("--model linear|mlp is required".into())),
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub training: TrainingFlags,
    /// Output model file.
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[command(flatten)]
    pub model: ModelFlags,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long, value_enum, default_value_t = ScopeArg::Global)]
    pub fit_scope: ScopeArg,
    /// Take model kind, shape, k, seed and training settings from a model file.
    #[arg(long, value_name = "MODEL_FILE", conflicts_with = "model")]
    pub from_model: Option<PathBuf>,
    /// Report file (.json, or .csv for the predicted-vs-actual table only).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Candidate hidden shapes separated by `;`, e.g. "1;3;5;8;4,2".
    #[arg(long, default_value = "1;2;3;4;5;8;4,2")]
    pub shapes: String,
    #[arg(long, default_value_t = DEFAULT_COMPONENTS)]
    pub k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub training: TrainingFlags,
    #[arg(long, value_enum, default_value_t = ScopeArg::Global)]
    pub fit_scope: ScopeArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Widen the observed bounds by this fraction of each range.
    #[arg(long, default_value_t = 0.0)]
    pub margin: f64,
    /// Hold a feature fixed, as name=value; repeatable.
    #[arg(long = "lock", value_name = "KEY=VALUE")]
    pub lock: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub restarts: usize,
    /// Gameplan JSON output.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the sensitivity report (.json or .csv).
    #[arg(long, value_name = "FILE")]
    pub sensitivity: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Listen port (else $ORTG_LAB_PORT, else 8080).
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
    pub host: IpAddr,
    /// Allow cross-origin requests from this origin (`*` for any).
    #[arg(long)]
    pub allow_origin: Option<String>,
    /// Directory of UI assets to serve at `/`.
    #[arg(long = "static", value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
}

/// A report to write with [`emit_report`].
pub enum Report<'a> {
    Eval(&'a EvalReport),
    /// A rendered gameplan document.
    Gameplan(&'a str),
    Sensitivity(&'a SensitivityReport),
    Search(&'a str),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// `.csv` means CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    write_atomic(path, contents.as_bytes()).map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))
}

/// Write `report` to `path`; returns every file written. An evaluation
/// report in JSON also gets a sibling `predicted_vs_actual.csv`.
pub fn emit_report(report: Report<'_>, path: &Path, format: Format) -> Result<Vec<PathBuf>, CliError> {
    let mut written = vec![path.to_path_buf()];
    match (report, format) {
        (Report::Eval(r), Format::Json) => {
            let sibling = path.with_file_name("predicted_vs_actual.csv");
            if sibling == path {
                return Err(CliError::User("report path collides with predicted_vs_actual.csv".into()));
            }
            write_file(path, &r.to_json())?;
            write_file(&sibling, &r.predicted_vs_actual_csv())?;
            written.push(sibling);
        }
        (Report::Eval(r), Format::Csv) => write_file(path, &r.predicted_vs_actual_csv())?,
        (Report::Sensitivity(r), Format::Json) => write_file(path, &r.to_json())?,
        (Report::Sensitivity(r), Format::Csv) => write_file(path, &r.to_csv())?,
        (Report::Gameplan(doc) | Report::Search(doc), Format::Json) => write_file(path, doc)?,
        (Report::Gameplan(_) | Report::Search(_), Format::Csv) => {
            return Err(CliError::User("this report is only available as JSON".into()))
        }
    }
    Ok(written)
}

fn read_dataset(path: &Path) -> Result<Dataset, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::User(format!("cannot open {}: {e}", path.display())))?;
    parse_dataset_csv(std::io::BufReader::new(file)).map_err(|e| CliError::User(format!("{}: {e}", path.display())))
}

fn read_model(path: &Path) -> Result<TrainedPredictor, CliError> {
    load_model(path).map_err(|e| match e {
        ModelError::Io(io) => CliError::User(format!("cannot read {}: {io}", path.display())),
        other => CliError::User(format!("{}: {other}", path.display())),
    })
}

pub fn parse_lock(s: &str) -> Result<(FeatureKey, f64), CliError> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| CliError::User(format!("--lock expects KEY=VALUE, got {s:?}")))?;
    let key = name.trim().parse::<FeatureKey>().map_err(|e| CliError::User(e.to_string()))?;
    let value = value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| CliError::User(format!("--lock {name}: {value:?} is not a number")))?;
    Ok((key, value))
}

fn synth(a: &SynthArgs) -> Result<(), CliError> {
    if !(a.sigma.is_finite() && a.sigma >= 0.0) {
        return Err(CliError::User(format!("--sigma must be nonnegative, got {}", a.sigma)));
    }
    let spec = SyntheticSpec { sigma: a.sigma, ..SyntheticSpec::default() };
    let (data, _) = generate_synthetic_dataset(a.seed, a.rows, &spec)?;
    write_file(&a.out, &serialize_dataset_csv(&data))?;
    println!("wrote {} rows to {}", data.len(), a.out.display());
    Ok(())
}

fn fetch(a: &FetchArgs) -> Result<(), CliError> {
    let policy = RetryPolicy { retries: a.retries, ..RetryPolicy::default() };
    let mut rows = Vec::new();
    for season in &a.season {
        let bytes = fetch_playtype_stats(&a.endpoint, season, &policy)?;
        rows.extend(parse_dataset_csv(bytes.as_slice())?.rows().iter().cloned());
    }
    let data = Dataset::new(rows)?;
    write_file(&a.out, &serialize_dataset_csv(&data))?;
    println!("wrote {} rows to {}", data.len(), a.out.display());
    Ok(())
}

fn train(a: &TrainArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.data)?;
    let spec = a.model.spec()?;
    let p = TrainedPredictor::fit(&data, &spec, a.model.k, &a.training.config(a.model.seed))?;
    write_file(&a.out, &model_to_json(&p))?;
    println!(
        "trained {spec} on {} rows (k={}), training loss {:.6e}; wrote {}",
        data.len(),
        a.model.k,
        p.metadata().final_loss,
        a.out.display()
    );
    Ok(())
}

fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.data)?;
    let (spec, k, cfg) = match &a.from_model {
        Some(path) => {
            let p = read_model(path)?;
            (p.spec(), p.pipeline().n_components(), p.metadata().train_config.clone())
        }
        None => (a.model.spec()?, a.model.k, a.training.config(a.model.seed)),
    };
    let report = run_loocv(&data, &spec, k, &cfg, a.fit_scope.into())?;
    let written = emit_report(Report::Eval(&report), &a.out, Format::from_path(&a.out))?;
    println!(
        "{spec} k={k} {}: rmse_normalized {:.6} rmse_ortg {:.4} r_squared {:.4}",
        report.fit_scope, report.rmse_normalized, report.rmse_ortg, report.r_squared
    );
    for w in written {
        println!("wrote {}", w.display());
    }
    Ok(())
}

fn search_document(entries: &[SearchEntry], k: usize, cfg: &TrainConfig, scope: FitScope) -> String {
    let mut s = serde_json::to_string_pretty(&json!({
        "k": k,
        "seed": cfg.seed,
        "fit_scope": scope.as_str(),
        "ranking": entries,
    }))
    .expect("search report serializes");
    s.push('\n');
    s
}

fn search(a: &SearchArgs) -> Result<(), CliError> {
    let data = read_dataset(&a.data)?;
    let shapes = a
        .shapes
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(parse_hidden_shape)
        .collect::<Result<Vec<_>, _>>()?;
    let cfg = a.training.config(a.seed);
    let scope: FitScope = a.fit_scope.into();
    let ranked = search_mlp_architecture(&data, &shapes, a.k, &cfg, scope)?;
    emit_report(Report::Search(&search_document(&ranked, a.k, &cfg, scope)), &a.out, Format::Json)?;
    for (i, e) in ranked.iter().enumerate() {
        println!("{:>2}. {:?} rmse_ortg {:.4} r_squared {:.4}", i + 1, e.hidden, e.rmse_ortg, e.r_squared);
    }
    Ok(())
}

fn optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let p = read_model(&a.model)?;
    let data = read_dataset(&a.data)?;
    let locks = a.lock.iter().map(|s| parse_lock(s)).collect::<Result<Vec<_>, _>>()?;
    let cfg = OptimizeConfig { seed: a.seed, restarts: a.restarts, ..OptimizeConfig::default() };
    let (candidate, doc) = plan_document(&p, &data, a.margin, &locks, &cfg)?;
    emit_report(Report::Gameplan(&doc), &a.out, Format::Json)?;
    println!("predicted ORTG {:.3}; wrote {}", candidate.predicted_ortg, a.out.display());
    if let Some(path) = &a.sensitivity {
        let report = sensitivity_rank(&p, &data)?;
        emit_report(Report::Sensitivity(&report), path, Format::from_path(path))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    let env = std::env::var(service::PORT_ENV).ok();
    let port = service::resolve_port(a.port, env.as_deref()).map_err(CliError::User)?;
    let p = read_model(&a.model)?;
    let data = read_dataset(&a.data)?;
    let state = service::AppState::new(p, data, a.static_dir.clone())?;
    let app = service::router(state, a.allow_origin.as_deref()).map_err(CliError::User)?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    runtime
        .block_on(service::serve(app, SocketAddr::new(a.host, port)))
        .map_err(|e| CliError::Internal(format!("server error: {e}")))
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let work = || match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Fetch(a) => fetch(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Search(a) => search(a),
        Command::Optimize(a) => optimize(a),
        Command::Serve(a) => serve(a),
    };
    match cli.threads {
        Some(0) => Err(CliError::User("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Internal(e.to_string()))?
            .install(work),
        None => work(),
    }
}

/// Parse `args` (program name first), run the command, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
