//! Command-line front end.
//!
//! Exit codes: 0 success, 1 problem with the dataset or arguments,
//! 2 environment failure (unreadable files, busy port).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mleval_core::explore::{Direction, SortKey};
use mleval_core::{apply_threshold, Comparison};

use crate::api::{self, ServerConfig, DEFAULT_UPLOAD_LIMIT};
use crate::error::IngestError;
use crate::export::{metrics_csv, tuple_confusion_csv};
use crate::format::format_run_draft;
use crate::ingest::{load_dataset, load_scored_run, LoadOptions};
use crate::report::{self, canonical_json};
use crate::store::LoadedDataset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_ENV: i32 = 2;

pub const DATA_ROOT_ENV: &str = "MLMC_DATA_ROOT";

#[derive(Debug, Parser)]
#[command(
    name = "mleval",
    version,
    about = "Evaluate multi-label classifiers against a ground truth"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a dataset directory and print the validation report.
    Validate {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Per-label metrics, run summaries and the similarity matrix.
    Metrics {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// id, gt-frequency, total-f1 or f1:<run>.
        #[arg(long, default_value = "id")]
        sort: SortKey,
        #[arg(long, default_value = "asc")]
        direction: Direction,
    },
    /// Turn a scored run into a hard prediction file.
    Threshold {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        run: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tuple confusion matrix of one run.
    Confusion {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        run: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run the HTTP server.
    Serve {
        /// Dataset to preload.
        #[arg(long, env = DATA_ROOT_ENV)]
        dataset: Option<PathBuf>,
        #[arg(long, env = "MLEVAL_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Directory for uploaded datasets, reloaded on start. A temporary
        /// directory is used when absent.
        #[arg(long, env = "MLEVAL_STORE")]
        store: Option<PathBuf>,
        /// Upload size cap in bytes.
        #[arg(long, env = "MLEVAL_UPLOAD_LIMIT", default_value_t = DEFAULT_UPLOAD_LIMIT)]
        upload_limit: usize,
        /// Dashboard bundle served at `/`.
        #[arg(long)]
        static_dir: Option<PathBuf>,
        #[command(flatten)]
        scoring: ScoringArgs,
    },
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long, env = DATA_ROOT_ENV)]
    pub dataset: PathBuf,
    #[command(flatten)]
    pub scoring: ScoringArgs,
}

#[derive(Debug, Args)]
pub struct ScoringArgs {
    /// Threshold applied to scored runs, in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Assign labels whose score equals the threshold.
    #[arg(long)]
    pub gte: bool,
}

impl ScoringArgs {
    fn options(&self) -> Result<LoadOptions, String> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(format!("threshold {} is outside [0, 1]", self.threshold));
        }
        Ok(LoadOptions {
            threshold: self.threshold,
            comparison: if self.gte {
                Comparison::GreaterOrEqual
            } else {
                Comparison::Greater
            },
        })
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Command failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn domain(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: message.into(),
        }
    }

    fn env(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_ENV,
            message: message.into(),
        }
    }
}

impl From<IngestError> for Failure {
    fn from(e: IngestError) -> Self {
        let code = if e.is_io() { EXIT_ENV } else { EXIT_DOMAIN };
        let message = match &e {
            IngestError::Invalid(report) => canonical_json(report),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::env(format!("cannot write `{}`: {e}", p.display()))),
        None => out
            .write_all(text.as_bytes())
            .map_err(|e| Failure::env(format!("cannot write output: {e}"))),
    }
}

fn load(data: &DataArgs) -> Result<LoadedDataset, Failure> {
    let options = data.scoring.options().map_err(Failure::domain)?;
    if !data.dataset.is_dir() {
        return Err(Failure::env(format!(
            "dataset directory `{}` does not exist",
            data.dataset.display()
        )));
    }
    Ok(load_dataset(&data.dataset, &options)?)
}

fn validate(data: &DataArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let options = data.scoring.options().map_err(Failure::domain)?;
    let (code, report) = match load_dataset(&data.dataset, &options) {
        Ok(loaded) => (EXIT_OK, loaded.report),
        Err(e) => (
            if e.is_io() { EXIT_ENV } else { EXIT_DOMAIN },
            e.to_report(),
        ),
    };
    emit(out, None, &(canonical_json(&report) + "\n"))?;
    Ok(code)
}

fn metrics(
    data: &DataArgs,
    output: &OutputArgs,
    sort: &SortKey,
    direction: Direction,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let loaded = load(data)?;
    let report = report::metrics_report(&loaded, sort, direction)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let text = match output.format {
        Format::Json => canonical_json(&report) + "\n",
        Format::Csv => metrics_csv(&report),
    };
    emit(out, output.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn threshold(
    data: &DataArgs,
    run: &str,
    path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let options = data.scoring.options().map_err(Failure::domain)?;
    let (registry, scored) = load_scored_run(&data.dataset, run)?;
    let hard = apply_threshold(&scored, &registry, options.threshold, options.comparison)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let header = format!(
        "threshold={} comparison={} run={}",
        options.threshold,
        options.comparison.as_str(),
        run
    );
    emit(
        out,
        path,
        &format_run_draft(&hard, &registry, Some(&header)),
    )?;
    Ok(EXIT_OK)
}

fn confusion(
    data: &DataArgs,
    run: &str,
    path: Option<&Path>,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    let loaded = load(data)?;
    let m = report::tuple_confusion(&loaded.dataset, run)
        .map_err(|e| Failure::domain(e.to_string()))?;
    let text = match format {
        Format::Csv => tuple_confusion_csv(&loaded.dataset, &m),
        Format::Json => canonical_json(&report::tuple_confusion_body(&loaded.dataset, &m)) + "\n",
    };
    emit(out, path, &text)?;
    Ok(EXIT_OK)
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}

struct ServeArgs<'a> {
    dataset: Option<&'a Path>,
    listen: SocketAddr,
    store: Option<&'a Path>,
    upload_limit: usize,
    static_dir: Option<&'a Path>,
    scoring: &'a ScoringArgs,
}

fn serve(args: ServeArgs<'_>, out: &mut dyn Write) -> Result<i32, Failure> {
    let load = args.scoring.options().map_err(Failure::domain)?;
    let preload = match args.dataset {
        Some(dir) => Some(load_dataset(dir, &load)?),
        None => None,
    };
    let scratch;
    let store_dir = match args.store {
        Some(dir) => dir.to_path_buf(),
        None => {
            scratch = tempfile::tempdir().map_err(|e| Failure::env(e.to_string()))?;
            scratch.path().to_path_buf()
        }
    };
    let mut config = ServerConfig::new(store_dir);
    config.max_upload_bytes = args.upload_limit;
    config.static_dir = args.static_dir.map(Path::to_path_buf);
    config.load = load;

    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::env(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .map_err(|e| Failure::env(format!("cannot listen on {}: {e}", args.listen)))?;
        let addr = listener
            .local_addr()
            .map_err(|e| Failure::env(e.to_string()))?;
        let state = api::session(config, preload);
        writeln!(out, "listening on http://{addr}")
            .and_then(|_| out.flush())
            .ok();
        api::serve(state, listener, shutdown_signal())
            .await
            .map_err(|e| Failure::env(e.to_string()))?;
        Ok(EXIT_OK)
    })
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match &cli.command {
        Command::Validate { data } => validate(data, out),
        Command::Metrics {
            data,
            output,
            sort,
            direction,
        } => metrics(data, output, sort, *direction, out),
        Command::Threshold {
            data,
            run,
            out: path,
        } => threshold(data, run, path.as_deref(), out),
        Command::Confusion {
            data,
            run,
            out: path,
            format,
        } => confusion(data, run, path.as_deref(), *format, out),
        Command::Serve {
            dataset,
            listen,
            store,
            upload_limit,
            static_dir,
            scoring,
        } => serve(
            ServeArgs {
                dataset: dataset.as_deref(),
                listen: *listen,
                store: store.as_deref(),
                upload_limit: *upload_limit,
                static_dir: static_dir.as_deref(),
                scoring,
            },
            out,
        ),
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = write!(out, "{}", e.render());
                return EXIT_OK;
            }
            let _ = write!(err, "{}", e.render());
            return EXIT_DOMAIN;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

pub fn main() -> i32 {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
