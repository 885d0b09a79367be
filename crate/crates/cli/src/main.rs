use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chardiff::discovery::{run_pipeline, shortlist_attributes, DiscoveryConfig};
use chardiff::frame::Frame;
use chardiff::report::{shortlist_json, shortlist_markdown, Report, RunMetadata};
use chardiff::snapshot::{align, load_snapshot, load_type_hints, LoadOptions};
use chardiff::{Error, ErrorClass};
use chardiff_service::ServiceConfig;

/// Explain how a numeric attribute changed between two snapshots of a table.
#[derive(Parser)]
#[command(name = "chardiff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank change summaries for one attribute.
    Diff(DiffArgs),
    /// Rank attributes by association with the change.
    Shortlist(InputArgs),
    /// Start the HTTP API.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Markdown,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    source: PathBuf,
    #[arg(long)]
    target: PathBuf,
    /// Primary key attribute.
    #[arg(long)]
    key: String,
    /// Numeric attribute to explain.
    #[arg(long)]
    attr: String,
    /// JSON file mapping attribute names to categorical, numeric or key.
    #[arg(long)]
    type_hints: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    #[arg(long, value_enum, default_value_t = Format::Markdown)]
    format: Format,
}

#[derive(Args)]
struct DiffArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 3)]
    max_cond: usize,
    #[arg(long, default_value_t = 2)]
    max_tran: usize,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 4)]
    k_max: usize,
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Condition attribute pool; defaults to the top shortlist entries.
    #[arg(long, value_delimiter = ',')]
    cond_attrs: Option<Vec<String>>,
    /// Transformation attribute pool; defaults to the top shortlist entries.
    #[arg(long, value_delimiter = ',')]
    tran_attrs: Option<Vec<String>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; output does not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "CHARDIFF_BIND", default_value = "127.0.0.1:8080")]
    bind: SocketAddr,
    #[arg(long, env = "CHARDIFF_MAX_UPLOAD_BYTES", default_value_t = 16 * 1024 * 1024)]
    max_upload_bytes: usize,
    #[arg(long, env = "CHARDIFF_CANDIDATE_BUDGET", default_value_t = 10_000)]
    candidate_budget: u128,
    #[arg(long, env = "CHARDIFF_PERSIST_DIR")]
    persist_dir: Option<PathBuf>,
    /// Allow any origin (local UI development).
    #[arg(long, env = "CHARDIFF_CORS")]
    cors: bool,
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Input => 2,
        ErrorClass::Schema => 3,
        ErrorClass::Config => 4,
    }
}

fn load(input: &InputArgs) -> Result<Frame, Error> {
    let mut opts = LoadOptions::new(input.key.clone());
    if let Some(path) = &input.type_hints {
        opts = opts.with_hints(load_type_hints(path)?);
    }
    let source = load_snapshot(&input.source, &opts)?;
    let target = load_snapshot(&input.target, &opts)?;
    let pair = align(&source, &target, &input.key)?;
    Ok(Frame::new(&pair, &input.attr)?)
}

fn diff(args: &DiffArgs) -> Result<String, Error> {
    let input = &args.input;
    let frame = load(input)?;
    let mut config = DiscoveryConfig::new(input.attr.clone())
        .with_limits(args.max_cond, args.max_tran)
        .with_alpha(args.alpha)
        .with_k_max(args.k_max)
        .with_top_n(args.top)
        .with_seed(args.seed);
    config.correlation_threshold = input.threshold;
    config.threads = args.threads;

    let shortlist = shortlist_attributes(&frame, input.threshold)?;
    let (cond, tran) = shortlist.default_pools(args.max_cond, args.max_tran);
    config.cond_pool = args.cond_attrs.clone().unwrap_or(cond);
    config.tran_pool = args.tran_attrs.clone().unwrap_or(tran);
    for a in shortlist.condition.iter().chain(&shortlist.transformation) {
        let chosen = config.cond_pool.contains(&a.attribute) || config.tran_pool.contains(&a.attribute);
        if chosen && a.below_threshold {
            log::warn!(
                "`{}` association {:.3} is at or below the threshold {}",
                a.attribute,
                a.association,
                input.threshold
            );
        }
    }

    let ranked = run_pipeline(&frame, &config)?;
    for s in &ranked.skipped {
        log::warn!(
            "skipped C={:?} T={:?} k={}: {}",
            s.candidate.condition_attributes,
            s.candidate.transformation_attributes,
            s.candidate.k,
            s.message
        );
    }
    let report = Report {
        metadata: RunMetadata::new(
            &frame,
            input.source.display().to_string(),
            input.target.display().to_string(),
        ),
        ranked,
    };
    Ok(match input.format {
        Format::Json => report.to_json(),
        Format::Markdown => report.to_markdown(),
    })
}

fn shortlist(input: &InputArgs) -> Result<String, Error> {
    let frame = load(input)?;
    let s = shortlist_attributes(&frame, input.threshold)?;
    Ok(match input.format {
        Format::Json => shortlist_json(&s),
        Format::Markdown => shortlist_markdown(&s),
    })
}

fn serve(args: &ServeArgs) -> ExitCode {
    let config = ServiceConfig {
        bind: args.bind,
        max_upload_bytes: args.max_upload_bytes,
        candidate_budget: args.candidate_budget,
        persist_dir: args.persist_dir.clone(),
        permissive_cors: args.cors,
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match runtime.block_on(chardiff_service::serve(config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHARDIFF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Diff(args) => diff(args),
        Command::Shortlist(args) => shortlist(args),
        Command::Serve(args) => return serve(args),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::FAILURE;
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::from(exit_code(e.class()))
        }
    }
}
