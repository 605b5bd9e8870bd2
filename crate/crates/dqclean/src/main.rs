use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dqclean::analysis::{self, BootstrapOptions};
use dqclean::core::aggregate::AggregationMode;
use dqclean::core::data::Metric;
use dqclean::core::protocol::{Rounding, Verdict};
use dqclean::core::rank::NoiseType;
use dqclean::core::stats::{self, Alternative, PermutationMode, DEFAULT_PERMUTATION_DRAWS};
use dqclean::error::{Error, Result};
use dqclean::simulate::{simulate, Script, SimulationOptions};
use dqclean::store::{NewSession, RegisterDataset, SessionDefaults, Store};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "dqclean", version, about = "Ranking-guided dataset cleaning")]
struct Cli {
    /// Directory holding datasets, rankings and session logs.
    #[arg(long, env = "DQCLEAN_DATA_DIR", default_value = "dqclean-data", global = true)]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Floor,
    Ceil,
}

impl From<RoundingArg> for Rounding {
    fn from(r: RoundingArg) -> Self {
        match r {
            RoundingArg::Floor => Rounding::Floor,
            RoundingArg::Ceil => Rounding::Ceil,
        }
    }
}

#[derive(Args, Clone, Copy)]
struct StopArgs {
    #[arg(long)]
    p_plus: Option<f64>,
    #[arg(long)]
    p_chance: Option<f64>,
    #[arg(long, value_enum)]
    rounding: Option<RoundingArg>,
}

#[derive(Args, Clone, Copy)]
struct BootstrapArgs {
    #[arg(long, default_value_t = BootstrapOptions::default().reps)]
    reps: usize,
    /// Confidence level in percent.
    #[arg(long, default_value_t = BootstrapOptions::default().level)]
    level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl From<BootstrapArgs> for BootstrapOptions {
    fn from(a: BootstrapArgs) -> Self {
        BootstrapOptions { reps: a.reps, level: a.level, seed: a.seed }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Register a dataset from a JSONL manifest.
    Ingest {
        #[arg(long)]
        name: String,
        #[arg(long)]
        manifest: PathBuf,
        /// SCEM or CSV embeddings; omit to use the pixel baseline.
        #[arg(long, conflicts_with = "side")]
        embeddings: Option<PathBuf>,
        /// Baseline embedder side length.
        #[arg(long)]
        side: Option<u32>,
        #[arg(long)]
        image_dir: Option<PathBuf>,
    },
    /// Compute candidate rankings.
    Rank {
        #[arg(long)]
        dataset: String,
        /// Noise type; all three when omitted.
        #[arg(long)]
        noise_type: Option<NoiseType>,
        #[arg(long, default_value = "cosine")]
        metric: Metric,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[command(flatten)]
        stop: StopArgs,
    },
    /// Run a scripted annotator through one session.
    SimulateAnnotator {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        noise_type: NoiseType,
        #[arg(long)]
        annotator: String,
        /// File listing true issues, one candidate per line.
        #[arg(long, required_unless_present = "verdicts", conflicts_with = "verdicts")]
        truth: Option<PathBuf>,
        /// Comma-separated y/n answers in order.
        #[arg(long)]
        verdicts: Option<String>,
        /// Answer given once `--verdicts` runs out.
        #[arg(long, default_value = "no", value_parser = parse_verdict)]
        fallback: Verdict,
        #[arg(long)]
        max_answers: Option<usize>,
        #[arg(long)]
        session_id: Option<String>,
        #[arg(long)]
        delay_ms: Option<u64>,
        #[command(flatten)]
        stop: StopArgs,
    },
    /// Combine annotator verdicts per noise type.
    Aggregate {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "majority")]
        mode: AggregationMode,
    },
    /// Write the cleaned sample list.
    Clean {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "majority")]
        mode: AggregationMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Recount a session under other stopping parameters.
    Sensitivity {
        #[arg(long)]
        session: String,
        /// `p_chance:p_plus` pairs, comma separated.
        #[arg(long)]
        grid: Option<String>,
    },
    /// Compare a detector before and after cleaning.
    Evaluate {
        #[arg(long)]
        dataset: String,
        /// CSV with `id,score,label`.
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value = "majority")]
        mode: AggregationMode,
        #[arg(long)]
        clean_seed: Option<u64>,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
    },
    /// Full dataset summary.
    Report {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "majority")]
        mode: AggregationMode,
        #[arg(long, default_value_t = 0)]
        clean_seed: u64,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// Pairwise kappa and alpha per noise type.
    Agreement {
        #[arg(long)]
        dataset: String,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
    },
    /// One-sided paired sign-flip test on differences.
    Permutation {
        /// File of differences separated by whitespace or commas.
        #[arg(long)]
        differences: PathBuf,
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = DEFAULT_PERMUTATION_DRAWS)]
        draws: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Annotation speed-up over reviewing the whole pool.
    SpeedUp {
        #[arg(long, conflicts_with_all = ["pool", "annotated"])]
        session: Option<String>,
        #[arg(long, requires = "annotated")]
        pool: Option<u64>,
        #[arg(long, requires = "pool")]
        annotated: Option<u64>,
    },
}

#[derive(Serialize)]
struct SpeedUpView {
    pool: u64,
    annotated: u64,
    factor: f64,
    fraction_annotated: f64,
}

fn print<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::InvalidRequest(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn parse_verdict(s: &str) -> std::result::Result<Verdict, String> {
    s.parse().map_err(|()| format!("expected yes or no, got `{s}`"))
}

fn defaults(stop: &StopArgs) -> SessionDefaults {
    let d = SessionDefaults::default();
    SessionDefaults {
        p_plus: stop.p_plus.unwrap_or(d.p_plus),
        p_chance: stop.p_chance.unwrap_or(d.p_chance),
        rounding: stop.rounding.map_or(d.rounding, Into::into),
    }
}

fn read_numbers(path: &std::path::Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| Error::InvalidRequest(format!("`{t}` is not a number"))))
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let open = |d: SessionDefaults| Store::open(&cli.data_dir, d);
    match cli.command {
        Command::Ingest { name, manifest, embeddings, side, image_dir } => {
            let store = open(SessionDefaults::default())?;
            print(&store.register_dataset(&RegisterDataset {
                name,
                manifest,
                embeddings,
                baseline: side,
                image_dir,
            })?)
        }
        Command::Rank { dataset, noise_type, metric } => {
            let store = open(SessionDefaults::default())?;
            let types = noise_type.map_or(NoiseType::ALL.to_vec(), |t| vec![t]);
            let out = types.into_iter().map(|t| store.rank(&dataset, t, metric)).collect::<Result<Vec<_>>>()?;
            print(&out)
        }
        Command::Serve { host, port, stop } => {
            let store = Arc::new(open(defaults(&stop))?);
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io(&cli.data_dir, e))?;
            rt.block_on(dqclean::service::serve(store, SocketAddr::new(host, port)))
                .map_err(|e| Error::io(format!("{host}:{port}"), e))
        }
        Command::SimulateAnnotator {
            dataset,
            noise_type,
            annotator,
            truth,
            verdicts,
            fallback,
            max_answers,
            session_id,
            delay_ms,
            stop,
        } => {
            let store = open(SessionDefaults::default())?;
            let script = match (truth, verdicts) {
                (Some(path), _) => Script::truth_file(&path)?,
                (None, Some(v)) => Script::sequence(&v, fallback)?,
                (None, None) => return Err(Error::InvalidRequest("need --truth or --verdicts".into())),
            };
            let req = NewSession {
                dataset,
                noise_type,
                annotator,
                p_plus: stop.p_plus,
                p_chance: stop.p_chance,
                rounding: stop.rounding.map(Into::into),
                session_id,
            };
            let opts = SimulationOptions { max_answers, delay: delay_ms.map(Duration::from_millis) };
            print(&simulate(&store, &req, &script, &opts)?)
        }
        Command::Aggregate { dataset, mode } => {
            let store = open(SessionDefaults::default())?;
            print(&analysis::aggregate_dataset(&store, &dataset, mode)?)
        }
        Command::Clean { dataset, mode, seed } => {
            let store = open(SessionDefaults::default())?;
            print(&analysis::clean(&store, &dataset, mode, seed)?)
        }
        Command::Stats(StatsCommand::Agreement { dataset, bootstrap }) => {
            let store = open(SessionDefaults::default())?;
            print(&analysis::agreement(&store, &dataset, bootstrap.into())?)
        }
        Command::Stats(StatsCommand::Permutation { differences, exhaustive, draws, seed }) => {
            let diffs = read_numbers(&differences)?;
            let mode = if exhaustive { PermutationMode::Exhaustive } else { PermutationMode::Auto { draws, seed } };
            print(&stats::paired_permutation_test(&diffs, Alternative::Greater, mode)?)
        }
        Command::Stats(StatsCommand::SpeedUp { session, pool, annotated }) => {
            let (pool, annotated) = match (session, pool, annotated) {
                (Some(id), _, _) => {
                    let store = open(SessionDefaults::default())?;
                    let view = store.status(&id)?;
                    (view.pool_size, view.annotated_count as u64)
                }
                (None, Some(p), Some(a)) => (p, a),
                _ => return Err(Error::InvalidRequest("need --session or --pool with --annotated".into())),
            };
            let s = stats::speed_up(pool, annotated)?;
            print(&SpeedUpView { pool, annotated, factor: s.factor(), fraction_annotated: s.fraction_annotated() })
        }
        Command::Sensitivity { session, grid } => {
            let store = open(SessionDefaults::default())?;
            let grid = grid.as_deref().map(analysis::parse_grid).transpose()?;
            print(&analysis::sensitivity(&store, &session, grid.as_deref())?)
        }
        Command::Evaluate { dataset, scores, mode, clean_seed, bootstrap } => {
            let store = open(SessionDefaults::default())?;
            let clean_seed = clean_seed.unwrap_or(bootstrap.seed);
            print(&analysis::evaluate(&store, &dataset, &scores, mode, clean_seed, bootstrap.into())?)
        }
        Command::Report { dataset, mode, clean_seed, bootstrap } => {
            let store = open(SessionDefaults::default())?;
            print(&analysis::report(&store, &dataset, mode, clean_seed, bootstrap.into())?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
