//! `movac`: train, evaluate, run AOLS on a value set, export plot data.

mod export;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use movac_core::autodiff::CheckpointError;
use movac_core::geometry::{aols, lookup_evaluator, GeometryError, UndominatedSet, ValueVector};
use movac_core::trainer::{self, EnvConfig, TrainConfig, TrainError, CHECKPOINT_FILE};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_CHECKPOINT: u8 = 4;

#[derive(Parser)]
#[command(name = "movac", version, about = "Multi-objective actor-critic with vector value functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train from a run config; writes metrics.csv, checkpoint.mvac and summary.json.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides [run] seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Rollout threads; 0 collects on the main thread.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory (default: runs/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Continue from the checkpoint already in the output directory.
        #[arg(long)]
        resume: bool,
    },
    /// Evaluate a checkpoint's deterministic policy.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Run config describing the environment.
        #[arg(long, conflicts_with = "env")]
        config: Option<PathBuf>,
        /// Built-in environment with default settings.
        #[arg(long)]
        env: Option<String>,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Radar-chart JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the undominated set of a JSON list of value vectors.
    Aols {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Undominated-set JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract plot-ready columns from a run's metrics.
    Export {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum)]
        what: export::Kind,
        /// Output CSV (default: <run>/<what>.csv).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<TrainError> for Failure {
    fn from(e: TrainError) -> Self {
        let code = match e {
            TrainError::Config(_) => EXIT_USAGE,
            TrainError::Checkpoint(_) => EXIT_CHECKPOINT,
            _ => EXIT_NUMERIC,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<CheckpointError> for Failure {
    fn from(e: CheckpointError) -> Self {
        Self { code: EXIT_CHECKPOINT, message: e.to_string() }
    }
}

/// Validated training setup.
struct RunConfig {
    train: TrainConfig,
    out_dir: PathBuf,
}

impl RunConfig {
    fn load(path: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>) -> Result<Self, Failure> {
        let mut train = TrainConfig::from_path(path).map_err(|e| Failure::usage(e.to_string()))?;
        if let Some(s) = seed {
            train.seed = s;
        }
        if let Some(w) = workers {
            train.workers = w;
        }
        train.validate().map_err(|(s, k, m)| Failure::usage(format!("{}: {s}.{k}: {m}", path.display())))?;
        let out_dir = out.unwrap_or_else(|| Path::new("runs").join(&train.name));
        fs::create_dir_all(&out_dir)
            .map_err(|e| Failure::usage(format!("cannot create output directory {}: {e}", out_dir.display())))?;
        Ok(Self { train, out_dir })
    }
}

fn cmd_train(config: &Path, seed: Option<u64>, workers: Option<usize>, out: Option<PathBuf>, resume: bool) -> Result<(), Failure> {
    let run = RunConfig::load(config, seed, workers, out)?;
    let summary = trainer::train(&run.train, &run.out_dir, resume).map_err(|e| {
        let mut f = Failure::from(e);
        if f.code == EXIT_NUMERIC {
            f.message = format!("{} (last good checkpoint: {})", f.message, run.out_dir.join(CHECKPOINT_FILE).display());
        }
        f
    })?;
    println!(
        "{} batches, {} -> {}",
        summary.batches,
        if summary.converged { "converged" } else { "budget exhausted" },
        run.out_dir.display()
    );
    Ok(())
}

fn cmd_eval(
    checkpoint: &Path,
    config: Option<&Path>,
    env: Option<&str>,
    episodes: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let (env_cfg, gamma) = match (config, env) {
        (Some(p), _) => {
            let c = TrainConfig::from_path(p).map_err(|e| Failure::usage(e.to_string()))?;
            (c.env, c.gamma)
        }
        (None, Some(name)) => {
            let e = EnvConfig::by_name(name).ok_or_else(|| {
                Failure::usage(format!("unknown environment {name:?}; expected treasure-grid, point-mass-1d or linear-quad"))
            })?;
            (e, 0.99)
        }
        (None, None) => return Err(Failure::usage("eval needs --config or --env")),
    };
    if episodes == 0 {
        return Err(Failure::usage("--episodes must be at least 1"));
    }
    let ckpt = trainer::load_checkpoint(checkpoint)?;
    let table = trainer::evaluate_checkpoint(&ckpt, &env_cfg, episodes, gamma, seed)?;
    print!("{}", table.render());
    if let Some(path) = out {
        let raw: Vec<[f64; 2]> = table.mean.iter().zip(&table.std).map(|(m, s)| [*m, *s]).collect();
        let doc = serde_json::json!({ "objectives": table.objectives, "values": table.normalized, "raw": raw });
        write_text(path, &(serde_json::to_string_pretty(&doc).expect("json values") + "\n"))?;
    }
    Ok(())
}

fn cmd_aols(input: &Path, eps: f64, max_iters: usize, out: Option<&Path>) -> Result<(), Failure> {
    let text = fs::read_to_string(input).map_err(|e| Failure::usage(format!("cannot read {}: {e}", input.display())))?;
    let raw: Vec<Vec<f64>> =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: expected a list of vectors: {e}", input.display())))?;
    let dim = raw.first().map(Vec::len).ok_or_else(|| Failure::usage("the value set is empty"))?;
    if raw.iter().any(|v| v.len() != dim || v.iter().any(|x| !x.is_finite())) {
        return Err(Failure::usage("all vectors need the same length and finite entries"));
    }
    let candidates: Vec<ValueVector<f64>> = raw.into_iter().map(ValueVector::new).collect();
    let geometry = |e: GeometryError| Failure::usage(e.to_string());
    if dim == 1 {
        // a single objective has no interior weights: the set is its best vector
        let us = UndominatedSet::from_values(candidates).map_err(geometry)?;
        report(us.values(), &[vec![1.0]], 0.0);
        return match out {
            Some(p) => write_text(p, &(us.to_json() + "\n")),
            None => Ok(()),
        };
    }
    let res = aols(dim, lookup_evaluator(&candidates), eps, max_iters).map_err(geometry)?;
    let weights: Vec<Vec<f64>> = res.marginal_weights.iter().map(|w| w.to_f64()).collect();
    report(res.us.values(), &weights, res.delta_max);
    if res.timed_out {
        log::warn!("stopped after {max_iters} evaluations");
    }
    if let Some(p) = out {
        write_text(p, &(res.us.to_json() + "\n"))?;
    }
    Ok(())
}

fn report<'a>(members: impl Iterator<Item = &'a ValueVector<f64>>, weights: &[Vec<f64>], delta_max: f64) {
    println!("members:");
    for v in members {
        println!("  {:?}", v.as_slice());
    }
    println!("marginal weights:");
    for w in weights {
        println!("  {w:?}");
    }
    println!("delta_max: {delta_max}");
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure { code: EXIT_NUMERIC, message: format!("cannot write {}: {e}", path.display()) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MOVAC_LOG", "info")).format_timestamp(None).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, seed, workers, out, resume } => cmd_train(&config, seed, workers, out, resume),
        Command::Eval { checkpoint, config, env, episodes, seed, out } => {
            cmd_eval(&checkpoint, config.as_deref(), env.as_deref(), episodes, seed, out.as_deref())
        }
        Command::Aols { input, eps, max_iters, out } => cmd_aols(&input, eps, max_iters, out.as_deref()),
        Command::Export { run, what, out } => export::run(&run, what, out.as_deref()).map_err(Failure::usage),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
