use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use isle::commands::{cmd_benchmark, cmd_importance, cmd_predict, cmd_simulate, cmd_train, SimulateConfig, TrainConfig};
use isle::config::KeyValues;
use isle::{CliError, Result};

#[derive(Parser)]
#[command(name = "isle", version, about = "Tree and rule ensembles with post-processing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key (repeatable); applied last.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated dataset and its ground-truth sidecar.
    Simulate {
        #[arg(long)]
        generator: Option<String>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit an ensemble and a post-processor, writing a model bundle.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        method: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Predict a CSV with a model bundle.
    Predict {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Learner and variable importance report of a bundle.
    Importance {
        #[arg(long)]
        bundle: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        shared_credit: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark experiment (presets: ex2, ex3, boston, csv).
    Benchmark {
        #[arg(long)]
        experiment: Option<String>,
        #[arg(long)]
        replications: Option<usize>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

/// File keys, then flag keys, then `--set` overrides.
fn resolve(common: &Common, flags: Vec<(&str, Option<String>)>) -> Result<KeyValues> {
    let mut kv = match &common.config {
        Some(p) => KeyValues::load(p)?,
        None => KeyValues::default(),
    };
    if let Some(s) = common.seed {
        kv.set("seed", s.to_string());
    }
    for (k, v) in flags {
        if let Some(v) = v {
            kv.set(k, v);
        }
    }
    kv.apply_overrides(&common.sets)?;
    Ok(kv)
}

fn path(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.display().to_string())
}

fn set_threads(common: &Common) -> Result<()> {
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { generator, n, output, common } => {
            set_threads(&common)?;
            let kv = resolve(&common, vec![("generator", generator), ("n", n.map(|n| n.to_string())), ("output", path(output))])?;
            let c = SimulateConfig::from_keys(&kv)?;
            cmd_simulate(&c)?;
            println!("wrote {} and {}", c.output.display(), c.truth.display());
        }
        Command::Train { data, target, method, output, common } => {
            set_threads(&common)?;
            let kv = resolve(&common, vec![("data", path(data)), ("target", target), ("method", method), ("output", path(output))])?;
            let c = TrainConfig::from_keys(&kv)?;
            let b = cmd_train(&c)?;
            let score = b.cv.trace[b.cv.best_index].mean_corr;
            println!("{}: selected {:?} (cv score {score:.4}); wrote {}", b.method, b.cv.best, c.output.display());
        }
        Command::Predict { bundle, data, output, common } => {
            set_threads(&common)?;
            let kv = resolve(&common, vec![("bundle", path(bundle)), ("data", path(data)), ("output", path(output))])?;
            let p = cmd_predict(&kv)?;
            println!("wrote {} predictions", p.len());
        }
        Command::Importance { bundle, output, shared_credit, common } => {
            set_threads(&common)?;
            let shared = shared_credit.then(|| "true".to_string());
            let kv = resolve(&common, vec![("bundle", path(bundle)), ("output", path(output)), ("shared_credit", shared)])?;
            let rows = cmd_importance(&kv)?;
            println!("wrote {} importance rows", rows.len());
        }
        Command::Benchmark { experiment, replications, output_dir, common } => {
            set_threads(&common)?;
            let kv = resolve(
                &common,
                vec![
                    ("experiment", experiment),
                    ("replications", replications.map(|r| r.to_string())),
                    ("output_dir", path(output_dir)),
                ],
            )?;
            let (r, csv, json) = cmd_benchmark(&kv)?;
            for m in r.summary().methods {
                let mean = m.accuracy.mean.map_or("nan".to_string(), |v| format!("{v:.4}"));
                println!("{:<8} mean correlation {mean} ({} failed)", m.method, m.failed);
            }
            println!("wrote {} and {}", csv.display(), json.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
