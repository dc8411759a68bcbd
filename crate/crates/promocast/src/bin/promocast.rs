use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use promocast::config::{ConfigError, RunConfig};
use promocast::pipeline;
use promocast::service::{self, AppState, ModelSource};

#[derive(Parser)]
#[command(name = "promocast", version, about = "Forecast promotion efficiency indicators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset into <out>/data.
    Synth(Common),
    /// Write the feature tables to <out>/datasets.
    Prepare(Common),
    /// Train default models and write the error report.
    Train(Common),
    /// Tune, train and write the error and comparison reports.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Parameter orders to try, at most 720.
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Forecast every row of a feature CSV.
    Forecast {
        #[arg(long)]
        model: PathBuf,
        /// CSV whose header names the model features.
        #[arg(long)]
        rows: PathBuf,
    },
    /// Rank a model's features by gain.
    Importance {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Compute the six indicators of every promotion window.
    Indicators(Common),
    /// Serve forecasts over HTTP.
    Serve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Directory of models; defaults to <out>/models/optimized.
        #[arg(long)]
        models: Option<PathBuf>,
    },
}

enum Failure {
    Config(ConfigError),
    Run(String),
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Run(e.to_string())
    }
}

fn config(c: &Common, budget: Option<usize>) -> Result<RunConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::load(p).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(b) = budget {
        cfg.budget = b;
    }
    cfg.validate().map_err(Failure::Config)?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Synth(c) => {
            let s = pipeline::cmd_synth(&config(&c, None)?)?;
            println!(
                "products {} stores {} promotions {} receipts {}",
                s.products, s.stores, s.promotions, s.receipts
            );
        }
        Command::Prepare(c) => {
            let a = pipeline::cmd_prepare(&config(&c, None)?)?;
            for s in &a.splits {
                println!("{} {} train {} validation {} test {}", s.group, s.kind, s.train.len(), s.validation.len(), s.test.len());
            }
        }
        Command::Train(c) => {
            let cfg = config(&c, None)?;
            pipeline::cmd_train(&cfg)?;
            println!("{}", cfg.out.join("reports").join("default.csv").display());
        }
        Command::Optimize { common, budget } => {
            let cfg = config(&common, budget)?;
            pipeline::cmd_optimize(&cfg)?;
            println!("{}", cfg.out.join("reports").join("rmse_diff.csv").display());
        }
        Command::Forecast { model, rows } => {
            for v in pipeline::cmd_forecast(&model, &rows)? {
                println!("{v}");
            }
        }
        Command::Importance { model, top_k } => {
            for (name, v) in pipeline::cmd_importance(&model, top_k)? {
                println!("{name},{v}");
            }
        }
        Command::Indicators(c) => {
            let path = pipeline::cmd_indicators(&config(&c, None)?)?;
            println!("{}", path.display());
        }
        Command::Serve { common, port, models } => {
            let cfg = config(&common, None)?;
            let paths = cfg.data_paths();
            let source = ModelSource {
                models_dir: models.unwrap_or_else(|| cfg.models_dir(true)),
                stores: paths.stores,
                catalog: Some(paths.catalog),
            };
            let state = AppState::from_source(source)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(service::serve(state, port))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
