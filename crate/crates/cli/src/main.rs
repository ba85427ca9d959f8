use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use photoconv::Error;
use photoconv_cli::commands::{self, exit_code, Status};
use photoconv_cli::config::{Format, RunConfig};

#[derive(Parser)]
#[command(name = "photoconv", version, about = "Linear stability of phototactic suspensions heated from below")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for table sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Collocation points N.
    #[arg(long, global = true)]
    resolution: Option<usize>,
    #[arg(long, global = true)]
    k_min: Option<f64>,
    #[arg(long, global = true)]
    k_max: Option<f64>,
    #[arg(long, global = true)]
    k_samples: Option<usize>,
    #[arg(long, global = true)]
    format: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Basic-state profiles and residual report.
    Steady,
    /// Filtered spectrum at one (k, Rab).
    Growth {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        rab: Option<f64>,
    },
    /// Neutral curve over the k window.
    Neutral,
    /// Critical wavenumber and Rab.
    Critical,
    /// Critical points for every (Gc, RaT) in the sweep.
    Table,
    /// Perturbation fields of the leading mode.
    Modes {
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        rab: Option<f64>,
        #[arg(long)]
        snapshots: Option<usize>,
    },
}

fn load(common: &Common) -> photoconv::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::from_json("{}")?,
    };
    if let Some(n) = common.resolution {
        cfg.model.n = n;
        cfg.model.validate()?;
    }
    if let Some(v) = common.k_min {
        cfg.kwindow.k_min = v;
    }
    if let Some(v) = common.k_max {
        cfg.kwindow.k_max = v;
    }
    if let Some(v) = common.k_samples {
        cfg.kwindow.samples = v;
    }
    cfg.kwindow.validate()?;
    if let Some(f) = &common.format {
        cfg.output.format = f.parse::<Format>()?;
    }
    if let Some(dir) = &common.out {
        cfg.output.dir = dir.clone();
    }
    if common.jobs == 0 {
        return Err(Error::Config("--jobs must be at least 1".into()));
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> photoconv::Result<Status> {
    let cfg = load(&cli.common)?;
    let outcome = match &cli.command {
        Command::Steady => commands::cmd_steady(&cfg)?,
        Command::Growth { k, rab } => {
            let k = k.or(cfg.k).ok_or_else(|| Error::Config("growth needs a wavenumber (--k or \"k\")".into()))?;
            commands::cmd_growth(&cfg, k, rab.unwrap_or(cfg.model.ra_b))?
        }
        Command::Neutral => commands::cmd_neutral(&cfg)?,
        Command::Critical => commands::cmd_critical(&cfg)?,
        Command::Table => commands::cmd_table(&cfg, cli.common.jobs)?,
        Command::Modes { k, rab, snapshots } => {
            let rab = rab.or(cfg.ra_b_given.then_some(cfg.model.ra_b));
            commands::cmd_modes(&cfg, k.or(cfg.k), rab, snapshots.unwrap_or(cfg.modes.snapshots))?
        }
    };
    for path in outcome.write_to(&cfg.output.dir)? {
        log::info!("wrote {}", path.display());
    }
    println!("{}", outcome.summary);
    Ok(outcome.status)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Partial) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
