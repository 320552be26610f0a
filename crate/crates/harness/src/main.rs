use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lock_harness::bench::{bench_csv, run_bench};
use lock_harness::config::{ExperimentConfig, ExperimentKind, Method};
use lock_harness::generate::generate;
use lock_harness::output::{write_file, write_manifest};
use lock_harness::sweep::{default_grid, run_sweep, write_sweep};
use lock_harness::{run_experiment, Error, Format, Result};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lock", version, about = "Online transition-matrix estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in experiment used when no configuration file is given.
    #[arg(long)]
    experiment: Option<ExperimentKind>,
    /// Run a single seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the true and observed frames of a dataset.
    Generate(Common),
    /// Run the configured methods and write per-seed and aggregate results.
    Run(Common),
    /// Evaluate a parameter grid.
    Sweep(Common),
    /// Time one update per grid size.
    Bench {
        /// Comma-separated grid sides.
        #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "llock")]
        method: Method,
        #[arg(long, default_value_t = 1)]
        d: usize,
        #[arg(long, default_value_t = 50)]
        tau: usize,
        #[arg(long, default_value_t = 0.6)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

fn resolve(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match (&common.config, common.experiment) {
        (Some(path), None) => ExperimentConfig::load(path)?,
        (None, Some(kind)) => ExperimentConfig::defaults(kind),
        (Some(_), Some(_)) => {
            return Err(Error::validation("experiment", "give either --config or --experiment, not both"));
        }
        (None, None) => return Err(Error::validation("config", "--config or --experiment is required")),
    };
    if let Some(seed) = common.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn bench(sizes: &[usize], method: Method, d: usize, tau: usize, eta: f64, c: f64, out: &Path) -> Result<()> {
    let reports = run_bench(sizes, method, d, tau, eta, c)?;
    let csv = bench_csv(&reports);
    print!("{csv}");
    let path = out.join("bench.csv");
    write_file(&path, csv)?;
    let mut cfg = ExperimentConfig::defaults(ExperimentKind::LocalStationary);
    cfg.methods = vec![method];
    cfg.params.tau = tau;
    cfg.params.eta = eta;
    cfg.params.c = c;
    cfg.params.d = d;
    write_manifest(out, "bench", &cfg, &[path])
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(common) => {
            let cfg = resolve(&common)?;
            let files = generate(&cfg, &common.out, common.format.into())?;
            log::info!("wrote {} files to {}", files.len(), common.out.display());
        }
        Command::Run(common) => {
            let cfg = resolve(&common)?;
            let results = run_experiment(&cfg, &common.out, common.format.into())?;
            log::info!("ran {} seeds into {}", results.len(), common.out.display());
        }
        Command::Sweep(common) => {
            let cfg = resolve(&common)?;
            let grid = match &cfg.sweep {
                Some(g) => g.clone(),
                None => default_grid(cfg.primary_method()?),
            };
            let rows = run_sweep(&cfg, &grid)?;
            write_sweep(&common.out, &cfg, &rows)?;
            log::info!("{} sweep rows written to {}", rows.len(), common.out.display());
        }
        Command::Bench {
            sizes,
            method,
            d,
            tau,
            eta,
            c,
            out,
        } => bench(&sizes, method, d, tau, eta, c, &out)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = Error::Config(e.to_string().lines().next().unwrap_or("invalid arguments").to_string());
            eprintln!("{}", err.to_json_line());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(2)
        }
    }
}
