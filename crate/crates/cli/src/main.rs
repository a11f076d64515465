//! `netwhittle`: generate network time series, fit sparse Laplacians, run sweeps and
//! evaluate the recovery conditions.
//!
//! Exit status: 0 on success, 1 for configuration errors, 2 for data errors, 3 for
//! numerical failures.

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use netwhittle::eval::LambdaPolicy;

use config::{GraphFamily, GraphSection, RunConfig};
use error::CliResult;
use output::{RunDir, CONFIG_ECHO};

#[derive(Debug, Parser)]
#[command(name = "netwhittle", version, about = "Sparse network Laplacian learning from stationary time series")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; sub-seeds left unset in the config derive from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker thread cap (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output root; results go to `<out>/<command>/<name>/`.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Run name, overriding `name` in the config.
    #[arg(long, global = true)]
    name: Option<String>,
    /// Graph as `kind[:key=value,...][:seed]`, e.g. `erdos_renyi:p=30,target_degree=4:1`.
    #[arg(long, global = true, conflicts_with = "graph_file")]
    graph: Option<String>,
    /// Graph from an edge-list or adjacency CSV.
    #[arg(long, global = true)]
    graph_file: Option<PathBuf>,
    /// Sample size, overriding `data.n`.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Compare {
    Baseline,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the ground-truth matrix, its edge list and a simulated X/Y panel pair.
    Gen,
    /// Fit the penalized Whittle estimator to a panel.
    Fit {
        /// Panel CSV of potentials; simulated from the config when omitted.
        #[arg(long)]
        panel: Option<PathBuf>,
        /// Dense CSV of the true matrix, for recovery metrics.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Use this fixed penalty instead of the configured policy.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Trial-averaged recovery over a sample-size grid.
    Sweep {
        /// Add two-step baseline columns.
        #[arg(long, value_enum)]
        compare: Option<Compare>,
        /// Comma-separated processes (iid, var1, varma22), one sweep each.
        #[arg(long)]
        processes: Option<String>,
        /// Number of trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Warm-started regularization path.
    Path {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Number of penalty values.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Population-level recovery conditions for a graph and process.
    Diagnose {
        /// Bandwidth used in the report.
        #[arg(long)]
        m: Option<usize>,
    },
    /// Two-step estimator: invert the periodogram, then take a matrix square root.
    Baseline {
        #[arg(long)]
        panel: Option<PathBuf>,
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Gen => "gen",
            Command::Fit { .. } => "fit",
            Command::Sweep { .. } => "sweep",
            Command::Path { .. } => "path",
            Command::Diagnose { .. } => "diagnose",
            Command::Baseline { .. } => "baseline",
        }
    }
}

/// Loads the config and applies command-line overrides.
fn build_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(name) = &cli.name {
        cfg.name = name.clone();
    }
    if let Some(n) = cli.n {
        cfg.data.n = Some(n);
    }
    if let Some(spec) = &cli.graph {
        cfg.graph = Some(GraphSection::parse_flag(spec)?);
    }
    if let Some(path) = &cli.graph_file {
        let mut g = GraphSection::new(GraphFamily::File);
        g.file = Some(path.clone());
        cfg.graph = Some(g);
    }
    match &cli.command {
        Command::Fit { panel, truth, lambda } => {
            override_panel(&mut cfg, panel, truth);
            if let Some(lambda) = lambda {
                cfg.estimation.lambda = LambdaPolicy::Fixed { lambda: *lambda };
            }
        }
        Command::Path { panel, truth, k } => {
            override_panel(&mut cfg, panel, truth);
            if let Some(k) = k {
                cfg.path.k = *k;
            }
        }
        Command::Baseline { panel, truth } => override_panel(&mut cfg, panel, truth),
        Command::Sweep { compare, processes, trials } => {
            if compare.is_some() {
                cfg.sweep.compare_baseline = true;
            }
            if let Some(list) = processes {
                cfg.sweep.processes = commands::process_list(list)?;
            }
            if let Some(t) = trials {
                cfg.sweep.trials = *t;
            }
        }
        Command::Diagnose { m } => {
            if m.is_some() {
                cfg.diagnose.m = *m;
            }
        }
        Command::Gen => {}
    }
    cfg.resolve()?;
    Ok(cfg)
}

fn override_panel(cfg: &mut RunConfig, panel: &Option<PathBuf>, truth: &Option<PathBuf>) {
    if panel.is_some() {
        cfg.fit.panel = panel.clone();
    }
    if truth.is_some() {
        cfg.fit.truth = truth.clone();
    }
}

fn run(cli: &Cli) -> CliResult<PathBuf> {
    let cfg = build_config(cli)?;
    if matches!(cli.command, Command::Gen | Command::Sweep { .. } | Command::Diagnose { .. }) {
        cfg.graph()?;
    }
    let mut dir = RunDir::create(&cli.out, cli.command.name(), &cfg.name)?;
    dir.write_bytes(CONFIG_ECHO, cfg.to_toml()?.as_bytes())?;
    netwhittle::parallel::with_threads(cfg.threads, || match cli.command {
        Command::Gen => commands::gen(&cfg, &mut dir),
        Command::Fit { .. } => commands::fit(&cfg, &mut dir),
        Command::Sweep { .. } => commands::sweep(&cfg, &mut dir),
        Command::Path { .. } => commands::path(&cfg, &mut dir),
        Command::Diagnose { .. } => commands::diagnose(&cfg, &mut dir),
        Command::Baseline { .. } => commands::baseline(&cfg, &mut dir),
    })?;
    dir.finish()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
