//! `levy-ns`: batch runs of the stochastic Navier-Stokes Galerkin solver and
//! its diagnostics. Exit status 0 on success, 1 on runtime failure, 2 on
//! invalid input, 3 when more than 1% of trajectories blew up.

mod commands;
mod config;
mod output;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use levy_ns::invariant::Observable;

use commands::{CfArgs, Failure, InvariantArgs};
use config::{ConfigError, RunConfig};
use output::Run;

#[derive(Parser, Debug)]
#[command(name = "levy-ns", version, about = "Stochastic 2D Navier-Stokes with alpha-stable noise: simulation and diagnostics")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces `solver.seed`; part of the config hash.
    #[arg(long, global = true)]
    seed_override: Option<u64>,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Directory for outputs and the run manifest.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got '{s}'"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number"));
    Ok((num(a)?, num(b)?))
}

fn parse_observable(s: &str) -> Result<Observable, String> {
    s.parse().map_err(|e: levy_ns::invariant::InvariantError| e.to_string())
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One trajectory: per-step scalars and field snapshots.
    Simulate {
        #[arg(short, long, default_value = "trajectory.csv")]
        output: PathBuf,
        #[arg(long, default_value = "snapshots")]
        snapshots_dir: PathBuf,
    },
    /// Per-trajectory estimator terms of an ensemble.
    Ensemble {
        #[arg(short = 'M', long = "trajectories")]
        m: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        #[arg(short, long, default_value = "ensemble.csv")]
        output: PathBuf,
    },
    /// Fractional moment bound and gradient-moment report.
    Moments {
        #[arg(short = 'M', long = "trajectories")]
        m: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        horizons: Option<Vec<f64>>,
        #[arg(short, long, default_value = "moments.csv")]
        output: PathBuf,
    },
    /// Characteristic-function test of a martingale coefficient.
    CfTest {
        #[arg(long)]
        mode: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        xi: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
        pairs: Option<Vec<(f64, f64)>>,
        #[arg(short = 'M', long = "trajectories")]
        m: Option<usize>,
        /// Repeat at dt/2 to separate quadrature bias from a law mismatch.
        #[arg(long)]
        halving: bool,
        #[arg(short, long, default_value = "cf.csv")]
        output: PathBuf,
    },
    /// Time-averaged empirical measures and window stationarity.
    Invariant {
        #[arg(short = 'M', long = "trajectories")]
        m: Option<usize>,
        #[arg(long)]
        burn_in: Option<f64>,
        #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
        windows: Option<Vec<(f64, f64)>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_observable)]
        observables: Option<Vec<Observable>>,
        /// Sampling stride in steps; chosen adaptively when absent.
        #[arg(long)]
        stride: Option<usize>,
        /// Also write the window comparisons to this CSV.
        #[arg(long)]
        stationarity: Option<PathBuf>,
        #[arg(short, long, default_value = "measure.csv")]
        output: PathBuf,
    },
    /// Law checks of the stable sampler: median, tail index, self-similarity.
    SamplerTest {
        #[arg(long)]
        alpha: f64,
        #[arg(short = 'N', long = "draws", default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value_t = 100_000)]
        similarity_draws: usize,
        #[arg(short, long, default_value = "sampler.csv")]
        output: PathBuf,
    },
    /// Long-format `series,x,y,yerr` rows from report files.
    PlotData {
        inputs: Vec<PathBuf>,
        #[arg(short, long, default_value = "plot.csv")]
        output: PathBuf,
    },
    /// Check a configuration and print H_theta.
    Validate,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Simulate { .. } => "simulate",
            Command::Ensemble { .. } => "ensemble",
            Command::Moments { .. } => "moments",
            Command::CfTest { .. } => "cf-test",
            Command::Invariant { .. } => "invariant",
            Command::SamplerTest { .. } => "sampler-test",
            Command::PlotData { .. } => "plot-data",
            Command::Validate => "validate",
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, ExitCode> {
    let Some(path) = cli.config.as_deref() else {
        eprintln!("error: --config is required for {}", cli.command.name());
        return Err(ExitCode::from(2));
    };
    config::load(path, cli.seed_override).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(match e {
            ConfigError::Io { .. } => 1,
            _ => 2,
        })
    })
}

fn start(cli: &Cli, cfg: Option<&RunConfig>) -> Run {
    let mut run = Run::new(&cli.out_dir, cli.command.name());
    if let Some(c) = cfg {
        let m = run.manifest_mut();
        m.config_hash = Some(c.hash.clone());
        m.seed = Some(c.solver.seed);
        m.h_theta = c.h_theta.map(Into::into);
        m.warnings = c.warnings.clone();
    }
    run
}

fn finish(run: Run, outcome: commands::Outcome) -> ExitCode {
    let dominated = commands::blow_up_dominated(&run);
    let code = match &outcome {
        Ok(()) if dominated => {
            eprintln!("error: more than 1% of trajectories blew up");
            3
        }
        Ok(()) => 0,
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    };
    if let Err(e) = run.finish(outcome.is_ok() && !dominated) {
        eprintln!("error: cannot write the run manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LEVY_NS_LOG", "warn")).init();
    let cli = Cli::parse();
    let workers = cli.workers;
    match &cli.command {
        Command::Validate => {
            let cfg = match load_config(&cli) {
                Ok(c) => c,
                Err(code) => return code,
            };
            println!("valid configuration, hash {}", cfg.hash);
            match cfg.h_theta {
                Some(h) => println!(
                    "H_theta = {:.6} (big-jump moment {:.6}, coefficient sum {:.6})",
                    h.total(),
                    h.big_jump_moment,
                    h.coefficient_sum
                ),
                None => println!("noise disabled"),
            }
            for w in &cfg.warnings {
                println!("warning: {w}");
            }
            ExitCode::SUCCESS
        }
        Command::SamplerTest { alpha, n, similarity_draws, output } => {
            let cfg = match cli.config {
                Some(_) => match load_config(&cli) {
                    Ok(c) => Some(c),
                    Err(code) => return code,
                },
                None => None,
            };
            let seed = cli.seed_override.or(cfg.as_ref().map(|c| c.solver.seed)).unwrap_or(0);
            let mut run = start(&cli, cfg.as_ref());
            run.manifest_mut().seed = Some(seed);
            let hash = cfg.as_ref().map(|c| c.hash.as_str());
            let outcome = commands::sampler_test(hash, &mut run, *alpha, *n, *similarity_draws, seed, output);
            finish(run, outcome)
        }
        Command::PlotData { inputs, output } => {
            let mut run = start(&cli, None);
            let outcome = plot::read_inputs(inputs)
                .map_err(|e| Failure::Runtime(format!("cannot read report: {e}")))
                .and_then(|texts| plot::plot_csv(&texts).map_err(|e| Failure::Invalid(e.to_string())))
                .and_then(|bytes| run.write(output, &bytes).map_err(|e| Failure::Runtime(e.to_string())));
            finish(run, outcome)
        }
        command => {
            let cfg = match load_config(&cli) {
                Ok(c) => c,
                Err(code) => return code,
            };
            for w in &cfg.warnings {
                log::warn!("{w}");
            }
            let mut run = start(&cli, Some(&cfg));
            let outcome = dispatch(command, &cfg, &mut run, workers);
            finish(run, outcome)
        }
    }
}

fn dispatch(command: &Command, cfg: &RunConfig, run: &mut Run, workers: usize) -> commands::Outcome {
    match command {
        Command::Simulate { output, snapshots_dir } => commands::simulate(cfg, run, output, snapshots_dir),
        Command::Ensemble { m, horizons, output } => commands::ensemble(cfg, run, workers, *m, horizons.clone(), output),
        Command::Moments { m, horizons, output } => commands::moments(cfg, run, workers, *m, horizons.clone(), output),
        Command::CfTest { mode, xi, pairs, m, halving, output } => {
            let args = CfArgs { mode: *mode, xi: xi.clone(), pairs: pairs.clone(), m: *m, halving: *halving };
            commands::cf_test(cfg, run, workers, args, output)
        }
        Command::Invariant { m, burn_in, windows, observables, stride, stationarity, output } => {
            let args = InvariantArgs {
                m: *m,
                burn_in: *burn_in,
                windows: windows.clone(),
                observables: observables.clone(),
                stride: *stride,
                stationarity: stationarity.clone(),
            };
            commands::invariant(cfg, run, workers, args, output)
        }
        Command::SamplerTest { .. } | Command::PlotData { .. } | Command::Validate => unreachable!("handled before dispatch"),
    }
}
