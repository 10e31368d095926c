use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mourre_lab::config::{parse_config, ScenarioConfig};
use mourre_lab::{convergence_into, run_into, CliError, ReportBundle, RunOptions, Which};

#[derive(Parser)]
#[command(
    name = "mourre-lab",
    version,
    about = "Numerical experiments on Mourre estimates and resolvent bounds",
    after_help = DEFAULTS
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario (or all of them) on a configuration file
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        which: Which,
        /// overrides the seed in the configuration
        #[arg(long)]
        seed: Option<u64>,
        /// overrides outputs.directory
        #[arg(long)]
        out: Option<PathBuf>,
        /// permit grids with N above 4096
        #[arg(long)]
        allow_large: bool,
    },
    /// Repeat the LAP and smoothing measurements while doubling N and L
    Converge {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 2)]
        levels: u32,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_large: bool,
    },
}

const DEFAULTS: &str = "\
Configuration defaults (every key except grid and model is optional):
  cutoff:      R = 16, eps_hat = 0.5
  lap:         s_values = [1, 4], beta = 0, R_tilde = minimizer of the bound,
               delta = (1 - R^-eps_hat)^-1, weight_mode = bracket_a,
               sweep lambda in [3R, 6R], 64 lambdas, 16 mus up to mu_max = 1,
               mu_min = 10 level spacings, refinement at 20% jumps
  smoothing:   s = 1, four plateau packets, T multiples [0.5, 1, 2], applied weight on
  regularized: s = 0.75, lambda = 4R, mu = 0.5, eps_grid = [0.05, 0.2], 8 contractions
  ensemble:    3 centres x 25 momenta with width L/32
  outputs:     directory mourre-out, formats [json, csv]
  seed:        7
The effective values are echoed under config_echo in summary.json.

Exit codes: 0 every hard verdict passed, 1 some verdict failed, 2 usage or configuration error.";

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = parse_config(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report(bundle: &ReportBundle, cfg: &ScenarioConfig, dir: &Path) -> Result<bool, CliError> {
    bundle.write(dir, &cfg.outputs.formats)?;
    for (k, v) in &bundle.summary.verdicts {
        log::info!("{k}: {:?}", v.verdict);
    }
    let failures = bundle.failures();
    if failures.is_empty() {
        println!("all verdicts passed; reports in {}", dir.display());
    } else {
        println!("failed: {}; reports in {}", failures.join(", "), dir.display());
    }
    Ok(bundle.passed())
}

/// Runs `f` on a fresh bundle. On error, whatever was finished is still written.
fn drive(
    cfg: &ScenarioConfig,
    out: Option<PathBuf>,
    f: impl FnOnce(&mut ReportBundle) -> Result<(), CliError>,
) -> Result<bool, CliError> {
    let dir = out.unwrap_or_else(|| PathBuf::from(&cfg.outputs.directory));
    let mut bundle = ReportBundle::new(cfg);
    match f(&mut bundle) {
        Ok(()) => report(&bundle, cfg, &dir),
        Err(e) => {
            if !bundle.summary.verdicts.is_empty() || !bundle.tables.is_empty() {
                bundle.note(format!("stopped early: {e}"));
                if let Err(w) = bundle.write(&dir, &cfg.outputs.formats) {
                    log::error!("could not write partial results: {w}");
                } else {
                    eprintln!("partial results in {}", dir.display());
                }
            }
            Err(e)
        }
    }
}

fn execute(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Run {
            config,
            which,
            seed,
            out,
            allow_large,
        } => {
            let cfg = load(&config, seed)?;
            let opts = RunOptions { allow_large };
            drive(&cfg, out, |b| run_into(&cfg, which, &opts, b))
        }
        Command::Converge {
            config,
            levels,
            out,
            allow_large,
        } => {
            let cfg = load(&config, None)?;
            let opts = RunOptions { allow_large };
            drive(&cfg, out, |b| convergence_into(&cfg, levels, &opts, b))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
