use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nsda::harness::checks::run_self_checks;
use nsda::harness::{
    load_config, run_contraction_test, run_n_sweep, run_stability_soak, run_tau_sweep, run_twin_experiment,
    write_report, ExperimentConfig, ExperimentReport, Setup,
};
use nsda::schemes::Scheme;

#[derive(Parser)]
#[command(name = "nsda", version, about = "Nudging data assimilation for 2D periodic Navier-Stokes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides the configured one.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// RNG seed; overrides the configured one.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Time scheme: semi or full.
    #[arg(long, global = true)]
    scheme: Option<Scheme>,
    /// Only print failures and errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Operator self-tests and oracle comparisons.
    Check,
    /// Twin experiment with an unnudged control.
    Twin,
    /// Step-size sweep for both schemes.
    TauSweep,
    /// Galerkin cutoff sweep with postprocessing.
    NSweep,
    /// Long stability runs.
    Soak,
    /// Contraction of nearby trajectories.
    Contraction,
    /// Print bound constants and the condition report.
    Constants,
}

fn config(cli: &Cli) -> nsda::Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| nsda::Error::Config("this subcommand needs --config <path>".into()))?;
    let mut cfg = load_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(scheme) = cli.scheme {
        cfg.scheme = scheme;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn print_report(report: &ExperimentReport, quiet: bool) {
    if !quiet {
        for (k, v) in &report.values {
            println!("{k} = {v:e}");
        }
    }
    for (line, c) in report.summary_lines().iter().zip(&report.criteria) {
        if !quiet || c.status == nsda::harness::Status::Fail {
            println!("{line}");
        }
    }
}

fn run(cli: &Cli) -> nsda::Result<bool> {
    let report = match cli.command {
        Command::Check => {
            let report = run_self_checks(cli.seed.unwrap_or(0))?;
            print_report(&report, cli.quiet);
            if let Some(out) = &cli.out {
                write_report(&report, out)?;
            }
            return Ok(report.passed());
        }
        Command::Constants => {
            let cfg = config(cli)?;
            let setup = Setup::new(&cfg)?;
            let report = setup.report("constants", &cfg);
            print!("{}", report.to_text());
            return Ok(true);
        }
        Command::Twin => run_twin_experiment(&config(cli)?)?,
        Command::TauSweep => run_tau_sweep(&config(cli)?)?,
        Command::NSweep => run_n_sweep(&config(cli)?)?,
        Command::Soak => run_stability_soak(&config(cli)?)?,
        Command::Contraction => run_contraction_test(&config(cli)?)?,
    };
    let cfg = config(cli)?;
    write_report(&report, &cfg.output_dir)?;
    print_report(&report, cli.quiet);
    if !cli.quiet {
        println!("report written to {}", cfg.output_dir.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
