use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qbattery::verify::VerifyOptions;
use qbattery_cli::{
    cmd_charge, cmd_fit, cmd_spectrum, cmd_sweep, cmd_verify, env_overrides, CliError, CliResult, Format, Overrides,
    RunConfig,
};

#[derive(Parser, Debug)]
#[command(name = "qbattery", version, about = "Exact simulation of quantum-battery charging ensembles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `run.out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed; overrides `sweep.master_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; overrides `run.workers` and QBATT_WORKERS.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format; repeat for several.
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Spectral extremes and gap of every realization.
    Spectrum,
    /// Full charging protocol with the parallel baseline.
    Charge,
    /// Ensemble sweep, power-law fits and verdicts.
    Sweep,
    /// Re-fit persisted records.
    Fit,
    /// Run the invariant suites.
    Verify,
}

fn load(cli: &Cli) -> CliResult<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut config = RunConfig::load(path)?;
    let flags = Overrides { out: cli.out.clone(), seed: cli.seed, workers: cli.workers, formats: cli.format.clone() };
    config.apply(env_overrides(|k| std::env::var(k).ok())?, &flags);
    config.validate()?;
    Ok(config)
}

fn verify_options(cli: &Cli) -> CliResult<VerifyOptions> {
    let mut options = VerifyOptions::default();
    let (_, cap) = env_overrides(|k| std::env::var(k).ok())?;
    if let Some(path) = &cli.config {
        let config = RunConfig::load(path)?;
        options.dense_cap = config.run.dense_cap;
    }
    if let Some(cap) = cap {
        options.dense_cap = cap;
    }
    if let Some(seed) = cli.seed {
        options.seed = seed;
    }
    if options.dense_cap < 4 {
        return Err(CliError::Config(format!("verification needs dense_cap >= 4, got {}", options.dense_cap)));
    }
    Ok(options)
}

fn run(cli: &Cli) -> CliResult<()> {
    match cli.command {
        Command::Spectrum => {
            let rows = cmd_spectrum(&load(cli)?)?;
            let degenerate = rows.iter().filter(|r| r.degenerate).count();
            println!("spectrum: {} realizations, {degenerate} degenerate", rows.len());
        }
        Command::Charge => {
            let records = cmd_charge(&load(cli)?)?;
            let failed = records.iter().filter(|r| r.failed()).count();
            println!("charge: {} realizations, {failed} failed", records.len());
        }
        Command::Sweep | Command::Fit => {
            let config = load(cli)?;
            let verdicts = if matches!(cli.command, Command::Sweep) { cmd_sweep(&config)? } else { cmd_fit(&config)? };
            for v in &verdicts {
                println!(
                    "{} {:?}: fitted {:.4} ± {:.4}, predicted {:.4} -> {}",
                    v.quantity,
                    v.convention,
                    v.fitted,
                    v.stderr,
                    v.predicted,
                    if v.pass { "pass" } else { "fail" }
                );
            }
        }
        Command::Verify => {
            for s in cmd_verify(&verify_options(cli)?)? {
                println!("{}: {} checks passed", s.name, s.checks);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::Verify(failures) = &e {
                for f in failures {
                    eprintln!("FAILED {f}");
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
