use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hphi_cli::{suites, CliError, ExperimentConfig, RunReport};

#[derive(Parser)]
#[command(name = "hphi", version, about = "Verification suites for Berezin-Toeplitz operators on H_Phi")]
struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files (overrides `out` in the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Gauss-Hermite order per axis (overrides `order` in the config).
    #[arg(long, global = true)]
    order: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Derived geometry, constants and invariant residuals.
    SpaceInfo,
    /// Runs one verification suite.
    Verify {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(suites::SUITES))]
        suite: String,
    },
}

fn load(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    let mut cfg = ExperimentConfig::from_toml(&text)?;
    if let Some(k) = cli.order {
        cfg.order = k;
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<RunReport, CliError> {
    if let Some(k) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {k} threads: {e}")))?;
    }
    let cfg = load(cli)?;
    let suite = match &cli.command {
        Command::SpaceInfo => "space-info",
        Command::Verify { suite } => suite.as_str(),
    };
    let report = suites::run(&cfg, suite)?;
    let out = cli.out.clone().or_else(|| cfg.out.as_ref().map(PathBuf::from));
    print!("{}", report.render());
    if let Some(dir) = out {
        for path in report.write_csv(&dir)? {
            println!("wrote {path}");
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) if report.all_pass() => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
