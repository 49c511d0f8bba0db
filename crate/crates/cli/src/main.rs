use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use spdc_cavity_cli::{load_config, run, CliError, Format, Subcommand};

/// Joint spectra, temporal correlations, brightness and design of
/// cavity-enhanced photon-pair sources.
#[derive(Debug, Parser)]
#[command(name = "spdc-cavity", version)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// Run configuration (TOML with unit-suffixed keys).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`, default `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid body encoding; overrides `[output] format`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for the physics modules.
    #[arg(long, env = "SPDC_THREADS")]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.machine_line());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::OutOfRange {
                section: "cli".into(),
                key: "threads".into(),
                value: "0".into(),
                bounds: "[1, ∞)".into(),
            });
        }
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let config = load_config(&cli.config)?;
    let dir = cli
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let format = cli.format.unwrap_or(config.format);
    for a in run(cli.subcommand, &config, &dir, format)? {
        println!("{}\t{}", a.kind, a.path.display());
    }
    Ok(())
}
