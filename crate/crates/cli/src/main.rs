use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod config;
mod output;
mod scenarios;
mod tables;

use config::{RunConfig, Scenario};

/// Environment variable overriding `output.dir`.
const OUTPUT_ENV: &str = "WGM_CQED_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "wgm-cqed", version, about = "Atom–resonator spectra and transit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML configuration.
    Run {
        config: PathBuf,
        /// Output directory; overrides the config and the environment.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Print a complete configuration with every default filled in.
    PrintDefaults {
        #[arg(long, value_enum, default_value = "spectrum")]
        scenario: ScenarioArg,
    },
    /// Write the transition, Landé and mode-overlap tables as CSV.
    ExportTables {
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ScenarioArg {
    Fields,
    Spectrum,
    Averaged,
    Fit,
    Legacy,
    Pulsed,
    Transit,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Fields => Scenario::Fields,
            ScenarioArg::Spectrum => Scenario::Spectrum,
            ScenarioArg::Averaged => Scenario::Averaged,
            ScenarioArg::Fit => Scenario::Fit,
            ScenarioArg::Legacy => Scenario::Legacy,
            ScenarioArg::Pulsed => Scenario::Pulsed,
            ScenarioArg::Transit => Scenario::Transit,
        }
    }
}

/// Failure classes mapped to exit codes.
pub enum CliError {
    /// Unreadable, malformed or out-of-range configuration.
    Config(String),
    /// Numerical or I/O failure while running.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

fn output_dir(flag: Option<PathBuf>, configured: &str) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUTPUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(configured))
}

fn run(path: &Path, flag: Option<PathBuf>) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::Config(format!("{}: not UTF-8", path.display())))?;
    let cfg = RunConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let out = output::Output::new(output_dir(flag, &cfg.output.dir), output::sha256_hex(&bytes), cfg.scenario.name())?;
    scenarios::run(&cfg, base, &out).map_err(|e| match e {
        CliError::Runtime(m) => CliError::Runtime(format!("scenario {}: {m}", cfg.scenario.name())),
        other => other,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output_dir } => run(&config, output_dir),
        Command::PrintDefaults { scenario } => {
            let cfg = RunConfig::with_defaults(scenario.into());
            match toml::to_string_pretty(&cfg) {
                Ok(s) => {
                    print!("{s}");
                    return ExitCode::SUCCESS;
                }
                Err(e) => Err(CliError::Runtime(e.to_string())),
            }
        }
        Command::ExportTables { output_dir: flag } => tables::export(&output_dir(flag, "output")),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
