use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mafla_cli::{recipes, run_experiment, write_outputs, CliError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "mafla", version, about = "Heavy-tailed Langevin samplers with learned acceptance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its artifacts.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List built-in templates, or print one as JSON.
    Recipes { name: Option<String> },
    /// Run the numerical self-checks.
    Validate {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn init_threads() {
    if let Some(n) = std::env::var("MAFLA_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

fn run(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<bool, CliError> {
    let result = run_experiment(cfg)?;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(cfg.experiment.name()));
    write_outputs(cfg, &result, &dir)?;
    for t in &result.tables {
        eprintln!("wrote {}", dir.join(&t.name).display());
    }
    let failed: Vec<_> = result.checks.iter().filter(|c| !c.pass).collect();
    for c in &result.checks {
        println!("{:<36} {:>12.4e}  tol {:>9.2e}  {}", c.check, c.value, c.tolerance, if c.pass { "ok" } else { "FAIL" });
    }
    Ok(failed.is_empty())
}

fn print_stdout(text: &str) -> Result<bool, CliError> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Ok(()) => Ok(true),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(true),
        Err(e) => Err(CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let outcome = match cli.command {
        Command::Run { config, out } => ExperimentConfig::from_path(&config).and_then(|cfg| run(&cfg, out)),
        Command::Validate { out } => run(&recipes::validate(), out),
        Command::Recipes { name: None } => {
            let listing: String = recipes::recipes().iter().map(|r| format!("{:<16} {}\n", r.name, r.description)).collect();
            print_stdout(&listing)
        }
        Command::Recipes { name: Some(name) } => match recipes::recipe(&name) {
            Some(r) => print_stdout(&format!("{}\n", r.config.to_json())),
            None => Err(CliError::Config(format!("unknown recipe `{name}`"))),
        },
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
