//! Experiment harness for the `mafla` sampler library: configuration files,
//! built-in recipes, execution and artifact output.

pub mod artifacts;
pub mod config;
pub mod invariants;
pub mod recipes;
pub mod runner;

use std::path::Path;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use runner::{run_experiment, RunOutput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(String),
    #[error(transparent)]
    Runtime(#[from] mafla::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Write every table, checkpoint and the manifest of a run to `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, out: &RunOutput, dir: &Path) -> Result<(), CliError> {
    let mut art = artifacts::Artifacts::create(dir)?;
    for t in &out.tables {
        art.write_csv(&t.name, &t.description, &t.csv)?;
    }
    for (i, n) in out.nets.iter().enumerate() {
        let name = format!("checkpoints/acceptance_{i:03}.json");
        let path = art.path(&name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
        let training = serde_json::json!({ "cell": n.label, "settings": n.training });
        mafla::diffnet::save_checkpoint(&n.net, n.seed, training, &path)?;
        art.register(&name)?;
    }
    art.finish(&cfg.to_json(), &cfg.seeds)?;
    Ok(())
}
