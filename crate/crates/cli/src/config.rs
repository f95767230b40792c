//! Experiment configuration files.

use std::path::PathBuf;

use mafla::combopt::Relaxation;
use mafla::evalkit::MetricsConfig;
use mafla::proposal::DriftParams;
use mafla::riesz::{AblationGrid, RieszConfig};
use mafla::samplers::SamplerKind;
use mafla::sbm::SbmConfig;
use mafla::targets::{Target, TargetKind, TargetSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Mixture2d,
    AlphaGrid,
    TauSweep,
    DimSweep,
    RieszAblation,
    LambdaAblation,
    Maxcut,
    VertexCover,
    Validate,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mixture2d => "mixture2d",
            Experiment::AlphaGrid => "alpha_grid",
            Experiment::TauSweep => "tau_sweep",
            Experiment::DimSweep => "dim_sweep",
            Experiment::RieszAblation => "riesz_ablation",
            Experiment::LambdaAblation => "lambda_ablation",
            Experiment::Maxcut => "maxcut",
            Experiment::VertexCover => "vertex_cover",
            Experiment::Validate => "validate",
        }
    }
}

/// Where chains start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    /// Exact target samples.
    #[default]
    Data,
    /// All particles at the origin.
    Origin,
    /// Independent `N(0, init_scale²)` coordinates.
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphModel {
    /// Barabási–Albert with `m` edges per new vertex.
    Ba { m: usize },
    /// Erdős–Rényi with independent edge probability `p`.
    Er { p: f64 },
    /// Erdős–Rényi with exactly `round(edges_per_vertex · n)` edges.
    ErEdges { edges_per_vertex: f64 },
}

impl GraphModel {
    pub fn label(&self) -> String {
        match self {
            GraphModel::Ba { m } => format!("ba_m{m}"),
            GraphModel::Er { p } => format!("er_p{p}"),
            GraphModel::ErEdges { edges_per_vertex } => format!("er_e{edges_per_vertex}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSweep {
    pub models: Vec<GraphModel>,
    pub sizes: Vec<usize>,
    pub n_graphs: usize,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// Vertex-cover edge penalty.
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    /// Steps of the FULA chain that supplies training states.
    #[serde(default = "default_warmup")]
    pub warmup_steps: usize,
}

fn default_temperature() -> f64 {
    0.5
}
fn default_penalty() -> f64 {
    2.0
}
fn default_warmup() -> usize {
    500
}

/// Mixture whose component centers are `offset · 1_d`, instantiated at
/// every dimension of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeFamily {
    pub kind: TargetKind,
    #[serde(default)]
    pub alpha_tgt: Option<f64>,
    pub weights: Vec<f64>,
    pub offsets: Vec<f64>,
    pub scale: f64,
}

/// Experiment-specific axes. Only the fields an experiment reads are used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    #[serde(default)]
    pub taus: Option<Vec<f64>>,
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha_targets: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha_proposals: Option<Vec<f64>>,
    #[serde(default)]
    pub modes: Option<ModeFamily>,
    #[serde(default)]
    pub graphs: Option<GraphSweep>,
    #[serde(default)]
    pub ablation: Option<AblationGrid>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub target: Option<TargetSpec>,
    #[serde(default = "default_samplers")]
    pub samplers: Vec<SamplerKind>,
    pub drift: DriftParams,
    #[serde(default = "default_sbm")]
    pub sbm: SbmConfig,
    #[serde(default = "default_hidden")]
    pub acceptance_hidden: Vec<usize>,
    #[serde(default)]
    pub riesz: Option<RieszConfig>,
    pub n_particles: usize,
    pub n_steps: usize,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub sweep: Sweep,
    #[serde(default)]
    pub init: InitMode,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default)]
    pub frw_step_scale: Option<f64>,
}

fn default_init_scale() -> f64 {
    1.0
}

fn default_samplers() -> Vec<SamplerKind> {
    vec![SamplerKind::Fula, SamplerKind::Mafla]
}
fn default_sbm() -> SbmConfig {
    SbmConfig::new(400)
}
fn default_hidden() -> Vec<usize> {
    vec![64, 64]
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Parse JSON, reporting the line and column of schema errors.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text)
            .map_err(|e| config_err(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Schema-level and capability checks that need no computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let wrap = |e: mafla::Error| config_err(e.to_string());
        mafla::proposal::DriftConfig::new(self.drift.alpha, self.drift.tau).map_err(wrap)?;
        self.sbm.validate().map_err(wrap)?;
        if self.experiment != Experiment::Validate {
            if self.seeds.is_empty() {
                return Err(config_err("seeds must not be empty"));
            }
            if self.n_particles == 0 {
                return Err(config_err("n_particles must be positive"));
            }
            if self.samplers.is_empty() {
                return Err(config_err("at least one sampler is required"));
            }
        }
        if !(self.init_scale > 0.0 && self.init_scale.is_finite()) {
            return Err(config_err("init_scale must be positive"));
        }
        if self.acceptance_hidden.is_empty() || self.acceptance_hidden.contains(&0) {
            return Err(config_err("acceptance_hidden needs positive widths"));
        }
        if let Some(r) = &self.riesz {
            r.validate().map_err(wrap)?;
        }
        let needs = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(config_err(format!("{} needs sweep.{field}", self.experiment.name())))
            }
        };
        match self.experiment {
            Experiment::Mixture2d => self.check_target(true)?,
            Experiment::TauSweep => {
                self.check_target(true)?;
                needs("taus", self.sweep.taus.is_some())?;
            }
            Experiment::DimSweep => {
                needs("dims", self.sweep.dims.is_some())?;
                needs("modes", self.sweep.modes.is_some())?;
                let family = self.sweep.modes.as_ref().expect("checked");
                if family.weights.len() != family.offsets.len() {
                    return Err(config_err("sweep.modes needs one offset per weight"));
                }
                for &d in self.sweep.dims.as_ref().expect("checked") {
                    let t = crate::runner::mode_family_target(family, d).map_err(|e| config_err(e.to_string()))?;
                    if !t.has_exact_sampler() {
                        return Err(config_err(format!("dimension {d} has no exact sampler")));
                    }
                }
            }
            Experiment::AlphaGrid => {
                self.check_target(true)?;
                needs("alpha_targets", self.sweep.alpha_targets.is_some())?;
                needs("alpha_proposals", self.sweep.alpha_proposals.is_some())?;
            }
            Experiment::RieszAblation | Experiment::LambdaAblation => {
                self.check_target(true)?;
                needs("ablation", self.sweep.ablation.is_some())?;
            }
            Experiment::Maxcut | Experiment::VertexCover => {
                needs("graphs", self.sweep.graphs.is_some())?;
                for s in &self.samplers {
                    if matches!(s, SamplerKind::Mala | SamplerKind::FrwMh) {
                        return Err(config_err(format!(
                            "sampler {} is unavailable for relaxation targets in this harness",
                            s.name()
                        )));
                    }
                }
            }
            Experiment::Validate => {}
        }
        Ok(())
    }

    fn check_target(&self, need_exact: bool) -> Result<(), CliError> {
        let spec = self.target.as_ref().ok_or_else(|| config_err(format!("{} needs a target", self.experiment.name())))?;
        let t = Target::new(spec.clone()).map_err(|e| config_err(e.to_string()))?;
        if need_exact && !t.has_exact_sampler() {
            return Err(config_err("target has no exact sampler for reference metrics"));
        }
        if spec.kind == TargetKind::CoRelaxation {
            return Err(config_err("relaxation targets belong to the maxcut and vertex_cover experiments"));
        }
        Ok(())
    }
}

/// The relaxation a graph experiment builds, kept here so configs and runs
/// agree on defaults.
pub fn relaxation_for(exp: Experiment, graph: mafla::combopt::Graph, sweep: &GraphSweep) -> Relaxation {
    match exp {
        Experiment::VertexCover => Relaxation::VertexCover(mafla::combopt::VcTarget {
            graph,
            penalty: sweep.penalty,
            temperature: sweep.temperature,
        }),
        _ => Relaxation::MaxCut(mafla::combopt::MaxCutTarget { graph, temperature: sweep.temperature }),
    }
}
