//! Experiment execution. Every experiment is split into independent units
//! (grid cell × seed) that run in parallel and are reassembled in a fixed
//! order, so outputs do not depend on the thread count.

use std::fmt::Write as _;

use mafla::combopt::{self, Graph, Relaxation};
use mafla::diffnet::{Activation, Mlp};
use mafla::evalkit::{report, MetricReport, MetricsConfig, MetricsRow};
use mafla::points::PointCloud;
use mafla::proposal::{DriftConfig, DriftParams};
use mafla::riesz::{ablation_grid, AblationTable, RieszConfig, RieszField};
use mafla::samplers::{run_parallel, ChainConfig, Models, RunResult, SamplerKind};
use mafla::sbm::{train_acceptance_with_field, NetAcceptance, SbmConfig, TraceRow};
use mafla::targets::{Component, ScoreModel, Target, TargetSpec};
use mafla::RngStream;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{relaxation_for, Experiment, ExperimentConfig, GraphModel, GraphSweep, InitMode};
use crate::CliError;

// Stream ids above the per-particle range used by the samplers.
const STREAM_NET: u64 = 1 << 48;
const STREAM_TRAIN: u64 = (1 << 48) + 1;
const STREAM_INIT: u64 = (1 << 48) + 2;
const STREAM_GRAPH: u64 = (1 << 48) + 3;
const STREAM_WARMUP: u64 = (1 << 48) + 4;

/// A CSV produced by a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub description: String,
    pub csv: String,
}

/// A trained acceptance network and the settings that produced it.
#[derive(Debug, Clone)]
pub struct TrainedNet {
    pub label: String,
    pub seed: u64,
    pub net: Mlp,
    pub training: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRow {
    pub problem: String,
    pub model: String,
    pub n: usize,
    pub graph: usize,
    pub seed: u64,
    pub sampler: String,
    pub energy_mean: f64,
    pub energy_std: f64,
    /// Cut size (MaxCut) or greedy cover size (vertex cover).
    pub value_mean: f64,
    pub value_std: f64,
    /// Largest cut or smallest cover among the particles.
    pub best: usize,
    /// Uncovered-edge ratio of the thresholded states, vertex cover only.
    pub uncovered_ratio: Option<f64>,
    /// Fraction of decoded covers that are feasible, vertex cover only.
    pub feasible_fraction: Option<f64>,
    pub acceptance_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub check: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub metrics: Vec<MetricsRow>,
    pub graph_rows: Vec<GraphRow>,
    pub ablation: Option<AblationTable>,
    pub checks: Vec<CheckRow>,
    pub nets: Vec<TrainedNet>,
}

impl RunOutput {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Mean of a metric over rows matching `pred`.
    pub fn mean_metric(&self, pred: impl Fn(&MetricsRow) -> bool, f: impl Fn(&MetricsRow) -> f64) -> Option<f64> {
        let v: Vec<f64> = self.metrics.iter().filter(|r| pred(r)).map(f).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

fn rt(e: mafla::Error) -> CliError {
    CliError::Runtime(e)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Mixture2d => run_mixture(cfg),
        Experiment::TauSweep | Experiment::AlphaGrid | Experiment::DimSweep => run_sweep(cfg),
        Experiment::RieszAblation | Experiment::LambdaAblation => run_ablation(cfg),
        Experiment::Maxcut | Experiment::VertexCover => run_graphs(cfg),
        Experiment::Validate => Ok(crate::invariants::run_checks()),
    }
}

/// One continuous-target unit of work.
#[derive(Debug, Clone)]
pub struct Cell {
    pub label: String,
    pub target: Target,
    pub alpha_prop: f64,
    pub tau: f64,
    pub seed: u64,
    pub sbm: SbmConfig,
    pub riesz: Option<RieszConfig>,
}

pub struct CellResult {
    pub cell_label: String,
    pub seed: u64,
    pub runs: Vec<(SamplerKind, RunResult)>,
    pub reports: Vec<(SamplerKind, MetricReport)>,
    pub trace: Vec<TraceRow>,
    pub net: Option<TrainedNet>,
    pub init: PointCloud,
}

fn training_json(drift: DriftParams, sbm: &SbmConfig, riesz: &Option<RieszConfig>) -> serde_json::Value {
    serde_json::json!({ "drift": drift, "sbm": sbm, "riesz": riesz })
}

/// Train an acceptance network for `target` with proposal field `field`.
pub fn train_net(
    dim: usize,
    hidden: &[usize],
    target: &dyn ScoreModel,
    field: &dyn ScoreModel,
    mut data: impl FnMut(usize, &mut rand_chacha::ChaCha8Rng) -> mafla::Result<PointCloud>,
    drift: &DriftConfig,
    sbm: &SbmConfig,
    seed: u64,
) -> Result<(Mlp, Vec<TraceRow>), CliError> {
    let mut net = Mlp::acceptance(dim, hidden, Activation::Tanh, RngStream::new(seed, STREAM_NET)).map_err(rt)?;
    let trace = train_acceptance_with_field(&mut net, target, field, &mut data, drift, sbm, RngStream::new(seed, STREAM_TRAIN))
        .map_err(rt)?;
    Ok((net, trace))
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<CellResult, CliError> {
    let target = &cell.target;
    let d = target.spec().dim;
    let init = match cfg.init {
        InitMode::Data => target.exact_sample(cfg.n_particles, &mut RngStream::new(cell.seed, STREAM_INIT).rng()).map_err(rt)?,
        _ => initial_states(cfg, d, cell.seed),
    };
    let drift = DriftConfig::new(cell.alpha_prop, cell.tau).map_err(rt)?;
    let field: Box<dyn ScoreModel> = match cell.riesz {
        Some(r) => Box::new(RieszField::proposal_field(target.clone(), r, cell.alpha_prop).map_err(rt)?),
        None => Box::new(target.clone()),
    };
    let mut trace = Vec::new();
    let mut trained = None;
    if cfg.samplers.contains(&SamplerKind::Mafla) {
        let (net, tr) = train_net(
            d,
            &cfg.acceptance_hidden,
            target,
            field.as_ref(),
            |n, rng| target.exact_sample(n, rng),
            &drift,
            &cell.sbm,
            cell.seed,
        )?;
        trace = tr;
        trained = Some(TrainedNet {
            label: cell.label.clone(),
            seed: cell.seed,
            net,
            training: training_json(DriftParams { alpha: cell.alpha_prop, tau: cell.tau }, &cell.sbm, &cell.riesz),
        });
    }
    let chain = ChainConfig {
        frw_step_scale: cfg.frw_step_scale,
        record_every: cfg.record_every,
        ..ChainConfig::new(cell.alpha_prop, cell.tau, cfg.n_steps)
    };
    let metrics_cfg = MetricsConfig { seed: cell.seed, ..cfg.metrics };
    let mut runs = Vec::new();
    let mut reports = Vec::new();
    for &kind in &cfg.samplers {
        let acceptance = trained.as_ref().map(|t| NetAcceptance { net: t.net.clone() });
        let models = match kind {
            SamplerKind::Mala | SamplerKind::FrwMh => Models { score: target, log_density: Some(target), acceptance: None },
            SamplerKind::Mafla => Models {
                score: field.as_ref(),
                log_density: None,
                acceptance: acceptance.as_ref().map(|a| a as &dyn mafla::sbm::Acceptance),
            },
            _ => Models::score_only(field.as_ref()),
        };
        let run = run_parallel(kind, &init, models, &chain, cell.seed).map_err(rt)?;
        let rep = report(&run, target, &metrics_cfg).map_err(rt)?;
        runs.push((kind, run));
        reports.push((kind, rep));
    }
    Ok(CellResult { cell_label: cell.label.clone(), seed: cell.seed, runs, reports, trace, net: trained, init })
}

/// Starting states for `Origin` and `Normal` initialization.
pub fn initial_states(cfg: &ExperimentConfig, dim: usize, seed: u64) -> PointCloud {
    let mut pc = PointCloud::zeros(cfg.n_particles, dim);
    if cfg.init == InitMode::Normal {
        let mut rng = RngStream::new(seed, STREAM_INIT).rng();
        for i in 0..cfg.n_particles {
            for v in pc.row_mut(i) {
                *v = cfg.init_scale * rng.sample::<f64, _>(rand_distr::StandardNormal);
            }
        }
    }
    pc
}

fn metrics_rows(cfg: &ExperimentConfig, cell: &Cell, res: &CellResult) -> Vec<MetricsRow> {
    res.reports
        .iter()
        .zip(&res.runs)
        .map(|((kind, rep), (_, run))| MetricsRow {
            experiment_id: format!("{}:{}", cfg.experiment.name(), cell.label),
            sampler: kind.name().to_string(),
            alpha_tgt: cell.target.spec().alpha_tgt,
            alpha_prop: cell.alpha_prop,
            tau: cell.tau,
            dim: cell.target.spec().dim,
            seed: cell.seed,
            w1: rep.w1,
            q95_err: rep.q95_err,
            q99_err: rep.q99_err,
            acceptance_rate: run.mean_acceptance(),
        })
        .collect()
}

fn trace_csv(rows: &[(String, u64, TraceRow)]) -> String {
    let mut s = String::from("cell,seed,epoch,eta,loss_l2,loss_alpha,entropy,combined\n");
    for (cell, seed, r) in rows {
        let _ = writeln!(
            s,
            "{cell},{seed},{},{},{:.10e},{:.10e},{:.10e},{:.10e}",
            r.epoch, r.eta, r.loss_l2, r.loss_alpha, r.entropy, r.combined
        );
    }
    s
}

fn run_cells(cfg: &ExperimentConfig, cells: &[Cell]) -> Result<(RunOutput, Vec<CellResult>), CliError> {
    let results: Vec<CellResult> = cells.par_iter().map(|c| run_cell(cfg, c)).collect::<Result<_, _>>()?;
    let mut out = RunOutput::default();
    let mut traces = Vec::new();
    for (cell, res) in cells.iter().zip(&results) {
        out.metrics.extend(metrics_rows(cfg, cell, res));
        traces.extend(res.trace.iter().map(|t| (cell.label.clone(), cell.seed, t.clone())));
        if let Some(n) = &res.net {
            out.nets.push(n.clone());
        }
    }
    out.tables.push(Table {
        name: "metrics.csv".into(),
        description: "sample-quality metrics per sampler, cell and seed".into(),
        csv: mafla::evalkit::metrics_csv(&out.metrics),
    });
    if !traces.is_empty() {
        out.tables.push(Table {
            name: "loss_trace.csv".into(),
            description: "per-epoch SBM training losses".into(),
            csv: trace_csv(&traces),
        });
    }
    Ok((out, results))
}

fn base_cell(cfg: &ExperimentConfig, label: String, target: Target, seed: u64) -> Cell {
    Cell {
        label,
        target,
        alpha_prop: cfg.drift.alpha,
        tau: cfg.drift.tau,
        seed,
        sbm: cfg.sbm.clone(),
        riesz: cfg.riesz,
    }
}

fn cfg_target(cfg: &ExperimentConfig) -> Result<Target, CliError> {
    Target::new(cfg.target.clone().expect("validated")).map_err(rt)
}

fn run_mixture(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let target = cfg_target(cfg)?;
    let cells: Vec<Cell> = cfg.seeds.iter().map(|&s| base_cell(cfg, "base".into(), target.clone(), s)).collect();
    let (mut out, results) = run_cells(cfg, &cells)?;
    let comps = &target.spec().components;
    let d = target.spec().dim;
    let mut samples = String::from("sampler,seed,particle");
    for j in 0..d {
        let _ = write!(samples, ",x{j}");
    }
    samples.push('\n');
    let mut weights = String::from("sampler,seed,component,weight\n");
    for (i, c) in comps.iter().enumerate() {
        let _ = writeln!(weights, "target,,{i},{}", c.weight);
    }
    for res in &results {
        for (kind, run) in &res.runs {
            let pts = &run.final_particles;
            for (p, row) in pts.rows().enumerate() {
                let _ = write!(samples, "{},{},{p}", kind.name(), res.seed);
                for v in row {
                    let _ = write!(samples, ",{v}");
                }
                samples.push('\n');
            }
            for (i, w) in component_weights(pts, comps).iter().enumerate() {
                let _ = writeln!(weights, "{},{},{i},{w}", kind.name(), res.seed);
            }
        }
    }
    out.tables.push(Table { name: "samples.csv".into(), description: "final particle states".into(), csv: samples });
    out.tables.push(Table {
        name: "weights.csv".into(),
        description: "mixture weights estimated by nearest-center assignment".into(),
        csv: weights,
    });
    Ok(out)
}

/// Fraction of finite points closest to each component center.
pub fn component_weights(points: &PointCloud, comps: &[Component]) -> Vec<f64> {
    let mut counts = vec![0usize; comps.len()];
    let mut total = 0;
    for r in points.rows().filter(|r| r.iter().all(|v| v.is_finite())) {
        let best = (0..comps.len())
            .min_by(|&a, &b| {
                let da: f64 = r.iter().zip(&comps[a].center).map(|(x, c)| (x - c).powi(2)).sum();
                let db: f64 = r.iter().zip(&comps[b].center).map(|(x, c)| (x - c).powi(2)).sum();
                da.total_cmp(&db)
            })
            .unwrap_or(0);
        counts[best] += 1;
        total += 1;
    }
    counts.iter().map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 }).collect()
}

/// `Σ_i w_i · law(offset_i · 1_d, scale)` for the dimension sweep.
pub fn mode_family_target(family: &crate::config::ModeFamily, d: usize) -> mafla::Result<Target> {
    let components = family
        .weights
        .iter()
        .zip(&family.offsets)
        .map(|(&weight, &o)| Component { weight, center: vec![o; d], scale: family.scale })
        .collect();
    Target::new(TargetSpec::mixture(family.kind, family.alpha_tgt, components))
}

fn with_alpha(spec: &TargetSpec, alpha: f64) -> Result<Target, CliError> {
    let mut s = spec.clone();
    s.alpha_tgt = Some(alpha);
    Target::new(s).map_err(rt)
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let mut cells = Vec::new();
    match cfg.experiment {
        Experiment::TauSweep => {
            let target = cfg_target(cfg)?;
            for &tau in cfg.sweep.taus.as_ref().unwrap() {
                for &seed in &cfg.seeds {
                    cells.push(Cell { tau, ..base_cell(cfg, format!("tau={tau}"), target.clone(), seed) });
                }
            }
        }
        Experiment::AlphaGrid => {
            let spec = cfg.target.as_ref().ok_or_else(|| CliError::Config("alpha_grid needs a target".into()))?;
            for &at in cfg.sweep.alpha_targets.as_ref().unwrap() {
                let target = with_alpha(spec, at)?;
                for &ap in cfg.sweep.alpha_proposals.as_ref().unwrap() {
                    for &seed in &cfg.seeds {
                        cells.push(Cell {
                            alpha_prop: ap,
                            ..base_cell(cfg, format!("alpha_tgt={at};alpha_prop={ap}"), target.clone(), seed)
                        });
                    }
                }
            }
        }
        Experiment::DimSweep => {
            let family = cfg.sweep.modes.as_ref().ok_or_else(|| CliError::Config("dim_sweep needs sweep.modes".into()))?;
            for &d in cfg.sweep.dims.as_ref().unwrap() {
                let target = mode_family_target(family, d).map_err(rt)?;
                for &seed in &cfg.seeds {
                    cells.push(base_cell(cfg, format!("d={d}"), target.clone(), seed));
                }
            }
        }
        _ => unreachable!(),
    }
    Ok(run_cells(cfg, &cells)?.0)
}

fn run_ablation(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let grid = cfg.sweep.ablation.clone().expect("validated");
    let spec = cfg.target.clone().expect("validated");
    let normalize = cfg.riesz.map(|r| r.normalize_k0).unwrap_or(true);
    let mut cells = Vec::new();
    for c in grid.cells().into_iter().take(grid.max_cells) {
        let target = with_alpha(&spec, c.alpha)?;
        let riesz = RieszConfig { normalize_k0: normalize, ..RieszConfig::new(c.alpha, c.h, c.k) };
        let mut sbm = cfg.sbm.clone();
        sbm.lambda_alpha = c.lambda_alpha;
        cells.push(Cell {
            alpha_prop: c.alpha,
            sbm,
            riesz: Some(riesz),
            ..base_cell(
                cfg,
                format!("alpha={};K={};h={};lambda_alpha={}", c.alpha, c.k, c.h, c.lambda_alpha),
                target,
                c.seed,
            )
        });
    }
    let ablation_cfg = ExperimentConfig { n_steps: grid.n_steps, ..cfg.clone() };
    let (mut out, results) = run_cells(&ablation_cfg, &cells)?;
    // ablation rows report the adjusted sampler when present
    let kind = if cfg.samplers.contains(&SamplerKind::Mafla) { SamplerKind::Mafla } else { cfg.samplers[0] };
    let mut next = results.iter();
    let table = ablation_grid(&grid, |_| {
        let res = next.next().expect("one result per cell");
        Ok(res.reports.iter().find(|(k, _)| *k == kind).expect("sampler ran").1.clone())
    })
    .map_err(rt)?;
    out.tables.push(Table {
        name: "ablation.csv".into(),
        description: "metrics per (alpha, K, h, lambda_alpha, seed) cell".into(),
        csv: table.to_csv(),
    });
    out.ablation = Some(table);
    Ok(out)
}

/// Graph for `(model, n, index)` drawn from the seed's graph stream.
pub fn make_graph(model: &GraphModel, n: usize, index: usize, seed: u64) -> mafla::Result<Graph> {
    let tag = mafla::rng::splitmix64((n as u64) << 20 ^ index as u64 ^ model.label().len() as u64 * 0x9e37);
    let mut rng = RngStream::new(seed, STREAM_GRAPH).derive(tag).rng();
    match *model {
        GraphModel::Ba { m } => combopt::gen_ba(n, m, &mut rng),
        GraphModel::Er { p } => combopt::gen_er(n, p, &mut rng),
        GraphModel::ErEdges { edges_per_vertex } => {
            combopt::gen_er_edges(n, (edges_per_vertex * n as f64).round() as usize, &mut rng)
        }
    }
}

/// Samplers' final states on one relaxation instance.
pub struct GraphResult {
    pub runs: Vec<(SamplerKind, RunResult)>,
    pub trace: Vec<TraceRow>,
    pub net: Option<Mlp>,
}

/// Run the configured samplers on a relaxation. Training states for the
/// acceptance network come from a FULA warm-up chain started from the
/// configured initial states.
pub fn run_relaxation(
    cfg: &ExperimentConfig,
    relaxation: &Relaxation,
    sweep: &GraphSweep,
    seed: u64,
) -> Result<GraphResult, CliError> {
    let target = Target::new(TargetSpec::relaxation(relaxation.clone())).map_err(rt)?;
    let n = relaxation.dim();
    let drift = DriftConfig::new(cfg.drift.alpha, cfg.drift.tau).map_err(rt)?;
    let chain = ChainConfig { record_every: cfg.record_every, ..ChainConfig::new(cfg.drift.alpha, cfg.drift.tau, cfg.n_steps) };
    let mut trace = Vec::new();
    let mut net = None;
    if cfg.samplers.contains(&SamplerKind::Mafla) {
        let warm_cfg = ChainConfig::new(cfg.drift.alpha, cfg.drift.tau, sweep.warmup_steps);
        let pool_cfg = ExperimentConfig { n_particles: cfg.sbm.batch_size.max(cfg.n_particles), ..cfg.clone() };
        let pool_init = initial_states(&pool_cfg, n, seed ^ STREAM_WARMUP);
        let pool = run_parallel(SamplerKind::Fula, &pool_init, Models::score_only(&target), &warm_cfg, seed ^ STREAM_WARMUP)
            .map_err(rt)?
            .final_particles
            .finite_rows();
        if pool.is_empty() {
            return Err(CliError::Runtime(mafla::Error::Diverged("warm-up chain produced no finite states".into())));
        }
        let data = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut out = PointCloud::new(n);
            for _ in 0..k {
                out.push(pool.row(rng.random_range(0..pool.len())));
            }
            Ok(out)
        };
        let (m, tr) = train_net(n, &cfg.acceptance_hidden, &target, &target, data, &drift, &cfg.sbm, seed)?;
        trace = tr;
        net = Some(m);
    }
    let init = initial_states(cfg, n, seed);
    let mut runs = Vec::new();
    for &kind in &cfg.samplers {
        let acc = net.as_ref().map(|m| NetAcceptance { net: m.clone() });
        let models = Models {
            score: &target,
            log_density: None,
            acceptance: acc.as_ref().map(|a| a as &dyn mafla::sbm::Acceptance),
        };
        runs.push((kind, run_parallel(kind, &init, models, &chain, seed).map_err(rt)?));
    }
    Ok(GraphResult { runs, trace, net })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len().max(1) as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Decode final states into a summary row.
pub fn graph_row(
    problem: Experiment,
    relaxation: &Relaxation,
    model: &str,
    graph_index: usize,
    seed: u64,
    kind: SamplerKind,
    run: &RunResult,
) -> GraphRow {
    let g = relaxation.graph();
    let finals = &run.final_particles;
    let energies: Vec<f64> = finals.rows().map(|u| relaxation.energy(u)).collect();
    let (energy_mean, energy_std) = mean_std(&energies);
    let (values, best, uncovered, feasible) = match problem {
        Experiment::VertexCover => {
            let mut sizes = Vec::new();
            let mut unc = Vec::new();
            let mut feas = 0usize;
            for u in finals.rows() {
                unc.push(combopt::cover_metrics(&combopt::threshold_vc(u), g).uncovered_ratio);
                let cover = combopt::greedy_decode_vc(u, g);
                let m = combopt::cover_metrics(&cover, g);
                feas += (m.uncovered == 0) as usize;
                sizes.push(m.size as f64);
            }
            let best = sizes.iter().cloned().fold(f64::INFINITY, f64::min) as usize;
            let n = finals.len().max(1) as f64;
            (sizes, best, Some(unc.iter().sum::<f64>() / n), Some(feas as f64 / n))
        }
        _ => {
            let cuts: Vec<f64> = finals.rows().map(|u| combopt::cut_value(&combopt::sign_decode(u), g) as f64).collect();
            let best = cuts.iter().cloned().fold(0.0, f64::max) as usize;
            (cuts, best, None, None)
        }
    };
    let (value_mean, value_std) = mean_std(&values);
    GraphRow {
        problem: problem.name().into(),
        model: model.into(),
        n: g.n(),
        graph: graph_index,
        seed,
        sampler: kind.name().into(),
        energy_mean,
        energy_std,
        value_mean,
        value_std,
        best,
        uncovered_ratio: uncovered,
        feasible_fraction: feasible,
        acceptance_rate: run.mean_acceptance(),
    }
}

pub fn graph_csv(problem: Experiment, rows: &[GraphRow]) -> String {
    let vc = problem == Experiment::VertexCover;
    let mut s = if vc {
        String::from("problem,model,n,graph,seed,sampler,energy_mean,energy_std,cover_mean,cover_std,best_cover,uncovered_ratio,feasible_fraction,acceptance_rate\n")
    } else {
        String::from("problem,model,n,graph,seed,sampler,energy_mean,energy_std,cut_mean,cut_std,best_cut,acceptance_rate\n")
    };
    for r in rows {
        let _ = write!(
            s,
            "{},{},{},{},{},{},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            r.problem, r.model, r.n, r.graph, r.seed, r.sampler, r.energy_mean, r.energy_std, r.value_mean, r.value_std, r.best
        );
        if vc {
            let _ = write!(s, ",{:.10e},{:.10e}", r.uncovered_ratio.unwrap_or(f64::NAN), r.feasible_fraction.unwrap_or(f64::NAN));
        }
        let _ = writeln!(s, ",{:.10e}", r.acceptance_rate);
    }
    s
}

fn run_graphs(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let sweep = cfg.sweep.graphs.clone().expect("validated");
    let mut units = Vec::new();
    for &seed in &cfg.seeds {
        for model in &sweep.models {
            for &n in &sweep.sizes {
                for g in 0..sweep.n_graphs {
                    units.push((seed, *model, n, g));
                }
            }
        }
    }
    let results: Vec<(Vec<GraphRow>, Vec<(String, u64, TraceRow)>, Option<TrainedNet>)> = units
        .par_iter()
        .map(|&(seed, model, n, g)| {
            let graph = make_graph(&model, n, g, seed).map_err(rt)?;
            let relaxation = relaxation_for(cfg.experiment, graph, &sweep);
            let res = run_relaxation(cfg, &relaxation, &sweep, seed)?;
            let label = format!("{}:n={n}:g={g}", model.label());
            let rows = res
                .runs
                .iter()
                .map(|(k, run)| graph_row(cfg.experiment, &relaxation, &model.label(), g, seed, *k, run))
                .collect();
            let trace = res.trace.into_iter().map(|t| (label.clone(), seed, t)).collect();
            let net = res.net.map(|net| TrainedNet {
                label,
                seed,
                net,
                training: training_json(cfg.drift, &cfg.sbm, &None),
            });
            Ok((rows, trace, net))
        })
        .collect::<Result<_, CliError>>()?;
    let mut out = RunOutput::default();
    let mut traces = Vec::new();
    for (rows, tr, net) in results {
        out.graph_rows.extend(rows);
        traces.extend(tr);
        out.nets.extend(net);
    }
    let name = format!("{}.csv", cfg.experiment.name());
    out.tables.push(Table {
        name,
        description: "decoded solution quality per graph and sampler".into(),
        csv: graph_csv(cfg.experiment, &out.graph_rows),
    });
    if !traces.is_empty() {
        out.tables.push(Table { name: "loss_trace.csv".into(), description: "per-epoch SBM training losses".into(), csv: trace_csv(&traces) });
    }
    Ok(out)
}
