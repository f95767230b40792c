//! ULA, MALA, FULA, fractional random-walk MH and MAFLA.
//!
//! Particle `i` draws its proposal noise from stream `(seed, 2i)` and its
//! accept/reject uniforms from `(seed, 2i + 1)`, so samplers that share a
//! proposal mechanism consume identical noise.

use std::fmt::Write as _;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, param, Error, Result};
use crate::points::PointCloud;
use crate::proposal::DriftConfig;
use crate::rng::RngStream;
use crate::sbm::Acceptance;
use crate::stable::isotropic_noise_into;
use crate::targets::{ScoreModel, Target};

/// Unnormalized log-density provider for the density-based baselines.
pub trait LogDensity: Send + Sync {
    fn log_density(&self, x: &[f64]) -> Result<f64>;
}

impl LogDensity for Target {
    fn log_density(&self, x: &[f64]) -> Result<f64> {
        Target::log_density(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Ula,
    Mala,
    Fula,
    FrwMh,
    Mafla,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Ula => "ula",
            SamplerKind::Mala => "mala",
            SamplerKind::Fula => "fula",
            SamplerKind::FrwMh => "frw_mh",
            SamplerKind::Mafla => "mafla",
        }
    }

    pub fn is_adjusted(self) -> bool {
        matches!(self, SamplerKind::Mala | SamplerKind::FrwMh | SamplerKind::Mafla)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub alpha: f64,
    pub tau: f64,
    pub n_steps: usize,
    /// Noise multiplier of the random-walk baseline; defaults to `τ^{1/α}`.
    #[serde(default)]
    pub frw_step_scale: Option<f64>,
    /// Store every `k`-th state when set.
    #[serde(default)]
    pub record_every: Option<usize>,
    /// Replaces `c_α` in the drift, e.g. with 1 when the supplied field is
    /// already a full drift.
    #[serde(default)]
    pub drift_coefficient: Option<f64>,
}

impl ChainConfig {
    pub fn new(alpha: f64, tau: f64, n_steps: usize) -> Self {
        Self { alpha, tau, n_steps, frw_step_scale: None, record_every: None, drift_coefficient: None }
    }
}

/// Particles plus bookkeeping for a running chain.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub particles: PointCloud,
    pub step_index: usize,
    pub accept_count: Vec<u64>,
    pub frozen: Vec<bool>,
    pub nonfinite_proposals: u64,
    noise: Vec<ChaCha8Rng>,
    uniform: Vec<ChaCha8Rng>,
}

impl ChainState {
    pub fn new(init: PointCloud, seed: u64) -> Result<Self> {
        if init.rows().any(|r| r.iter().any(|v| !v.is_finite())) {
            return Err(Error::NonFinite("initial particles".into()));
        }
        let n = init.len();
        Ok(Self {
            particles: init,
            step_index: 0,
            accept_count: vec![0; n],
            frozen: vec![false; n],
            nonfinite_proposals: 0,
            noise: (0..n as u64).map(|i| RngStream::new(seed, 2 * i).rng()).collect(),
            uniform: (0..n as u64).map(|i| RngStream::new(seed, 2 * i + 1).rng()).collect(),
        })
    }
}

/// Models consulted by a step; which ones are required depends on the sampler.
#[derive(Clone, Copy)]
pub struct Models<'a> {
    pub score: &'a dyn ScoreModel,
    pub log_density: Option<&'a dyn LogDensity>,
    pub acceptance: Option<&'a dyn Acceptance>,
}

impl<'a> Models<'a> {
    pub fn score_only(score: &'a dyn ScoreModel) -> Self {
        Self { score, log_density: None, acceptance: None }
    }
}

enum Outcome {
    Moved,
    Rejected,
    Diverged,
}

struct Step<'a> {
    kind: SamplerKind,
    drift: DriftConfig,
    frw_scale: f64,
    models: Models<'a>,
}

impl<'a> Step<'a> {
    fn new(kind: SamplerKind, cfg: &ChainConfig, models: Models<'a>) -> Result<Self> {
        let drift = match kind {
            // Gaussian samplers are the α = 2 member of the family
            SamplerKind::Ula | SamplerKind::Mala => DriftConfig::new(2.0, cfg.tau)?,
            _ => DriftConfig::new(cfg.alpha, cfg.tau)?,
        };
        let drift = match cfg.drift_coefficient {
            Some(c) if c.is_finite() => drift.with_c(c),
            Some(_) => return Err(param("drift_coefficient must be finite")),
            None => drift,
        };
        match kind {
            SamplerKind::Mala | SamplerKind::FrwMh if models.log_density.is_none() => {
                return Err(Error::Capability(format!("sampler unavailable for this target: {} needs a log-density", kind.name())))
            }
            SamplerKind::Mafla if models.acceptance.is_none() => {
                return Err(Error::Capability("mafla needs an acceptance function".into()))
            }
            _ => {}
        }
        let frw_scale = cfg.frw_step_scale.unwrap_or(drift.noise_scale);
        if !(frw_scale > 0.0 && frw_scale.is_finite()) {
            return Err(param("frw_step_scale must be positive"));
        }
        Ok(Self { kind, drift, frw_scale, models })
    }

    fn run(&self, x: &mut [f64], noise: &mut ChaCha8Rng, uniform: &mut ChaCha8Rng, buf: &mut Buffers) -> Result<Outcome> {
        match self.advance(x, noise, uniform, buf) {
            Err(Error::NonFinite(_)) => Ok(Outcome::Diverged),
            other => other,
        }
    }

    fn advance(&self, x: &mut [f64], noise: &mut ChaCha8Rng, uniform: &mut ChaCha8Rng, buf: &mut Buffers) -> Result<Outcome> {
        let d = x.len();
        let cfg = &self.drift;
        isotropic_noise_into(cfg.alpha, noise, &mut buf.xi);
        if self.kind == SamplerKind::FrwMh {
            for i in 0..d {
                buf.xp[i] = x[i] + self.frw_scale * buf.xi[i];
            }
            if buf.xp.iter().any(|v| !v.is_finite()) {
                return Ok(Outcome::Rejected);
            }
            let lp = self.models.log_density.unwrap();
            let log_ratio = lp.log_density(&buf.xp)? - lp.log_density(x)?;
            return Ok(self.accept_mh(log_ratio, x, uniform, buf));
        }
        self.models.score.score_into(x, &mut buf.sx)?;
        for i in 0..d {
            buf.xp[i] = x[i] + cfg.tau * cfg.c_alpha * buf.sx[i] + cfg.noise_scale * buf.xi[i];
        }
        let finite = buf.xp.iter().all(|v| v.is_finite());
        match self.kind {
            SamplerKind::Ula | SamplerKind::Fula => {
                if !finite {
                    return Ok(Outcome::Diverged);
                }
                x.copy_from_slice(&buf.xp);
                Ok(Outcome::Moved)
            }
            SamplerKind::Mafla => {
                let u: f64 = uniform.random();
                if !finite {
                    return Ok(Outcome::Rejected);
                }
                let a = self.models.acceptance.unwrap().prob(&buf.xp, x)?;
                if u < a {
                    x.copy_from_slice(&buf.xp);
                    Ok(Outcome::Moved)
                } else {
                    Ok(Outcome::Rejected)
                }
            }
            SamplerKind::Mala => {
                if !finite {
                    return Ok(Outcome::Rejected);
                }
                let lp = self.models.log_density.unwrap();
                self.models.score.score_into(&buf.xp, &mut buf.sxp)?;
                let t = cfg.tau;
                let mut fwd = 0.0;
                let mut rev = 0.0;
                for i in 0..d {
                    fwd += (buf.xp[i] - x[i] - t * buf.sx[i]).powi(2);
                    rev += (x[i] - buf.xp[i] - t * buf.sxp[i]).powi(2);
                }
                let log_ratio = lp.log_density(&buf.xp)? - lp.log_density(x)? - (rev - fwd) / (4.0 * t);
                Ok(self.accept_mh(log_ratio, x, uniform, buf))
            }
            SamplerKind::FrwMh => unreachable!(),
        }
    }

    fn accept_mh(&self, log_ratio: f64, x: &mut [f64], uniform: &mut ChaCha8Rng, buf: &Buffers) -> Outcome {
        let u: f64 = uniform.random();
        if log_ratio >= 0.0 || u.ln() < log_ratio {
            x.copy_from_slice(&buf.xp);
            Outcome::Moved
        } else {
            Outcome::Rejected
        }
    }
}

struct Buffers {
    xi: Vec<f64>,
    xp: Vec<f64>,
    sx: Vec<f64>,
    sxp: Vec<f64>,
}

impl Buffers {
    fn new(d: usize) -> Self {
        Self { xi: vec![0.0; d], xp: vec![0.0; d], sx: vec![0.0; d], sxp: vec![0.0; d] }
    }
}

/// Advance every particle by one step of `kind`. Returns the number of
/// accepted moves.
pub fn step_chain(state: &mut ChainState, kind: SamplerKind, cfg: &ChainConfig, models: Models<'_>) -> Result<u32> {
    let step = Step::new(kind, cfg, models)?;
    step_with(state, &step)
}

fn step_with(state: &mut ChainState, step: &Step<'_>) -> Result<u32> {
    check_shape(step.models.score.dim(), state.particles.dim())?;
    let mut buf = Buffers::new(state.particles.dim());
    let mut accepted = 0;
    for i in 0..state.particles.len() {
        if state.frozen[i] {
            continue;
        }
        let x = state.particles.row_mut(i);
        match step.run(x, &mut state.noise[i], &mut state.uniform[i], &mut buf)? {
            Outcome::Moved => {
                state.accept_count[i] += 1;
                accepted += 1;
            }
            Outcome::Rejected => {
                if buf.xp.iter().any(|v| !v.is_finite()) {
                    state.nonfinite_proposals += 1;
                }
            }
            Outcome::Diverged => {
                if step.kind.is_adjusted() {
                    state.nonfinite_proposals += 1;
                } else {
                    state.frozen[i] = true;
                }
            }
        }
    }
    state.step_index += 1;
    Ok(accepted)
}

pub fn step_fula(state: &mut ChainState, score: &dyn ScoreModel, cfg: &ChainConfig) -> Result<u32> {
    step_chain(state, SamplerKind::Fula, cfg, Models::score_only(score))
}

pub fn step_ula(state: &mut ChainState, score: &dyn ScoreModel, tau: f64) -> Result<u32> {
    step_chain(state, SamplerKind::Ula, &ChainConfig::new(2.0, tau, 0), Models::score_only(score))
}

pub fn step_mala(state: &mut ChainState, score: &dyn ScoreModel, log_density: &dyn LogDensity, tau: f64) -> Result<u32> {
    let models = Models { score, log_density: Some(log_density), acceptance: None };
    step_chain(state, SamplerKind::Mala, &ChainConfig::new(2.0, tau, 0), models)
}

pub fn step_frw_mh(
    state: &mut ChainState,
    score: &dyn ScoreModel,
    log_density: &dyn LogDensity,
    alpha: f64,
    step_scale: f64,
) -> Result<u32> {
    let cfg = ChainConfig { frw_step_scale: Some(step_scale), ..ChainConfig::new(alpha, 1.0, 0) };
    let models = Models { score, log_density: Some(log_density), acceptance: None };
    step_chain(state, SamplerKind::FrwMh, &cfg, models)
}

/// Output of a sampler run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResult {
    pub sampler: SamplerKind,
    pub n_steps: usize,
    /// `(step, particles)` snapshots when recording was requested.
    pub trajectory: Option<Vec<(usize, PointCloud)>>,
    pub final_particles: PointCloud,
    pub acceptance_rate: Vec<f64>,
    /// Accepted moves per step, summed over particles.
    pub accept_history: Vec<u32>,
    pub frozen_particles: usize,
    pub nonfinite_proposals: u64,
    #[serde(skip)]
    pub wall_time: f64,
}

impl RunResult {
    pub fn mean_acceptance(&self) -> f64 {
        if self.acceptance_rate.is_empty() {
            return 0.0;
        }
        self.acceptance_rate.iter().sum::<f64>() / self.acceptance_rate.len() as f64
    }

    /// Finite final states, or all recorded snapshots after the burn-in
    /// fraction when a trajectory is present.
    pub fn samples(&self, burn_in_frac: f64) -> PointCloud {
        match &self.trajectory {
            Some(traj) if !traj.is_empty() => {
                let cut = (burn_in_frac * self.n_steps as f64).ceil() as usize;
                let mut out = PointCloud::new(self.final_particles.dim());
                for (step, pts) in traj.iter().filter(|(s, _)| *s >= cut) {
                    let _ = step;
                    for r in pts.rows() {
                        if r.iter().all(|v| v.is_finite()) {
                            out.push(r);
                        }
                    }
                }
                out
            }
            _ => self.final_particles.finite_rows(),
        }
    }

    /// Long format `step,particle,coordinate,value` over recorded snapshots
    /// (or the final state alone).
    pub fn to_csv_long(&self) -> String {
        let mut s = String::from("step,particle,coordinate,value\n");
        let final_snap = [(self.n_steps, self.final_particles.clone())];
        let snaps: &[(usize, PointCloud)] = self.trajectory.as_deref().unwrap_or(&final_snap);
        for (step, pts) in snaps {
            for (i, r) in pts.rows().enumerate() {
                for (j, v) in r.iter().enumerate() {
                    let _ = writeln!(s, "{step},{i},{j},{v}");
                }
            }
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "sampler": self.sampler.name(),
            "n_steps": self.n_steps,
            "n_particles": self.final_particles.len(),
            "mean_acceptance": self.mean_acceptance(),
            "acceptance_rate": self.acceptance_rate,
            "frozen_particles": self.frozen_particles,
            "nonfinite_proposals": self.nonfinite_proposals,
        })
    }
}

/// Run `N` independent chains for `cfg.n_steps` steps.
pub fn run_parallel(
    kind: SamplerKind,
    init: &PointCloud,
    models: Models<'_>,
    cfg: &ChainConfig,
    seed: u64,
) -> Result<RunResult> {
    let start = Instant::now();
    let step = Step::new(kind, cfg, models)?;
    let mut state = ChainState::new(init.clone(), seed)?;
    let mut history = Vec::with_capacity(cfg.n_steps);
    let mut traj = cfg.record_every.map(|_| vec![(0, state.particles.clone())]);
    for t in 0..cfg.n_steps {
        history.push(step_with(&mut state, &step)?);
        if let (Some(k), Some(tr)) = (cfg.record_every, traj.as_mut()) {
            if (t + 1) % k.max(1) == 0 {
                tr.push((t + 1, state.particles.clone()));
            }
        }
    }
    Ok(finish(kind, cfg.n_steps, state, history, traj, start))
}

fn finish(
    kind: SamplerKind,
    n_steps: usize,
    state: ChainState,
    accept_history: Vec<u32>,
    trajectory: Option<Vec<(usize, PointCloud)>>,
    start: Instant,
) -> RunResult {
    let acceptance_rate = if kind.is_adjusted() {
        state.accept_count.iter().map(|&c| if n_steps == 0 { 0.0 } else { c as f64 / n_steps as f64 }).collect()
    } else {
        vec![1.0; state.accept_count.len()]
    };
    RunResult {
        sampler: kind,
        n_steps,
        trajectory,
        frozen_particles: state.frozen.iter().filter(|&&f| f).count(),
        nonfinite_proposals: state.nonfinite_proposals,
        final_particles: state.particles,
        acceptance_rate,
        accept_history,
        wall_time: start.elapsed().as_secs_f64(),
    }
}

/// Particle-parallel MAFLA: batched drift and noise, acceptance `a(x', x)`,
/// per-particle uniform, rejected particles keep their state.
pub fn run_mafla_parallel(
    init: &PointCloud,
    score: &dyn ScoreModel,
    acceptance: &dyn Acceptance,
    cfg: &ChainConfig,
    seed: u64,
) -> Result<RunResult> {
    let models = Models { score, log_density: None, acceptance: Some(acceptance) };
    run_parallel(SamplerKind::Mafla, init, models, cfg, seed)
}

/// Single-chain MAFLA using streams `(seed, 0)` and `(seed, 1)`.
pub fn run_mafla_sequential(
    x0: &[f64],
    score: &dyn ScoreModel,
    acceptance: &dyn Acceptance,
    cfg: &ChainConfig,
    seed: u64,
) -> Result<RunResult> {
    let start = Instant::now();
    let models = Models { score, log_density: None, acceptance: Some(acceptance) };
    let step = Step::new(SamplerKind::Mafla, cfg, models)?;
    check_shape(score.dim(), x0.len())?;
    let mut x = x0.to_vec();
    let mut noise = RngStream::new(seed, 0).rng();
    let mut uniform = RngStream::new(seed, 1).rng();
    let mut buf = Buffers::new(x.len());
    let mut history = Vec::with_capacity(cfg.n_steps);
    let mut accepted = 0u64;
    let mut nonfinite = 0u64;
    let mut traj = cfg.record_every.map(|_| vec![(0, PointCloud::from_flat(x.len(), x.clone()).unwrap())]);
    for t in 0..cfg.n_steps {
        let moved = match step.run(&mut x, &mut noise, &mut uniform, &mut buf)? {
            Outcome::Moved => 1,
            Outcome::Rejected if buf.xp.iter().any(|v| !v.is_finite()) => {
                nonfinite += 1;
                0
            }
            Outcome::Rejected => 0,
            Outcome::Diverged => {
                nonfinite += 1;
                0
            }
        };
        accepted += moved as u64;
        history.push(moved);
        if let (Some(k), Some(tr)) = (cfg.record_every, traj.as_mut()) {
            if (t + 1) % k.max(1) == 0 {
                tr.push((t + 1, PointCloud::from_flat(x.len(), x.clone()).unwrap()));
            }
        }
    }
    let state = ChainState {
        particles: PointCloud::from_flat(x.len(), x)?,
        step_index: cfg.n_steps,
        accept_count: vec![accepted],
        frozen: vec![false],
        nonfinite_proposals: nonfinite,
        noise: Vec::new(),
        uniform: Vec::new(),
    };
    Ok(finish(SamplerKind::Mafla, cfg.n_steps, state, history, traj, start))
}
