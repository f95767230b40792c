//! Score balance matching: the gradient form of detailed balance, its loss
//! family, curriculum pairs, and training of an acceptance network.
//!
//! Residuals are stacked as `(∇_x, ∇_{x'})`, each block of length `d`.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffnet::{entropy_and_dlogit, sigmoid, Adam, AdamConfig, Mlp};
use crate::error::{check_shape, param, Error, Result};
use crate::points::{dot, PointCloud};
use crate::proposal::{propose, proposal_scores, DriftConfig, JacobianMode, ProposalPair, ProposalScores};
use crate::rng::RngStream;
use crate::targets::{ScoreModel, Target};

/// An acceptance function `a(x_new, x_old) ∈ [0, 1]`.
pub trait Acceptance: Send + Sync {
    fn prob(&self, x_new: &[f64], x_old: &[f64]) -> Result<f64>;

    /// `(∇_{x_new}, ∇_{x_old})` of `log a(x_new, x_old)`.
    fn grad_log(&self, x_new: &[f64], x_old: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

/// `a ≡ value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantAcceptance(pub f64);

impl Acceptance for ConstantAcceptance {
    fn prob(&self, _: &[f64], _: &[f64]) -> Result<f64> {
        Ok(self.0)
    }

    fn grad_log(&self, x_new: &[f64], x_old: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        Ok((vec![0.0; x_new.len()], vec![0.0; x_old.len()]))
    }
}

/// `a = σ(g(x_new, x_old))` for a scalar-logit network on the concatenation.
#[derive(Debug, Clone)]
pub struct NetAcceptance {
    pub net: Mlp,
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(a.len() + b.len());
    z.extend_from_slice(a);
    z.extend_from_slice(b);
    z
}

impl Acceptance for NetAcceptance {
    fn prob(&self, x_new: &[f64], x_old: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.net.logit(&concat(x_new, x_old))?))
    }

    fn grad_log(&self, x_new: &[f64], x_old: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let z = concat(x_new, x_old);
        let ng = self.net.nested(&z, &[1.0])?;
        let w = 1.0 - sigmoid(ng.value[0]);
        let d = x_new.len();
        let g: Vec<f64> = ng.input_grad.iter().map(|v| w * v).collect();
        Ok((g[..d].to_vec(), g[d..].to_vec()))
    }
}

/// Barker's rule `a = ρ/(1+ρ)` for a Gaussian proposal `N(x + τ s(x), 2τ I)`,
/// with `ρ = p(x')q(x|x')/(p(x)q(x'|x))`. Needs a target with a closed-form
/// score Jacobian.
#[derive(Debug, Clone)]
pub struct BarkerAcceptance {
    pub target: Target,
    pub tau: f64,
}

impl BarkerAcceptance {
    fn log_q(&self, to: &[f64], from: &[f64]) -> Result<f64> {
        let s = self.target.score(from)?;
        Ok(-(0..to.len()).map(|i| (to[i] - from[i] - self.tau * s[i]).powi(2)).sum::<f64>() / (4.0 * self.tau))
    }

    pub fn log_ratio(&self, x_new: &[f64], x_old: &[f64]) -> Result<f64> {
        Ok(self.target.log_density(x_new)? - self.target.log_density(x_old)? + self.log_q(x_old, x_new)?
            - self.log_q(x_new, x_old)?)
    }

    /// `(∇_{x_new}, ∇_{x_old})` of `log ρ(x_new, x_old)`.
    fn grad_log_ratio(&self, x_new: &[f64], x_old: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let d = x_new.len();
        let t = self.tau;
        let s_new = self.target.score(x_new)?;
        let s_old = self.target.score(x_old)?;
        // forward residual m = x_new - x_old - τ s(x_old); reverse n = x_old - x_new - τ s(x_new)
        let m: Vec<f64> = (0..d).map(|i| x_new[i] - x_old[i] - t * s_old[i]).collect();
        let n: Vec<f64> = (0..d).map(|i| x_old[i] - x_new[i] - t * s_new[i]).collect();
        let mut hm = vec![0.0; d];
        let mut hn = vec![0.0; d];
        self.target.score_jacobian_t_vec(x_old, &m, &mut hm)?;
        self.target.score_jacobian_t_vec(x_new, &n, &mut hn)?;
        let k = 1.0 / (2.0 * t);
        // log q(x_old|x_new) = -k/2 |n|², log q(x_new|x_old) = -k/2 |m|²
        let g_new = (0..d).map(|i| s_new[i] + k * (n[i] + t * hn[i]) + k * m[i]).collect();
        let g_old = (0..d).map(|i| -s_old[i] - k * n[i] - k * (m[i] + t * hm[i])).collect();
        Ok((g_new, g_old))
    }
}

impl Acceptance for BarkerAcceptance {
    fn prob(&self, x_new: &[f64], x_old: &[f64]) -> Result<f64> {
        Ok(sigmoid(self.log_ratio(x_new, x_old)?))
    }

    fn grad_log(&self, x_new: &[f64], x_old: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let w = 1.0 - self.prob(x_new, x_old)?;
        let (a, b) = self.grad_log_ratio(x_new, x_old)?;
        Ok((a.iter().map(|v| w * v).collect(), b.iter().map(|v| w * v).collect()))
    }
}

/// `Δp + Δq` for one pair, stacked `(∇_x, ∇_{x'})`:
/// `Δp = (-s(x), s(x'))`, `Δq = (rev_x - fwd_x, rev_xprime - fwd_xprime)`.
pub fn balance_target(s_x: &[f64], s_xprime: &[f64], q: &ProposalScores) -> (Vec<f64>, Vec<f64>) {
    let d = s_x.len();
    let mut dp = Vec::with_capacity(2 * d);
    dp.extend(s_x.iter().map(|v| -v));
    dp.extend_from_slice(s_xprime);
    let mut dq = Vec::with_capacity(2 * d);
    dq.extend((0..d).map(|i| q.rev_x[i] - q.fwd_x[i]));
    dq.extend((0..d).map(|i| q.rev_xprime[i] - q.fwd_xprime[i]));
    (dp, dq)
}

/// `∇log a(x',x) − ∇log a(x,x') − Δp − Δq`.
pub fn residual<A: Acceptance + ?Sized, S: ScoreModel + ?Sized>(
    x: &[f64],
    x_prime: &[f64],
    accept: &A,
    target_score: &S,
    q: &ProposalScores,
) -> Result<Vec<f64>> {
    check_shape(x.len(), x_prime.len())?;
    if x.iter().chain(x_prime).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residual inputs".into()));
    }
    let d = x.len();
    let s_x = target_score.score(x)?;
    let s_xp = target_score.score(x_prime)?;
    let (dp, dq) = balance_target(&s_x, &s_xp, q);
    let (f_new, f_old) = accept.grad_log(x_prime, x)?;
    let (b_new, b_old) = accept.grad_log(x, x_prime)?;
    let mut r = Vec::with_capacity(2 * d);
    r.extend((0..d).map(|i| f_old[i] - b_new[i] - dp[i] - dq[i]));
    r.extend((0..d).map(|i| f_new[i] - b_old[i] - dp[d + i] - dq[d + i]));
    Ok(r)
}

/// Mean of `‖R‖₂²` over residual rows.
pub fn loss_l2(residuals: &PointCloud) -> f64 {
    if residuals.is_empty() {
        return 0.0;
    }
    residuals.rows().map(|r| dot(r, r)).sum::<f64>() / residuals.len() as f64
}

/// Mean of `‖R‖_α^α = Σ|R_i|^α`.
pub fn loss_alpha(residuals: &PointCloud, alpha: f64) -> Result<f64> {
    crate::stable::check_alpha_open(alpha)?;
    if residuals.is_empty() {
        return Ok(0.0);
    }
    Ok(residuals.rows().map(|r| r.iter().map(|v| v.abs().powf(alpha)).sum::<f64>()).sum::<f64>() / residuals.len() as f64)
}

pub fn loss_combined(residuals: &PointCloud, alpha: f64, lambda_alpha: f64) -> Result<f64> {
    Ok(loss_l2(residuals) + lambda_alpha * loss_alpha(residuals, alpha)?)
}

/// Mean clamped binary entropy `a ln a + (1-a) ln(1-a)`.
pub fn entropy_term(a_values: &[f64]) -> f64 {
    const EPS: f64 = 1e-7;
    if a_values.is_empty() {
        return 0.0;
    }
    a_values
        .iter()
        .map(|&a| {
            let a = a.clamp(EPS, 1.0 - EPS);
            a * a.ln() + (1.0 - a) * (1.0 - a).ln()
        })
        .sum::<f64>()
        / a_values.len() as f64
}

/// Interpolated pairs `(x̃, η v' + (1-η) x̃)` with `v' ~ q(·|x̃)`.
pub fn curriculum_pairs<S: ScoreModel + ?Sized, R: Rng + ?Sized>(
    data: &PointCloud,
    score: &S,
    cfg: &DriftConfig,
    eta: f64,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(param(format!("eta must lie in [0, 1], got {eta}")));
    }
    data.rows()
        .map(|x| {
            let v = propose(x, score, cfg, rng)?.x_prime;
            let xp = x.iter().zip(&v).map(|(a, b)| eta * b + (1.0 - eta) * a).collect();
            Ok((x.to_vec(), xp))
        })
        .collect()
}

/// Pairs with their network-independent balance target `Δp + Δq`.
#[derive(Debug, Clone)]
pub struct SbmBatch {
    pub pairs: Vec<(Vec<f64>, Vec<f64>)>,
    pub delta_p: PointCloud,
    pub delta_q: PointCloud,
}

impl SbmBatch {
    pub fn build<S: ScoreModel + ?Sized>(
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        score: &S,
        cfg: &DriftConfig,
        mode: JacobianMode,
    ) -> Result<Self> {
        Self::build_with_field(pairs, score, score, cfg, mode)
    }

    /// As [`SbmBatch::build`], with the proposal drift `c_α · field(x)` taken
    /// from a separate vector field while `Δp` still uses the target score.
    pub fn build_with_field<S: ScoreModel + ?Sized, F: ScoreModel + ?Sized>(
        pairs: Vec<(Vec<f64>, Vec<f64>)>,
        score: &S,
        field: &F,
        cfg: &DriftConfig,
        mode: JacobianMode,
    ) -> Result<Self> {
        let d = score.dim();
        check_shape(d, field.dim())?;
        let mut delta_p = PointCloud::new(2 * d);
        let mut delta_q = PointCloud::new(2 * d);
        let mut s_x = vec![0.0; d];
        let mut s_xp = vec![0.0; d];
        for (x, xp) in &pairs {
            let pair = ProposalPair::from_points(field, x, xp, cfg)?;
            let q = proposal_scores(&pair, cfg, field, mode)?;
            score.score_into(x, &mut s_x)?;
            score.score_into(xp, &mut s_xp)?;
            let (dp, dq) = balance_target(&s_x, &s_xp, &q);
            delta_p.push(&dp);
            delta_q.push(&dq);
        }
        Ok(Self { pairs, delta_p, delta_q })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Residual rows for an arbitrary acceptance function.
    pub fn residuals<A: Acceptance + ?Sized>(&self, accept: &A) -> Result<PointCloud> {
        let d = self.delta_p.dim() / 2;
        let mut out = PointCloud::new(2 * d);
        for (k, (x, xp)) in self.pairs.iter().enumerate() {
            let (f_new, f_old) = accept.grad_log(xp, x)?;
            let (b_new, b_old) = accept.grad_log(x, xp)?;
            let (dp, dq) = (self.delta_p.row(k), self.delta_q.row(k));
            let mut r = Vec::with_capacity(2 * d);
            r.extend((0..d).map(|i| f_old[i] - b_new[i] - dp[i] - dq[i]));
            r.extend((0..d).map(|i| f_new[i] - b_old[i] - dp[d + i] - dq[d + i]));
            out.push(&r);
        }
        Ok(out)
    }
}

/// Batch means of the loss components.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossParts {
    pub l2: f64,
    pub alpha: f64,
    pub entropy: f64,
    pub combined: f64,
}

/// Loss `mean(‖R‖² + λ_α ‖R‖_α^α + λ H(a(x',x)))` and its exact parameter
/// gradient for a network acceptance.
pub fn sbm_loss_and_grad(
    net: &Mlp,
    batch: &SbmBatch,
    alpha: f64,
    lambda_alpha: f64,
    lambda_entropy: f64,
) -> Result<(LossParts, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Empty("SBM batch".into()));
    }
    let d = batch.delta_p.dim() / 2;
    check_shape(2 * d, net.input_dim())?;
    let mut grad = vec![0.0; net.params.len()];
    let mut parts = LossParts::default();
    let mut rbar = vec![0.0; 2 * d];
    for (k, (x, xp)) in batch.pairs.iter().enumerate() {
        let ng1 = net.nested(&concat(xp, x), &[1.0])?;
        let ng2 = net.nested(&concat(x, xp), &[1.0])?;
        let (s1, s2) = (sigmoid(ng1.value[0]), sigmoid(ng2.value[0]));
        let (g1, g2) = (&ng1.input_grad, &ng2.input_grad);
        let (dp, dq) = (batch.delta_p.row(k), batch.delta_q.row(k));
        let mut l2 = 0.0;
        let mut la = 0.0;
        for i in 0..d {
            let rx = (1.0 - s1) * g1[d + i] - (1.0 - s2) * g2[i] - dp[i] - dq[i];
            let rxp = (1.0 - s1) * g1[i] - (1.0 - s2) * g2[d + i] - dp[d + i] - dq[d + i];
            for (slot, r) in [(i, rx), (d + i, rxp)] {
                l2 += r * r;
                la += r.abs().powf(alpha);
                rbar[slot] = 2.0 * r + lambda_alpha * alpha * r.abs().powf(alpha - 1.0) * r.signum();
            }
        }
        let (h, dh) = entropy_and_dlogit(ng1.value[0]);
        parts.l2 += l2;
        parts.alpha += la;
        parts.entropy += h;
        let (rb_x, rb_xp) = rbar.split_at(d);
        // first evaluation: slots (x', x)
        let mut gbar1 = Vec::with_capacity(2 * d);
        gbar1.extend(rb_xp.iter().map(|v| (1.0 - s1) * v));
        gbar1.extend(rb_x.iter().map(|v| (1.0 - s1) * v));
        let ybar1 = -s1 * (1.0 - s1) * (dot(&g1[..d], rb_xp) + dot(&g1[d..], rb_x)) + lambda_entropy * dh;
        net.nested_backward(&ng1, &[ybar1], &gbar1, &mut grad);
        // second evaluation: slots (x, x')
        let mut gbar2 = Vec::with_capacity(2 * d);
        gbar2.extend(rb_x.iter().map(|v| -(1.0 - s2) * v));
        gbar2.extend(rb_xp.iter().map(|v| -(1.0 - s2) * v));
        let ybar2 = s2 * (1.0 - s2) * (dot(&g2[..d], rb_x) + dot(&g2[d..], rb_xp));
        net.nested_backward(&ng2, &[ybar2], &gbar2, &mut grad);
    }
    let n = batch.len() as f64;
    parts.l2 /= n;
    parts.alpha /= n;
    parts.entropy /= n;
    parts.combined = parts.l2 + lambda_alpha * parts.alpha + lambda_entropy * parts.entropy;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((parts, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SbmConfig {
    #[serde(default = "default_lambda_alpha")]
    pub lambda_alpha: f64,
    #[serde(default = "default_lambda_entropy")]
    pub lambda_entropy: f64,
    /// Piecewise-linear `(epoch, η)` breakpoints; defaults to 0.1 for the
    /// first 20% of epochs then a linear ramp to 1.
    #[serde(default)]
    pub eta_schedule: Option<Vec<(usize, f64)>>,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    /// Fresh curriculum pairs drawn at the start of every epoch.
    #[serde(default = "default_pairs")]
    pub pairs_per_epoch: usize,
    pub epochs: usize,
    #[serde(default)]
    pub adam: AdamConfig,
    #[serde(default)]
    pub jacobian: JacobianMode,
}

fn default_lambda_alpha() -> f64 {
    1.0
}
fn default_lambda_entropy() -> f64 {
    0.01
}
fn default_batch() -> usize {
    128
}
fn default_pairs() -> usize {
    1024
}

impl SbmConfig {
    pub fn new(epochs: usize) -> Self {
        Self {
            lambda_alpha: default_lambda_alpha(),
            lambda_entropy: default_lambda_entropy(),
            eta_schedule: None,
            batch_size: default_batch(),
            pairs_per_epoch: default_pairs(),
            epochs,
            adam: AdamConfig::default(),
            jacobian: JacobianMode::FiniteDifference,
        }
    }

    pub fn schedule(&self) -> Vec<(usize, f64)> {
        match &self.eta_schedule {
            Some(s) => s.clone(),
            None => {
                let warm = self.epochs / 5;
                vec![(0, 0.1), (warm, 0.1), (self.epochs.saturating_sub(1).max(warm + 1), 1.0)]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda_alpha < 0.0 || self.lambda_entropy < 0.0 {
            return Err(param("loss weights must be non-negative"));
        }
        if self.batch_size < 1 || self.pairs_per_epoch < 1 {
            return Err(param("batch_size and pairs_per_epoch must be positive"));
        }
        let s = self.schedule();
        if s.first().map(|p| p.0) != Some(0) {
            return Err(param("eta schedule must start at epoch 0"));
        }
        for w in s.windows(2) {
            if w[1].0 < w[0].0 || w[1].1 < w[0].1 {
                return Err(param("eta schedule must be nondecreasing in epoch and eta"));
            }
        }
        if s.iter().any(|p| !(0.0..=1.0).contains(&p.1)) {
            return Err(param("eta values must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn eta_at(&self, epoch: usize) -> f64 {
        let s = self.schedule();
        let mut eta = s[0].1;
        for w in s.windows(2) {
            let ((e0, v0), (e1, v1)) = (w[0], w[1]);
            if epoch >= e1 {
                eta = v1;
            } else if epoch >= e0 {
                eta = if e1 == e0 { v1 } else { v0 + (v1 - v0) * (epoch - e0) as f64 / (e1 - e0) as f64 };
                break;
            }
        }
        eta
    }
}

/// One line of the training trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub epoch: usize,
    pub eta: f64,
    pub loss_l2: f64,
    pub loss_alpha: f64,
    pub entropy: f64,
    pub combined: f64,
}

pub const TRACE_COLUMNS: [&str; 6] = ["epoch", "eta", "loss_l2", "loss_alpha", "entropy", "combined"];

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut s = TRACE_COLUMNS.join(",");
    s.push('\n');
    for r in trace {
        let _ = writeln!(s, "{},{},{},{},{},{}", r.epoch, r.eta, r.loss_l2, r.loss_alpha, r.entropy, r.combined);
    }
    s
}

/// Train `net` in place. `data(n, rng)` supplies target samples `x̃`. On a
/// non-finite loss or gradient the update is skipped, leaving the last finite
/// parameters, and an error is returned.
pub fn train_acceptance<S, F>(
    net: &mut Mlp,
    score: &S,
    data: F,
    drift_cfg: &DriftConfig,
    cfg: &SbmConfig,
    stream: RngStream,
) -> Result<Vec<TraceRow>>
where
    S: ScoreModel + ?Sized,
    F: FnMut(usize, &mut rand_chacha::ChaCha8Rng) -> Result<PointCloud>,
{
    train_acceptance_with_field(net, score, score, data, drift_cfg, cfg, stream)
}

/// Training for proposals whose drift is `c_α · field(x)` rather than
/// `c_α · score(x)`.
pub fn train_acceptance_with_field<S, V, F>(
    net: &mut Mlp,
    score: &S,
    field: &V,
    mut data: F,
    drift_cfg: &DriftConfig,
    cfg: &SbmConfig,
    stream: RngStream,
) -> Result<Vec<TraceRow>>
where
    S: ScoreModel + ?Sized,
    V: ScoreModel + ?Sized,
    F: FnMut(usize, &mut rand_chacha::ChaCha8Rng) -> Result<PointCloud>,
{
    cfg.validate()?;
    let mut rng = stream.rng();
    let mut opt = Adam::new(net.params.len(), cfg.adam);
    let mut trace = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let eta = cfg.eta_at(epoch);
        let xs = data(cfg.pairs_per_epoch, &mut rng)?;
        let pairs = curriculum_pairs(&xs, field, drift_cfg, eta, &mut rng)?;
        let mut sum = LossParts::default();
        let mut batches = 0.0;
        for chunk in pairs.chunks(cfg.batch_size) {
            let batch = SbmBatch::build_with_field(chunk.to_vec(), score, field, drift_cfg, cfg.jacobian)?;
            let (parts, grad) = sbm_loss_and_grad(net, &batch, drift_cfg.alpha, cfg.lambda_alpha, cfg.lambda_entropy)?;
            if !parts.combined.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!("SBM loss {} at epoch {epoch}", parts.combined)));
            }
            opt.step(&mut net.params, &grad);
            sum.l2 += parts.l2;
            sum.alpha += parts.alpha;
            sum.entropy += parts.entropy;
            sum.combined += parts.combined;
            batches += 1.0;
        }
        trace.push(TraceRow {
            epoch,
            eta,
            loss_l2: sum.l2 / batches,
            loss_alpha: sum.alpha / batches,
            entropy: sum.entropy / batches,
            combined: sum.combined / batches,
        });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffnet::{Activation, Architecture, Head};
    use crate::targets::{Component, TargetKind, TargetSpec};

    fn gaussian(dim: usize, scale: f64) -> Target {
        Target::new(TargetSpec::mixture(
            TargetKind::GaussianMixture,
            None,
            vec![Component { weight: 1.0, center: vec![0.3; dim], scale }],
        ))
        .unwrap()
    }

    fn random_pairs(dim: usize, n: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mut rng = RngStream::new(seed, 0).rng();
        (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                let xp: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
                (x, xp)
            })
            .collect()
    }

    #[test]
    fn barker_gradient_matches_fd() {
        let t = gaussian(2, 0.8);
        let b = BarkerAcceptance { target: t, tau: 0.2 };
        let (x, xp) = ([0.4, -1.0], [1.2, 0.3]);
        let (g_new, g_old) = b.grad_log(&xp, &x).unwrap();
        let f = |n: &[f64], o: &[f64]| b.prob(n, o).unwrap().ln();
        let h = 1e-6;
        for i in 0..2 {
            let mut u = xp;
            let mut w = xp;
            u[i] += h;
            w[i] -= h;
            assert!(((f(&u, &x) - f(&w, &x)) / (2.0 * h) - g_new[i]).abs() < 1e-7);
            let mut u = x;
            let mut w = x;
            u[i] += h;
            w[i] -= h;
            assert!(((f(&xp, &u) - f(&xp, &w)) / (2.0 * h) - g_old[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn barker_oracle_zeroes_residual() {
        for seed in 0..20 {
            let t = gaussian(2, 0.7);
            let cfg = DriftConfig::new(2.0, 0.1).unwrap();
            let b = BarkerAcceptance { target: t.clone(), tau: cfg.tau };
            let batch = SbmBatch::build(random_pairs(2, 32, seed), &t, &cfg, JacobianMode::Analytic).unwrap();
            let res = batch.residuals(&b).unwrap();
            assert!(loss_l2(&res) < 1e-10, "{}", loss_l2(&res));
            for (x, xp) in batch.pairs.iter().take(3) {
                let pair = ProposalPair::from_points(&t, x, xp, &cfg).unwrap();
                let q = proposal_scores(&pair, &cfg, &t, JacobianMode::Analytic).unwrap();
                let r = residual(x, xp, &b, &t, &q).unwrap();
                assert!(r.iter().all(|v| v.abs() < 1e-6));
            }
        }
    }

    #[test]
    fn constant_acceptance_residual() {
        let t = gaussian(1, 1.0);
        let cfg = DriftConfig::new(1.5, 0.1).unwrap();
        let batch = SbmBatch::build(random_pairs(1, 5, 3), &t, &cfg, JacobianMode::FiniteDifference).unwrap();
        let res = batch.residuals(&ConstantAcceptance(0.3)).unwrap();
        for k in 0..5 {
            for i in 0..2 {
                let want = -(batch.delta_p.row(k)[i] + batch.delta_q.row(k)[i]);
                assert_eq!(res.row(k)[i], want);
            }
        }
    }

    #[test]
    fn identical_points_with_zero_drift() {
        let zero = crate::targets::FnScore::new(2, |_: &[f64], o: &mut [f64]| o.iter_mut().for_each(|v| *v = 0.0));
        let cfg = DriftConfig::new(1.5, 0.1).unwrap();
        let x = [0.5, -0.5];
        let pair = ProposalPair::from_points(&zero, &x, &x, &cfg).unwrap();
        let q = proposal_scores(&pair, &cfg, &zero, JacobianMode::FiniteDifference).unwrap();
        let r = residual(&x, &x, &ConstantAcceptance(0.4), &zero, &q).unwrap();
        assert_eq!(r, vec![0.0; 4]);
        // a general network is not slot-symmetric, so only the two blocks cancel
        let net = Mlp::acceptance(2, &[8], Activation::Tanh, RngStream::new(1, 0)).unwrap();
        let r = residual(&x, &x, &NetAcceptance { net }, &zero, &q).unwrap();
        for i in 0..2 {
            assert_eq!(r[i], -r[2 + i]);
        }
    }

    #[test]
    fn loss_identities() {
        let zero = PointCloud::zeros(3, 4);
        assert_eq!(loss_l2(&zero), 0.0);
        assert_eq!(loss_alpha(&zero, 1.5).unwrap(), 0.0);
        let ones = PointCloud::from_rows(4, &[vec![1.0; 4]]).unwrap();
        assert_eq!(loss_alpha(&ones, 1.5).unwrap(), 4.0);
        assert_eq!(loss_l2(&ones), 4.0);
        let r = PointCloud::from_rows(2, &[vec![0.3, -1.2], vec![2.0, 0.1]]).unwrap();
        assert!((loss_alpha(&r, 2.0).unwrap() - loss_l2(&r)).abs() < 1e-15);
        assert_eq!(loss_combined(&r, 1.5, 0.0).unwrap(), loss_l2(&r));
        assert!((loss_combined(&r, 2.0, 0.7).unwrap() - 1.7 * loss_l2(&r)).abs() < 1e-14);
        assert!(loss_alpha(&r, 1.0).is_err());
    }

    #[test]
    fn entropy_values() {
        assert!((entropy_term(&[0.5]) + std::f64::consts::LN_2).abs() < 1e-15);
        assert!((entropy_term(&[0.9]) + 0.325083).abs() < 1e-6);
        let near_one = entropy_term(&[1.0 - 1e-9]);
        assert!(near_one < 0.0 && near_one > -1e-5);
        assert!(entropy_term(&[0.0]).is_finite());
    }

    #[test]
    fn curriculum_endpoints() {
        let t = gaussian(2, 1.0);
        let cfg = DriftConfig::new(1.7, 0.3).unwrap();
        let data = t.exact_sample(50, &mut RngStream::new(2, 0).rng()).unwrap();
        let p0 = curriculum_pairs(&data, &t, &cfg, 0.0, &mut RngStream::new(3, 0).rng()).unwrap();
        assert!(p0.iter().all(|(x, xp)| x == xp));
        let p1 = curriculum_pairs(&data, &t, &cfg, 1.0, &mut RngStream::new(3, 0).rng()).unwrap();
        let ph = curriculum_pairs(&data, &t, &cfg, 0.5, &mut RngStream::new(3, 0).rng()).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        for (k, x) in data.rows().enumerate() {
            let v = propose(x, &t, &cfg, &mut rng).unwrap().x_prime;
            assert_eq!(p1[k].1, v);
            let mid: Vec<f64> = x.iter().zip(&v).map(|(a, b)| (a + b) / 2.0).collect();
            assert_eq!(ph[k].1, mid);
        }
        assert!(curriculum_pairs(&data, &t, &cfg, 1.5, &mut rng).is_err());
    }

    #[test]
    fn sbm_gradient_matches_fd() {
        let t = gaussian(2, 0.9);
        let cfg = DriftConfig::new(1.6, 0.2).unwrap();
        for seed in 0..5 {
            let batch = SbmBatch::build(random_pairs(2, 4, 10 + seed), &t, &cfg, JacobianMode::FiniteDifference).unwrap();
            let act = if seed % 2 == 0 { Activation::Tanh } else { Activation::Softplus };
            let mut net = Mlp::acceptance(2, &[5, 4], act, RngStream::new(seed, 9)).unwrap();
            let (parts, grad) = sbm_loss_and_grad(&net, &batch, 1.6, 0.8, 0.3).unwrap();
            let res = batch.residuals(&NetAcceptance { net: net.clone() }).unwrap();
            assert!((parts.l2 - loss_l2(&res)).abs() < 1e-12);
            for k in 0..net.params.len() {
                let h = 1e-5;
                let p = net.params[k];
                net.params[k] = p + h;
                let up = sbm_loss_and_grad(&net, &batch, 1.6, 0.8, 0.3).unwrap().0.combined;
                net.params[k] = p - h;
                let dn = sbm_loss_and_grad(&net, &batch, 1.6, 0.8, 0.3).unwrap().0.combined;
                net.params[k] = p;
                let fd = (up - dn) / (2.0 * h);
                assert!((fd - grad[k]).abs() <= 1e-5 * fd.abs().max(1e-2), "param {k}: {fd} vs {}", grad[k]);
            }
        }
    }

    #[test]
    fn schedule_defaults() {
        let c = SbmConfig::new(100);
        assert_eq!(c.eta_at(0), 0.1);
        assert_eq!(c.eta_at(19), 0.1);
        assert_eq!(c.eta_at(99), 1.0);
        assert!(c.eta_at(60) > 0.1 && c.eta_at(60) < 1.0);
        let bad = SbmConfig { eta_schedule: Some(vec![(1, 0.2)]), ..c.clone() };
        assert!(bad.validate().is_err());
        let bad = SbmConfig { eta_schedule: Some(vec![(0, 0.5), (10, 0.2)]), ..c };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn zero_epochs_leave_net_unchanged() {
        let t = gaussian(1, 1.0);
        let cfg = DriftConfig::new(2.0, 0.1).unwrap();
        let mut net = Mlp::acceptance(1, &[8], Activation::Tanh, RngStream::new(1, 0)).unwrap();
        let before = net.params.clone();
        let trace = train_acceptance(&mut net, &t, |n, r| t.exact_sample(n, r), &cfg, &SbmConfig::new(0), RngStream::new(2, 0))
            .unwrap();
        assert!(trace.is_empty());
        assert_eq!(net.params, before);
    }

    #[test]
    fn trained_net_beats_constant_baseline() {
        // N(0, 2) target, α = 2, τ = 0.1
        let t = Target::new(TargetSpec::mixture(
            TargetKind::GaussianMixture,
            None,
            vec![Component { weight: 1.0, center: vec![0.0], scale: 1.0 }],
        ))
        .unwrap();
        let cfg = DriftConfig::new(2.0, 0.1).unwrap();
        let mut net = Mlp::acceptance(1, &[32, 32], Activation::Tanh, RngStream::new(3, 0)).unwrap();
        let sbm = SbmConfig {
            epochs: 150,
            pairs_per_epoch: 256,
            batch_size: 64,
            lambda_alpha: 0.0,
            adam: AdamConfig { lr: 3e-3, ..Default::default() },
            ..SbmConfig::new(150)
        };
        let trace = train_acceptance(&mut net, &t, |n, r| t.exact_sample(n, r), &cfg, &sbm, RngStream::new(4, 0)).unwrap();
        assert_eq!(trace.len(), 150);
        let data = t.exact_sample(512, &mut RngStream::new(99, 0).rng()).unwrap();
        let pairs = curriculum_pairs(&data, &t, &cfg, 1.0, &mut RngStream::new(98, 0).rng()).unwrap();
        let held = SbmBatch::build(pairs, &t, &cfg, JacobianMode::FiniteDifference).unwrap();
        let trained = loss_l2(&held.residuals(&NetAcceptance { net }).unwrap());
        let baseline = loss_l2(&held.residuals(&ConstantAcceptance(0.5)).unwrap());
        assert!(trained <= 0.1 * baseline, "trained {trained} baseline {baseline}");
    }

    #[test]
    fn heavy_entropy_pulls_acceptance_to_half() {
        let t = gaussian(1, 1.0);
        let cfg = DriftConfig::new(2.0, 0.1).unwrap();
        let mut net = Mlp::acceptance(1, &[16], Activation::Tanh, RngStream::new(5, 0)).unwrap();
        let sbm = SbmConfig {
            lambda_alpha: 0.0,
            lambda_entropy: 1e3,
            epochs: 60,
            pairs_per_epoch: 256,
            adam: AdamConfig { lr: 3e-3, ..Default::default() },
            ..SbmConfig::new(60)
        };
        train_acceptance(&mut net, &t, |n, r| t.exact_sample(n, r), &cfg, &sbm, RngStream::new(6, 0)).unwrap();
        let acc = NetAcceptance { net };
        let data = t.exact_sample(200, &mut RngStream::new(7, 0).rng()).unwrap();
        let pairs = curriculum_pairs(&data, &t, &cfg, 1.0, &mut RngStream::new(8, 0).rng()).unwrap();
        let dev = pairs.iter().map(|(x, xp)| (acc.prob(xp, x).unwrap() - 0.5).abs()).sum::<f64>() / pairs.len() as f64;
        assert!(dev < 0.05, "{dev}");
    }

    #[test]
    fn trace_csv_header() {
        let s = trace_csv(&[TraceRow { epoch: 0, eta: 0.1, loss_l2: 1.0, loss_alpha: 2.0, entropy: -0.5, combined: 3.0 }]);
        assert!(s.starts_with("epoch,eta,loss_l2,loss_alpha,entropy,combined\n0,0.1,1,2,-0.5,3\n"));
        let _ = Architecture { widths: vec![2, 1], activation: Activation::Tanh, head: Head::ScalarLogit };
    }
}
