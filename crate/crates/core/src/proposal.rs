//! Fractional Langevin proposals `x' = x + τ b(x) + τ^{1/α} ξ` with
//! `b = c_α ∇log p`, and the density-free proxies for the proposal scores.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_shape, param, Error, Result};
use crate::points::norm;
use crate::stable::isotropic_noise_into;
use crate::targets::ScoreModel;

/// `Γ(α-1) / Γ(α/2)²`, exactly 1 at `α = 2`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha >= 1.0 + 1e-6 && alpha <= 2.0) {
        return Err(param(format!("c_alpha needs alpha in [1 + 1e-6, 2], got {alpha}")));
    }
    if alpha == 2.0 {
        return Ok(1.0);
    }
    Ok((ln_gamma(alpha - 1.0) - 2.0 * ln_gamma(alpha / 2.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftParams {
    pub alpha: f64,
    pub tau: f64,
}

/// Proposal constants derived from `(α, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DriftParams", into = "DriftParams")]
pub struct DriftConfig {
    pub alpha: f64,
    pub tau: f64,
    pub c_alpha: f64,
    /// `1 / (α c_α τ)`
    pub kappa: f64,
    /// `τ^{1/α}`
    pub noise_scale: f64,
}

impl TryFrom<DriftParams> for DriftConfig {
    type Error = Error;
    fn try_from(p: DriftParams) -> Result<Self> {
        DriftConfig::new(p.alpha, p.tau)
    }
}

impl From<DriftConfig> for DriftParams {
    fn from(c: DriftConfig) -> Self {
        DriftParams { alpha: c.alpha, tau: c.tau }
    }
}

impl DriftConfig {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        crate::stable::check_alpha_open(alpha)?;
        if !(tau.is_finite() && tau > 0.0) {
            return Err(param(format!("tau must be positive, got {tau}")));
        }
        let c = c_alpha(alpha)?;
        Ok(Self { alpha, tau, c_alpha: c, kappa: 1.0 / (alpha * c * tau), noise_scale: tau.powf(1.0 / alpha) })
    }

    /// Same constants with a different drift multiplier, used for the
    /// Gaussian baseline (`c = 1` at any `α`).
    pub fn with_c(mut self, c: f64) -> Self {
        self.c_alpha = c;
        self.kappa = 1.0 / (self.alpha * c * self.tau);
        self
    }
}

/// `b(x) = c_α s(x)` into `out`.
pub fn drift<S: ScoreModel + ?Sized>(score: &S, x: &[f64], cfg: &DriftConfig, out: &mut [f64]) -> Result<()> {
    score.score_into(x, out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("score returned a non-finite value".into()));
    }
    out.iter_mut().for_each(|v| *v *= cfg.c_alpha);
    Ok(())
}

/// A forward proposal together with everything needed for the reverse move.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalPair {
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    /// `x' - x - τ b(x)`
    pub r: Vec<f64>,
    /// `x - x' - τ b(x')`
    pub r_rev: Vec<f64>,
    pub drift_x: Vec<f64>,
    pub drift_xprime: Vec<f64>,
}

impl ProposalPair {
    /// Build the pair for a given `x'` (drifts evaluated at both ends).
    pub fn from_points<S: ScoreModel + ?Sized>(score: &S, x: &[f64], x_prime: &[f64], cfg: &DriftConfig) -> Result<Self> {
        check_shape(x.len(), x_prime.len())?;
        let d = x.len();
        let mut drift_x = vec![0.0; d];
        let mut drift_xprime = vec![0.0; d];
        drift(score, x, cfg, &mut drift_x)?;
        drift(score, x_prime, cfg, &mut drift_xprime)?;
        Ok(Self::assemble(x.to_vec(), x_prime.to_vec(), drift_x, drift_xprime, cfg.tau))
    }

    fn assemble(x: Vec<f64>, x_prime: Vec<f64>, drift_x: Vec<f64>, drift_xprime: Vec<f64>, tau: f64) -> Self {
        let r = (0..x.len()).map(|i| x_prime[i] - x[i] - tau * drift_x[i]).collect();
        let r_rev = (0..x.len()).map(|i| x[i] - x_prime[i] - tau * drift_xprime[i]).collect();
        Self { x, x_prime, r, r_rev, drift_x, drift_xprime }
    }

    /// The pair with the roles of `x` and `x'` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            x: self.x_prime.clone(),
            x_prime: self.x.clone(),
            r: self.r_rev.clone(),
            r_rev: self.r.clone(),
            drift_x: self.drift_xprime.clone(),
            drift_xprime: self.drift_x.clone(),
        }
    }
}

/// Propose with a caller-supplied standard noise vector `ξ` (unscaled).
pub fn propose_with_noise<S: ScoreModel + ?Sized>(
    x: &[f64],
    score: &S,
    cfg: &DriftConfig,
    xi: &[f64],
) -> Result<ProposalPair> {
    check_shape(x.len(), xi.len())?;
    let d = x.len();
    let mut drift_x = vec![0.0; d];
    drift(score, x, cfg, &mut drift_x)?;
    let x_prime: Vec<f64> = (0..d).map(|i| x[i] + cfg.tau * drift_x[i] + cfg.noise_scale * xi[i]).collect();
    if x_prime.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("proposal left the finite range".into()));
    }
    let mut drift_xprime = vec![0.0; d];
    drift(score, &x_prime, cfg, &mut drift_xprime)?;
    Ok(ProposalPair::assemble(x.to_vec(), x_prime, drift_x, drift_xprime, cfg.tau))
}

/// Propose with isotropic `SαS(1)` noise.
pub fn propose<S: ScoreModel + ?Sized, R: Rng + ?Sized>(
    x: &[f64],
    score: &S,
    cfg: &DriftConfig,
    rng: &mut R,
) -> Result<ProposalPair> {
    let mut xi = vec![0.0; x.len()];
    isotropic_noise_into(cfg.alpha, rng, &mut xi);
    propose_with_noise(x, score, cfg, &xi)
}

/// How `J_b(x)ᵀ v` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JacobianMode {
    /// Closed-form Jacobian from the score model (Gaussian targets).
    Analytic,
    /// Central difference of the score along `v`; assumes a symmetric
    /// Jacobian, which holds for exact scores.
    #[default]
    FiniteDifference,
    /// Exact transposed-Jacobian product of a network score.
    Network,
}

/// `J_b(x)ᵀ v = c_α J_s(x)ᵀ v`.
pub fn jacobian_vjp<S: ScoreModel + ?Sized>(
    score: &S,
    x: &[f64],
    v: &[f64],
    mode: JacobianMode,
    c_alpha: f64,
) -> Result<Vec<f64>> {
    check_shape(x.len(), v.len())?;
    let d = x.len();
    let mut out = vec![0.0; d];
    let vn = norm(v);
    if vn == 0.0 {
        return Ok(out);
    }
    match mode {
        JacobianMode::Analytic | JacobianMode::Network => score.score_jacobian_t_vec(x, v, &mut out)?,
        JacobianMode::FiniteDifference => {
            let eps = 1e-5f64.max(1e-7 * norm(x));
            let up: Vec<f64> = (0..d).map(|i| x[i] + eps * v[i] / vn).collect();
            let dn: Vec<f64> = (0..d).map(|i| x[i] - eps * v[i] / vn).collect();
            let mut su = vec![0.0; d];
            score.score_into(&up, &mut su)?;
            score.score_into(&dn, &mut out)?;
            for i in 0..d {
                out[i] = (su[i] - out[i]) * vn / (2.0 * eps);
            }
        }
    }
    out.iter_mut().for_each(|o| *o *= c_alpha);
    Ok(out)
}

/// The four proposal-score proxies.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalScores {
    /// `∇_{x'} log q(x'|x) ≈ -κ r`
    pub fwd_xprime: Vec<f64>,
    /// `∇_x log q(x'|x) ≈ κ (r + τ J_b(x)ᵀ r)`
    pub fwd_x: Vec<f64>,
    /// `∇_x log q(x|x') ≈ -κ r_rev`
    pub rev_x: Vec<f64>,
    /// `∇_{x'} log q(x|x') ≈ κ (r_rev + τ J_b(x')ᵀ r_rev)`
    pub rev_xprime: Vec<f64>,
}

impl ProposalScores {
    pub fn as_array(&self) -> [&[f64]; 4] {
        [&self.fwd_xprime, &self.fwd_x, &self.rev_x, &self.rev_xprime]
    }
}

pub fn proposal_scores<S: ScoreModel + ?Sized>(
    pair: &ProposalPair,
    cfg: &DriftConfig,
    score: &S,
    mode: JacobianMode,
) -> Result<ProposalScores> {
    let jr = jacobian_vjp(score, &pair.x, &pair.r, mode, cfg.c_alpha)?;
    let jr_rev = jacobian_vjp(score, &pair.x_prime, &pair.r_rev, mode, cfg.c_alpha)?;
    let k = cfg.kappa;
    let t = cfg.tau;
    Ok(ProposalScores {
        fwd_xprime: pair.r.iter().map(|v| -k * v).collect(),
        fwd_x: pair.r.iter().zip(&jr).map(|(r, j)| k * (r + t * j)).collect(),
        rev_x: pair.r_rev.iter().map(|v| -k * v).collect(),
        rev_xprime: pair.r_rev.iter().zip(&jr_rev).map(|(r, j)| k * (r + t * j)).collect(),
    })
}
