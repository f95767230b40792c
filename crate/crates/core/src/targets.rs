//! Target distributions: oracle scores, log-densities and exact samplers.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::combopt::Relaxation;
use crate::error::{check_shape, param, Error, Result};
use crate::points::PointCloud;
use crate::stable::{check_alpha_open, isotropic_noise_into, sas_standard, RadialProfile};

/// Anything that provides `∇ log p`.
pub trait ScoreModel: Send + Sync {
    fn dim(&self) -> usize;

    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()>;

    /// `J(x)ᵀ v` for the score's Jacobian, when available in closed form.
    fn score_jacobian_t_vec(&self, _x: &[f64], _v: &[f64], _out: &mut [f64]) -> Result<()> {
        Err(Error::Capability("score has no closed-form Jacobian".into()))
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.score_into(x, &mut out)?;
        Ok(out)
    }
}

impl<T: ScoreModel + ?Sized> ScoreModel for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).score_into(x, out)
    }
    fn score_jacobian_t_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).score_jacobian_t_vec(x, v, out)
    }
}

impl<T: ScoreModel + ?Sized> ScoreModel for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).score_into(x, out)
    }
    fn score_jacobian_t_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        (**self).score_jacobian_t_vec(x, v, out)
    }
}

/// Wraps a closure as a score model.
pub struct FnScore<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> FnScore<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], &mut [f64]) + Send + Sync> ScoreModel for FnScore<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_shape(self.dim, x.len())?;
        (self.f)(x, out);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// Components `N(center, 2·scale²·I)`.
    GaussianMixture,
    /// Isotropic multivariate Cauchy components.
    CauchyMixture,
    /// Isotropic `SαS` location components, `dim <= 4`.
    StableLocationMixture,
    /// Components with independent `SαS` coordinates, any `dim`.
    ProductStable,
    /// Relaxed combinatorial problem `exp(-E(u)/T)`.
    CoRelaxation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub center: Vec<f64>,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub kind: TargetKind,
    #[serde(default)]
    pub components: Vec<Component>,
    #[serde(default)]
    pub alpha_tgt: Option<f64>,
    pub dim: usize,
    #[serde(default)]
    pub relaxation: Option<Relaxation>,
}

impl TargetSpec {
    pub fn mixture(kind: TargetKind, alpha_tgt: Option<f64>, components: Vec<Component>) -> Self {
        let dim = components.first().map_or(0, |c| c.center.len());
        Self { kind, components, alpha_tgt, dim, relaxation: None }
    }

    pub fn relaxation(relaxation: Relaxation) -> Self {
        Self {
            kind: TargetKind::CoRelaxation,
            components: Vec::new(),
            alpha_tgt: None,
            dim: relaxation.dim(),
            relaxation: Some(relaxation),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(param("target dim must be at least 1"));
        }
        if self.kind == TargetKind::CoRelaxation {
            let r = self.relaxation.as_ref().ok_or_else(|| param("co_relaxation target needs `relaxation`"))?;
            if r.dim() != self.dim {
                return Err(param(format!("relaxation has {} variables but dim is {}", r.dim(), self.dim)));
            }
            return Ok(());
        }
        if self.relaxation.is_some() {
            return Err(param("`relaxation` is only valid for co_relaxation targets"));
        }
        if self.components.is_empty() {
            return Err(param("mixture target needs at least one component"));
        }
        let mut total = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            if !(c.weight >= 0.0 && c.weight.is_finite()) {
                return Err(param(format!("component {i}: weight must be non-negative")));
            }
            if !(c.scale > 0.0 && c.scale.is_finite()) {
                return Err(param(format!("component {i}: scale must be positive")));
            }
            if c.center.len() != self.dim {
                return Err(param(format!("component {i}: center has length {}, dim is {}", c.center.len(), self.dim)));
            }
            if c.center.iter().any(|v| !v.is_finite()) {
                return Err(param(format!("component {i}: center is not finite")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(param(format!("component weights sum to {total}, expected 1")));
        }
        match self.kind {
            TargetKind::StableLocationMixture | TargetKind::ProductStable => {
                let a = self.alpha_tgt.ok_or_else(|| param("stable targets need `alpha_tgt`"))?;
                check_alpha_open(a)?;
                if self.kind == TargetKind::StableLocationMixture && self.dim > 4 {
                    return Err(param(format!(
                        "stable_location_mixture supports dim <= 4 (got {}); use product_stable",
                        self.dim
                    )));
                }
            }
            _ => {
                if self.alpha_tgt.is_some() {
                    return Err(param("`alpha_tgt` only applies to stable target kinds"));
                }
            }
        }
        Ok(())
    }
}

/// A validated target ready for evaluation.
#[derive(Debug, Clone)]
pub struct Target {
    spec: TargetSpec,
    profile: Option<Arc<RadialProfile>>,
    log_w: Vec<f64>,
}

impl Target {
    pub fn new(spec: TargetSpec) -> Result<Self> {
        spec.validate()?;
        let profile = match spec.kind {
            TargetKind::StableLocationMixture => Some(RadialProfile::get(spec.alpha_tgt.unwrap(), spec.dim)?),
            TargetKind::ProductStable => Some(RadialProfile::get(spec.alpha_tgt.unwrap(), 1)?),
            _ => None,
        };
        let log_w = spec.components.iter().map(|c| c.weight.ln()).collect();
        Ok(Self { spec, profile, log_w })
    }

    pub fn spec(&self) -> &TargetSpec {
        &self.spec
    }

    pub fn kind(&self) -> TargetKind {
        self.spec.kind
    }

    pub fn has_exact_sampler(&self) -> bool {
        self.spec.kind != TargetKind::CoRelaxation
    }

    /// Log-density of one component at `x` (normalized) and its score.
    fn component_eval(&self, c: &Component, x: &[f64], score: &mut [f64]) -> f64 {
        let d = self.spec.dim as f64;
        let s = c.scale;
        for ((o, xi), ci) in score.iter_mut().zip(x).zip(&c.center) {
            *o = xi - ci;
        }
        match self.spec.kind {
            TargetKind::GaussianMixture => {
                let r2: f64 = score.iter().map(|v| v * v).sum();
                let inv = 1.0 / (2.0 * s * s);
                score.iter_mut().for_each(|v| *v *= -inv);
                -0.5 * d * (4.0 * std::f64::consts::PI * s * s).ln() - 0.5 * r2 * inv
            }
            TargetKind::CauchyMixture => {
                let r2: f64 = score.iter().map(|v| v * v).sum();
                let k = -(d + 1.0) / (s * s + r2);
                score.iter_mut().for_each(|v| *v *= k);
                let h = 0.5 * (d + 1.0);
                statrs::function::gamma::ln_gamma(h) - h * std::f64::consts::PI.ln() - d * s.ln()
                    - h * (1.0 + r2 / (s * s)).ln()
            }
            TargetKind::StableLocationMixture => {
                let prof = self.profile.as_ref().unwrap();
                let r = score.iter().map(|v| v * v).sum::<f64>().sqrt();
                let (lf, slope) = prof.eval(r / s);
                if r > 0.0 {
                    let k = slope / (s * r);
                    score.iter_mut().for_each(|v| *v *= k);
                } else {
                    score.iter_mut().for_each(|v| *v = 0.0);
                }
                lf - d * s.ln()
            }
            TargetKind::ProductStable => {
                let prof = self.profile.as_ref().unwrap();
                let mut lf = -d * s.ln();
                for v in score.iter_mut() {
                    let (l, slope) = prof.eval(v.abs() / s);
                    lf += l;
                    *v = if *v == 0.0 { 0.0 } else { slope / s * v.signum() };
                }
                lf
            }
            TargetKind::CoRelaxation => unreachable!(),
        }
    }

    /// Score into `out`, returning `log p(x)`.
    pub fn score_and_log_density(&self, x: &[f64], out: &mut [f64]) -> Result<f64> {
        check_shape(self.spec.dim, x.len())?;
        check_shape(self.spec.dim, out.len())?;
        if x.iter().any(|v| v.is_nan()) {
            return Err(Error::NonFinite("NaN in target input".into()));
        }
        if let Some(r) = &self.spec.relaxation {
            r.score_into(x, out)?;
            return Ok(-r.energy(x) / r.temperature());
        }
        let comps = &self.spec.components;
        if comps.len() == 1 {
            return Ok(self.component_eval(&comps[0], x, out));
        }
        let d = self.spec.dim;
        let mut scores = vec![0.0; comps.len() * d];
        let mut logs = Vec::with_capacity(comps.len());
        for (k, c) in comps.iter().enumerate() {
            let l = self.component_eval(c, x, &mut scores[k * d..(k + 1) * d]);
            logs.push(l + self.log_w[k]);
        }
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (k, l) in logs.iter().enumerate() {
            let r = (l - m).exp();
            z += r;
            for (o, s) in out.iter_mut().zip(&scores[k * d..(k + 1) * d]) {
                *o += r * s;
            }
        }
        out.iter_mut().for_each(|v| *v /= z);
        Ok(m + z.ln())
    }

    /// Log-density. Mixtures are normalized; relaxations are `-E/T` (unnormalized).
    /// Only differences are meaningful to consumers.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        let mut scratch = vec![0.0; self.spec.dim];
        self.score_and_log_density(x, &mut scratch)
    }

    pub fn exact_sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PointCloud> {
        Ok(self.exact_sample_labeled(n, rng)?.0)
    }

    /// Exact draws together with the index of the component each came from.
    pub fn exact_sample_labeled<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<(PointCloud, Vec<usize>)> {
        if !self.has_exact_sampler() {
            return Err(Error::UnsupportedTarget("co_relaxation targets have no exact sampler".into()));
        }
        let d = self.spec.dim;
        let comps = &self.spec.components;
        let mut out = PointCloud::zeros(n, d);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = comps.len() - 1;
            for (j, c) in comps.iter().enumerate() {
                acc += c.weight;
                if u < acc {
                    k = j;
                    break;
                }
            }
            let c = &comps[k];
            let row = out.row_mut(i);
            match self.spec.kind {
                TargetKind::GaussianMixture => crate::stable::gaussian_noise_into(rng, row),
                TargetKind::CauchyMixture => {
                    for v in row.iter_mut() {
                        *v = StandardNormal.sample(rng);
                    }
                    let g: f64 = StandardNormal.sample(rng);
                    let inv = 1.0 / g.abs();
                    row.iter_mut().for_each(|v| *v *= inv);
                }
                TargetKind::StableLocationMixture => isotropic_noise_into(self.spec.alpha_tgt.unwrap(), rng, row),
                TargetKind::ProductStable => {
                    let a = self.spec.alpha_tgt.unwrap();
                    row.iter_mut().for_each(|v| *v = sas_standard(a, rng));
                }
                TargetKind::CoRelaxation => unreachable!(),
            }
            for (v, ci) in row.iter_mut().zip(&c.center) {
                *v = ci + c.scale * *v;
            }
            labels.push(k);
        }
        Ok((out, labels))
    }
}

impl ScoreModel for Target {
    fn dim(&self) -> usize {
        self.spec.dim
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.score_and_log_density(x, out).map(|_| ())
    }

    /// Closed form for Gaussian mixtures:
    /// `Σ r_k (H_k + s_k s_kᵀ) − s sᵀ` applied to `v`.
    fn score_jacobian_t_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        if self.spec.kind != TargetKind::GaussianMixture {
            return Err(Error::Capability(format!("no closed-form Jacobian for {:?} targets", self.spec.kind)));
        }
        check_shape(self.spec.dim, x.len())?;
        check_shape(self.spec.dim, v.len())?;
        let d = self.spec.dim;
        let comps = &self.spec.components;
        let mut sk = vec![0.0; d];
        let mut logs = Vec::with_capacity(comps.len());
        let mut scores = Vec::with_capacity(comps.len());
        for (k, c) in comps.iter().enumerate() {
            logs.push(self.component_eval(c, x, &mut sk) + self.log_w[k]);
            scores.push(sk.clone());
        }
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let r: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = r.iter().sum();
        let mut s = vec![0.0; d];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, c) in comps.iter().enumerate() {
            let rk = r[k] / z;
            let sv = crate::points::dot(&scores[k], v);
            let h = -1.0 / (2.0 * c.scale * c.scale);
            for j in 0..d {
                out[j] += rk * (h * v[j] + scores[k][j] * sv);
                s[j] += rk * scores[k][j];
            }
        }
        let sv = crate::points::dot(&s, v);
        for j in 0..d {
            out[j] -= s[j] * sv;
        }
        Ok(())
    }
}
