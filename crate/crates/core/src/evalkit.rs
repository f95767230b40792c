//! Sample-quality metrics: 1-D and sliced Wasserstein-1, tail-quantile
//! errors, the two-sample Kolmogorov–Smirnov test and CSV reporting.

use std::fmt::Write as _;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, param, Error, Result};
use crate::points::{norm, PointCloud};
use crate::rng::RngStream;
use crate::samplers::RunResult;
use crate::targets::Target;

fn finite_sorted(a: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = a.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Exact Wasserstein-1 distance between two empirical measures on the line,
/// computed as `∫ |F_a − F_b|`. Non-finite values are dropped.
pub fn w1_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    let a = finite_sorted(a);
    let b = finite_sorted(b);
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("w1_1d input".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut x = a[0].min(b[0]);
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => unreachable!(),
        };
        total += (i as f64 / na - j as f64 / nb).abs() * (next - x);
        x = next;
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
    }
    Ok(total)
}

/// Uniform directions on the unit sphere drawn from a seeded stream.
pub fn sphere_directions(dim: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, 0x51ced).rng();
    (0..n)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let r = norm(&v);
            if r > 1e-12 {
                break v.into_iter().map(|c| c / r).collect();
            }
        })
        .collect()
}

/// Mean 1-D W₁ over `n_proj` random projections. In one dimension this is
/// `w1_1d` itself.
pub fn sliced_w1(a: &PointCloud, b: &PointCloud, n_proj: usize, seed: u64) -> Result<f64> {
    check_shape(a.dim(), b.dim())?;
    if n_proj == 0 {
        return Err(param("n_proj must be at least 1"));
    }
    if a.dim() == 1 {
        return w1_1d(a.as_flat(), b.as_flat());
    }
    let mut total = 0.0;
    for dir in sphere_directions(a.dim(), n_proj, seed) {
        total += w1_1d(&a.project(&dir), &b.project(&dir))?;
    }
    Ok(total / n_proj as f64)
}

/// Type-7 (linear interpolation) quantile of finite values.
pub fn quantile(values: &[f64], beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(param("quantile level must lie in [0, 1]"));
    }
    let v = finite_sorted(values);
    quantile_sorted(&v, beta)
}

fn quantile_sorted(v: &[f64], beta: f64) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Empty("quantile input".into()));
    }
    let h = (v.len() - 1) as f64 * beta;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (h - lo as f64) * (v[hi] - v[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuantileStatistic {
    /// Euclidean norm after centering both clouds at the reference mean.
    #[default]
    NormRadial,
    /// Mean over coordinates of the marginal quantile errors.
    PerCoordinateMean,
}

pub fn quantile_error(samples: &PointCloud, reference: &PointCloud, beta: f64, statistic: QuantileStatistic) -> Result<f64> {
    check_shape(reference.dim(), samples.dim())?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(param("beta must lie in (0, 1)"));
    }
    if samples.is_empty() || reference.is_empty() {
        return Err(Error::Empty("quantile_error input".into()));
    }
    match statistic {
        QuantileStatistic::NormRadial => {
            let center = reference.finite_rows().mean();
            let radial = |pc: &PointCloud| -> Vec<f64> {
                pc.rows().map(|r| r.iter().zip(&center).map(|(x, c)| (x - c) * (x - c)).sum::<f64>().sqrt()).collect()
            };
            Ok((quantile(&radial(samples), beta)? - quantile(&radial(reference), beta)?).abs())
        }
        QuantileStatistic::PerCoordinateMean => {
            let d = samples.dim();
            let mut total = 0.0;
            for j in 0..d {
                total += (quantile(&samples.column(j), beta)? - quantile(&reference.column(j), beta)?).abs();
            }
            Ok(total / d as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov
/// distribution (Stephens' small-sample correction).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    let a = finite_sorted(a);
    let b = finite_sorted(b);
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("ks input".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = (na * nb / (na + nb)).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    Ok(KsResult { statistic: d, p_value: kolmogorov_q(lambda) })
}

fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-300) {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    pub n_proj: usize,
    pub statistic: QuantileStatistic,
    /// Reference sample size as a multiple of the evaluated sample size.
    pub reference_factor: usize,
    pub burn_in_frac: f64,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { n_proj: 256, statistic: QuantileStatistic::NormRadial, reference_factor: 10, burn_in_frac: 0.2, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub w1: f64,
    pub q95_err: f64,
    pub q99_err: f64,
    pub n_samples: usize,
    pub n_reference: usize,
    pub n_nonfinite: usize,
    pub statistic: QuantileStatistic,
    pub n_proj: usize,
    pub seed: u64,
}

/// Metrics of `samples` against a given reference cloud.
pub fn compare(samples: &PointCloud, reference: &PointCloud, cfg: &MetricsConfig) -> Result<MetricReport> {
    let finite = samples.finite_rows();
    if finite.is_empty() {
        return Err(Error::Empty("no finite samples to evaluate".into()));
    }
    Ok(MetricReport {
        w1: sliced_w1(&finite, reference, cfg.n_proj, cfg.seed)?,
        q95_err: quantile_error(&finite, reference, 0.95, cfg.statistic)?,
        q99_err: quantile_error(&finite, reference, 0.99, cfg.statistic)?,
        n_samples: finite.len(),
        n_reference: reference.len(),
        n_nonfinite: samples.len() - finite.len(),
        statistic: cfg.statistic,
        n_proj: cfg.n_proj,
        seed: cfg.seed,
    })
}

/// Metrics of a run against exact target samples drawn from `cfg.seed`.
pub fn report(run: &RunResult, target: &Target, cfg: &MetricsConfig) -> Result<MetricReport> {
    let samples = run.samples(cfg.burn_in_frac);
    if samples.is_empty() {
        return Err(Error::Empty("run produced no samples".into()));
    }
    let n_ref = samples.len().max(1) * cfg.reference_factor.max(1);
    let reference = target.exact_sample(n_ref, &mut RngStream::new(cfg.seed, 0x7ef).rng())?;
    compare(&samples, &reference, cfg)
}

pub const METRICS_COLUMNS: [&str; 11] =
    ["experiment_id", "sampler", "alpha_tgt", "alpha_prop", "tau", "dim", "seed", "w1", "q95_err", "q99_err", "acceptance_rate"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub experiment_id: String,
    pub sampler: String,
    pub alpha_tgt: Option<f64>,
    pub alpha_prop: f64,
    pub tau: f64,
    pub dim: usize,
    pub seed: u64,
    pub w1: f64,
    pub q95_err: f64,
    pub q99_err: f64,
    pub acceptance_rate: f64,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.10e}")
}

impl MetricsRow {
    pub fn to_csv_line(&self) -> String {
        let alpha_tgt = self.alpha_tgt.map(fmt_f).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.experiment_id,
            self.sampler,
            alpha_tgt,
            fmt_f(self.alpha_prop),
            fmt_f(self.tau),
            self.dim,
            self.seed,
            fmt_f(self.w1),
            fmt_f(self.q95_err),
            fmt_f(self.q99_err),
            fmt_f(self.acceptance_rate)
        )
    }

    pub fn from_csv_line(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim_end().split(',').collect();
        if f.len() != METRICS_COLUMNS.len() {
            return Err(param(format!("expected {} fields, found {}", METRICS_COLUMNS.len(), f.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| param(format!("bad number {s:?}: {e}")));
        let int = |s: &str| s.parse::<u64>().map_err(|e| param(format!("bad integer {s:?}: {e}")));
        Ok(Self {
            experiment_id: f[0].to_string(),
            sampler: f[1].to_string(),
            alpha_tgt: if f[2].is_empty() { None } else { Some(num(f[2])?) },
            alpha_prop: num(f[3])?,
            tau: num(f[4])?,
            dim: int(f[5])? as usize,
            seed: int(f[6])?,
            w1: num(f[7])?,
            q95_err: num(f[8])?,
            q99_err: num(f[9])?,
            acceptance_rate: num(f[10])?,
        })
    }
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = METRICS_COLUMNS.join(",");
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv_line());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn assignment_w1(a: &[f64], b: &[f64]) -> f64 {
        fn perms(k: usize, idx: &mut Vec<usize>, a: &[f64], b: &[f64], best: &mut f64) {
            if k == idx.len() {
                let c: f64 = idx.iter().enumerate().map(|(i, &j)| (a[i] - b[j]).abs()).sum();
                *best = best.min(c / a.len() as f64);
                return;
            }
            for i in k..idx.len() {
                idx.swap(k, i);
                perms(k + 1, idx, a, b, best);
                idx.swap(k, i);
            }
        }
        let mut best = f64::INFINITY;
        perms(0, &mut (0..a.len()).collect(), a, b, &mut best);
        best
    }

    #[test]
    fn w1_matches_assignment_oracle() {
        let mut rng = RngStream::new(1, 0).rng();
        for _ in 0..50 {
            let a: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..4.0)).collect();
            assert!((w1_1d(&a, &b).unwrap() - assignment_w1(&a, &b)).abs() < 1e-12);
        }
        assert_eq!(w1_1d(&[0.0], &[2.5]).unwrap(), 2.5);
        assert_eq!(w1_1d(&[1.0, 2.0, 2.0], &[2.0, 1.0, 2.0]).unwrap(), 0.0);
        // unequal sizes: {0} vs {0, 1} moves half the mass by 1
        assert!((w1_1d(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(w1_1d(&[], &[1.0]).is_err());
    }

    #[test]
    fn sliced_reduces_in_one_dimension() {
        let a = PointCloud::from_flat(1, vec![0.0, 1.0, 5.0]).unwrap();
        let b = PointCloud::from_flat(1, vec![0.5, 2.0, 2.0]).unwrap();
        assert_eq!(sliced_w1(&a, &b, 7, 3).unwrap(), w1_1d(a.as_flat(), b.as_flat()).unwrap());
        assert!(sliced_w1(&a, &PointCloud::zeros(1, 2), 1, 0).is_err());
    }

    #[test]
    fn sliced_translation() {
        // a translation by c·e₁ has sliced W₁ = |c|·E|θ₁| = |c|·2/π in 2-D
        let mut rng = RngStream::new(5, 0).rng();
        let a = PointCloud::from_flat(2, (0..4000).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mut b = a.clone();
        for i in 0..b.len() {
            b.row_mut(i)[0] += 1.0;
        }
        let s = sliced_w1(&a, &b, 10_000, 1).unwrap();
        assert!((s - 2.0 / std::f64::consts::PI).abs() < 0.01, "{s}");
        assert_eq!(sliced_w1(&a, &a, 16, 1).unwrap(), 0.0);
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&[3.0, f64::NAN, 1.0], 1.0).unwrap(), 3.0);
        let mut rng = RngStream::new(2, 0).rng();
        let z: Vec<f64> = (0..400_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let abs: Vec<f64> = z.iter().map(|v: &f64| v.abs()).collect();
        assert!((quantile(&abs, 0.95).unwrap() - 1.959964).abs() < 0.01);
        let reference = PointCloud::from_flat(1, z[..200_000].to_vec()).unwrap();
        let shifted = PointCloud::from_flat(1, z[200_000..].iter().map(|v| v + 0.1).collect()).unwrap();
        let e = quantile_error(&shifted, &reference, 0.95, QuantileStatistic::PerCoordinateMean).unwrap();
        assert!((e - 0.1).abs() < 0.015, "{e}");
        assert_eq!(quantile_error(&reference, &reference, 0.99, QuantileStatistic::NormRadial).unwrap(), 0.0);
    }

    #[test]
    fn quantile_error_translation_consistent() {
        let mut rng = RngStream::new(3, 0).rng();
        let s = PointCloud::from_flat(2, (0..2000).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let r = PointCloud::from_flat(2, (0..2000).map(|_| rng.random_range(-1.5..2.5)).collect()).unwrap();
        let shift = |pc: &PointCloud| {
            let mut out = pc.clone();
            for i in 0..out.len() {
                out.row_mut(i)[0] += 7.0;
                out.row_mut(i)[1] -= 3.0;
            }
            out
        };
        let e0 = quantile_error(&s, &r, 0.95, QuantileStatistic::NormRadial).unwrap();
        let e1 = quantile_error(&shift(&s), &shift(&r), 0.95, QuantileStatistic::NormRadial).unwrap();
        assert!((e0 - e1).abs() < 1e-9);
    }

    #[test]
    fn ks_extremes_and_null() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]).unwrap().statistic, 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0, 5.0]).unwrap().statistic, 1.0);
        let mut rejections = 0;
        for seed in 0..200 {
            let mut rng = RngStream::new(seed, 9).rng();
            let a: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
            let b: Vec<f64> = (0..2000).map(|_| StandardNormal.sample(&mut rng)).collect();
            if ks_two_sample(&a, &b).unwrap().p_value < 0.01 {
                rejections += 1;
            }
        }
        assert!(rejections <= 6, "{rejections}");
    }

    #[test]
    fn metrics_csv_round_trip() {
        let row = MetricsRow {
            experiment_id: "mixture2d".into(),
            sampler: "mafla".into(),
            alpha_tgt: None,
            alpha_prop: 1.95,
            tau: 0.05,
            dim: 2,
            seed: 3,
            w1: 0.123456789,
            q95_err: 1.5,
            q99_err: 2.25,
            acceptance_rate: 0.8125,
        };
        let csv = metrics_csv(std::slice::from_ref(&row));
        assert!(csv.starts_with("experiment_id,sampler,alpha_tgt,"));
        let back = MetricsRow::from_csv_line(csv.lines().nth(1).unwrap()).unwrap();
        assert_eq!(back.w1, row.w1);
        assert_eq!(back.to_csv_line(), row.to_csv_line());
    }
}
