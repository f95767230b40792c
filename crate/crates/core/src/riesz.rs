//! Truncated fractional centered differences for the nonlocal drift, with
//! path-integrated density ratios and a K/h/λ_α ablation harness.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{check_shape, param, Error, Result};
use crate::evalkit::MetricReport;
use crate::proposal::c_alpha;
use crate::targets::ScoreModel;

const LOG_RATIO_MAX: f64 = 690.7755278982137; // ln 1e300

/// `(ln|Γ(x)|, sign Γ(x))` for non-pole `x`, using reflection below zero.
fn ln_gamma_signed(x: f64) -> (f64, f64) {
    if x > 0.0 {
        return (ln_gamma(x), 1.0);
    }
    let n = x.round();
    let frac = x - n;
    let parity = if (n as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let s = parity * (PI * frac).sin();
    (PI.ln() - s.abs().ln() - ln_gamma(1.0 - x), s.signum())
}

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// Reciprocal Gamma function, zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_pole(x) {
        return 0.0;
    }
    let (l, s) = ln_gamma_signed(x);
    s * (-l).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RieszConfig {
    /// Order `γ = α − 2`.
    pub order: f64,
    pub h: f64,
    #[serde(rename = "K")]
    pub k: usize,
    /// Use `c_α s(x)` with no `h` prefactor when `K = 0`.
    #[serde(default = "default_true")]
    pub normalize_k0: bool,
}

fn default_true() -> bool {
    true
}

impl RieszConfig {
    pub fn new(alpha: f64, h: f64, k: usize) -> Self {
        Self { order: alpha - 2.0, h, k, normalize_k0: true }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.order > -1.0 && self.order <= 0.0) {
            return Err(param(format!("riesz order must lie in (-1, 0], got {}", self.order)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(param("riesz step h must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub gamma: f64,
    /// `g_{−K..K}`.
    pub coeffs: Vec<f64>,
}

impl CoefficientTable {
    pub fn k_max(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn get(&self, k: i64) -> f64 {
        self.coeffs[(k + self.k_max() as i64) as usize]
    }
}

/// `g_{γ,k} = (−1)^k Γ(γ+1) / (Γ(γ/2 − k + 1) Γ(γ/2 + k + 1))`.
pub fn riesz_coeff(gamma: f64, k: i64) -> f64 {
    let a = gamma / 2.0 - k as f64 + 1.0;
    let b = gamma / 2.0 + k as f64 + 1.0;
    if is_pole(a) || is_pole(b) {
        return 0.0;
    }
    let (la, sa) = ln_gamma_signed(a);
    let (lb, sb) = ln_gamma_signed(b);
    let parity = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    parity * sa * sb * (ln_gamma(gamma + 1.0) - la - lb).exp()
}

pub fn riesz_coeffs(gamma: f64, k_max: usize) -> Result<CoefficientTable> {
    if !(gamma > -1.0 && gamma <= 0.0) {
        return Err(param(format!("riesz order must lie in (-1, 0], got {gamma}")));
    }
    let k = k_max as i64;
    // g_0 from log-gamma, then g_{j+1} = g_j (j − γ/2)/(j + 1 + γ/2), which
    // hits the reciprocal-Gamma zeros exactly
    let mut half = Vec::with_capacity(k_max + 1);
    half.push(if gamma == 0.0 { 1.0 } else { (ln_gamma(gamma + 1.0) - 2.0 * ln_gamma(gamma / 2.0 + 1.0)).exp() });
    for j in 0..k {
        let jf = j as f64;
        half.push(half[j as usize] * (jf - gamma / 2.0) / (jf + 1.0 + gamma / 2.0));
    }
    let coeffs = (-k..=k).map(|j| half[j.unsigned_abs() as usize]).collect();
    Ok(CoefficientTable { gamma, coeffs })
}

/// Default trapezoid node count for a path of the given length.
pub fn path_nodes(length: f64) -> usize {
    ((33.0 * length).ceil() as usize + 1).max(9)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathRatio {
    pub ratio: f64,
    pub clamped: bool,
}

fn clamp_log_ratio(l: f64) -> (f64, bool) {
    if l.is_nan() {
        return (f64::NAN, false);
    }
    let c = l.clamp(-LOG_RATIO_MAX, LOG_RATIO_MAX);
    (c, c != l)
}

/// `p(x_shifted)/p(x)` from the trapezoid rule applied to the score along the
/// straight path.
pub fn density_ratio_along_path<S: ScoreModel + ?Sized>(
    score: &S,
    x: &[f64],
    x_shifted: &[f64],
    n_nodes: usize,
) -> Result<PathRatio> {
    check_shape(score.dim(), x.len())?;
    check_shape(x.len(), x_shifted.len())?;
    if n_nodes < 2 {
        return Err(param("path integration needs at least 2 nodes"));
    }
    let delta: Vec<f64> = x_shifted.iter().zip(x).map(|(a, b)| a - b).collect();
    if delta.iter().all(|&v| v == 0.0) {
        return Ok(PathRatio { ratio: 1.0, clamped: false });
    }
    let mut y = vec![0.0; x.len()];
    let mut s = vec![0.0; x.len()];
    let mut acc = 0.0;
    for i in 0..n_nodes {
        let t = i as f64 / (n_nodes - 1) as f64;
        for j in 0..x.len() {
            y[j] = x[j] + t * delta[j];
        }
        score.score_into(&y, &mut s)?;
        let w = if i == 0 || i == n_nodes - 1 { 0.5 } else { 1.0 };
        acc += w * s.iter().zip(&delta).map(|(a, b)| a * b).sum::<f64>();
    }
    let (l, clamped) = clamp_log_ratio(acc / (n_nodes - 1) as f64);
    if l.is_nan() {
        return Err(Error::NonFinite("path log-ratio".into()));
    }
    Ok(PathRatio { ratio: l.exp(), clamped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RieszDrift {
    pub value: Vec<f64>,
    /// Number of density ratios that hit the clamp.
    pub clamped: usize,
}

/// Coordinate-wise truncated Riesz drift
/// `h^{−γ} Σ_k g_k (p(x − k h e_j)/p(x)) s_j(x − k h e_j)`.
///
/// Ratios for all shifts along an axis come from one cumulative trapezoid on
/// a shared grid with at least 8 sub-intervals per step `h`.
pub fn riesz_drift<S: ScoreModel + ?Sized>(score: &S, x: &[f64], cfg: &RieszConfig, alpha: f64) -> Result<RieszDrift> {
    cfg.validate()?;
    check_shape(score.dim(), x.len())?;
    if (alpha - 2.0 - cfg.order).abs() > 1e-12 {
        return Err(param("riesz order must equal alpha - 2"));
    }
    let d = x.len();
    let mut s = vec![0.0; d];
    score.score_into(x, &mut s)?;
    if cfg.k == 0 && cfg.normalize_k0 {
        let c = c_alpha(alpha)?;
        return Ok(RieszDrift { value: s.iter().map(|v| c * v).collect(), clamped: 0 });
    }
    let table = riesz_coeffs(cfg.order, cfg.k)?;
    let prefactor = cfg.h.powf(-cfg.order);
    let kk = cfg.k as i64;
    let m = ((33.0 * cfg.h).ceil() as usize).max(8) as i64;
    let delta = cfg.h / m as f64;
    let mut value = vec![0.0; d];
    let mut clamped = 0;
    let mut y = x.to_vec();
    let mut sy = vec![0.0; d];
    // s_j along the axis at offsets i·δ, i ∈ [−K m, K m]
    let mut line = vec![0.0; (2 * kk * m + 1) as usize];
    for j in 0..d {
        if kk == 0 {
            line[0] = s[j];
        } else {
            for (idx, i) in (-kk * m..=kk * m).enumerate() {
                if i == 0 {
                    line[idx] = s[j];
                    continue;
                }
                y[j] = x[j] + i as f64 * delta;
                score.score_into(&y, &mut sy)?;
                line[idx] = sy[j];
            }
            y[j] = x[j];
        }
        let centre = (kk * m) as usize;
        let mut total = table.get(0) * s[j];
        for dir in [-1i64, 1] {
            let mut log_ratio = 0.0;
            for k in 1..=kk {
                for step in 0..m {
                    let a = (centre as i64 + dir * ((k - 1) * m + step)) as usize;
                    let b = (centre as i64 + dir * ((k - 1) * m + step + 1)) as usize;
                    log_ratio += dir as f64 * 0.5 * delta * (line[a] + line[b]);
                }
                let g = table.get(k);
                if g == 0.0 {
                    continue;
                }
                let (l, c) = clamp_log_ratio(log_ratio);
                if l.is_nan() {
                    return Err(Error::NonFinite("riesz log-ratio".into()));
                }
                clamped += c as usize;
                // shift −k h corresponds to dir = −1 in the grid
                total += g * l.exp() * line[(centre as i64 + dir * k * m) as usize];
            }
        }
        value[j] = prefactor * total;
    }
    Ok(RieszDrift { value, clamped })
}

/// The Riesz drift as a vector field usable wherever a score is expected.
pub struct RieszField<S> {
    pub score: S,
    pub cfg: RieszConfig,
    pub alpha: f64,
    output_scale: f64,
    clamped: AtomicUsize,
}

impl<S: ScoreModel> RieszField<S> {
    pub fn new(score: S, cfg: RieszConfig, alpha: f64) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { score, cfg, alpha, output_scale: 1.0, clamped: AtomicUsize::new(0) })
    }

    /// The drift divided by `c_α`, for proposal code that multiplies its
    /// input field by `c_α`.
    pub fn proposal_field(score: S, cfg: RieszConfig, alpha: f64) -> Result<Self> {
        let mut f = Self::new(score, cfg, alpha)?;
        f.output_scale = 1.0 / c_alpha(alpha)?;
        Ok(f)
    }

    pub fn clamped_ratios(&self) -> usize {
        self.clamped.load(Ordering::Relaxed)
    }
}

impl<S: ScoreModel> ScoreModel for RieszField<S> {
    fn dim(&self) -> usize {
        self.score.dim()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let r = riesz_drift(&self.score, x, &self.cfg, self.alpha)?;
        self.clamped.fetch_add(r.clamped, Ordering::Relaxed);
        for (o, v) in out.iter_mut().zip(&r.value) {
            *o = self.output_scale * v;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AblationCell {
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub h: f64,
    pub lambda_alpha: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub cell: AblationCell,
    pub w1: f64,
    pub q95: f64,
    pub q99: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub rows: Vec<AblationRow>,
    pub complete: bool,
}

pub const ABLATION_COLUMNS: [&str; 9] = ["alpha", "K", "h", "lambda_alpha", "w1", "q95", "q99", "n_steps", "seed"];

impl AblationTable {
    pub fn to_csv(&self) -> String {
        let mut s = ABLATION_COLUMNS.join(",");
        s.push('\n');
        for r in &self.rows {
            let c = &r.cell;
            let _ = writeln!(
                s,
                "{},{},{:e},{},{:.10e},{:.10e},{:.10e},{},{}",
                c.alpha, c.k, c.h, c.lambda_alpha, r.w1, r.q95, r.q99, r.n_steps, c.seed
            );
        }
        s
    }

    /// Lowest mean W₁ (over seeds) among rows satisfying `pred`.
    pub fn best_mean_w1(&self, pred: impl Fn(&AblationCell) -> bool) -> Option<f64> {
        let mut groups: Vec<((f64, usize, f64, f64), f64, usize)> = Vec::new();
        for r in self.rows.iter().filter(|r| pred(&r.cell)) {
            let key = (r.cell.alpha, r.cell.k, r.cell.h, r.cell.lambda_alpha);
            match groups.iter_mut().find(|g| g.0 == key) {
                Some(g) => {
                    g.1 += r.w1;
                    g.2 += 1;
                }
                None => groups.push((key, r.w1, 1)),
            }
        }
        groups.iter().map(|g| g.1 / g.2 as f64).min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblationGrid {
    pub alphas: Vec<f64>,
    #[serde(rename = "K")]
    pub ks: Vec<usize>,
    pub hs: Vec<f64>,
    pub lambda_alphas: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Cells beyond this count are skipped and the table marked incomplete.
    pub max_cells: usize,
    pub n_steps: usize,
}

impl AblationGrid {
    pub fn cells(&self) -> Vec<AblationCell> {
        let mut out = Vec::new();
        for &alpha in &self.alphas {
            for &k in &self.ks {
                for &h in &self.hs {
                    for &lambda_alpha in &self.lambda_alphas {
                        for &seed in &self.seeds {
                            out.push(AblationCell { alpha, k, h, lambda_alpha, seed });
                        }
                    }
                }
            }
        }
        out
    }
}

/// Evaluate every cell of the grid with `run_cell`, in grid order.
pub fn ablation_grid(
    grid: &AblationGrid,
    mut run_cell: impl FnMut(&AblationCell) -> Result<MetricReport>,
) -> Result<AblationTable> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(Error::Empty("ablation grid has no cells".into()));
    }
    let complete = cells.len() <= grid.max_cells;
    let mut rows = Vec::new();
    for cell in cells.iter().take(grid.max_cells) {
        let m = run_cell(cell)?;
        rows.push(AblationRow { cell: *cell, w1: m.w1, q95: m.q95_err, q99: m.q99_err, n_steps: grid.n_steps });
    }
    Ok(AblationTable { rows, complete })
}
