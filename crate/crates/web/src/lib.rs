//! Browser bindings for the `mafla` sampler library, used by `www/index.html`.

use mafla::diffnet::{Activation, Mlp};
use mafla::evalkit::w1_1d;
use mafla::proposal::DriftConfig;
use mafla::riesz::riesz_coeffs;
use mafla::samplers::{run_mafla_parallel, run_parallel, ChainConfig, Models, SamplerKind};
use mafla::sbm::{train_acceptance, NetAcceptance, SbmConfig};
use mafla::stable::{pdf_sas_1d, sample_sas_1d};
use mafla::targets::{Component, Target, TargetKind, TargetSpec};
use mafla::RngStream;
use wasm_bindgen::prelude::*;

fn js(e: mafla::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Normalized histogram of `n` standard `SαS` draws over `[lo, hi)`.
pub fn histogram(alpha: f64, n: usize, seed: u64, lo: f64, hi: f64, bins: usize) -> mafla::Result<Vec<f64>> {
    let xs = sample_sas_1d(alpha, 1.0, n, &mut RngStream::new(seed, 0).rng())?;
    Ok(bin(&xs, lo, hi, bins))
}

fn bin(xs: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut h = vec![0.0; bins];
    for &x in xs {
        if x >= lo && x < hi {
            h[((x - lo) / width) as usize] += 1.0;
        }
    }
    let norm = xs.len().max(1) as f64 * width;
    h.iter().map(|c| c / norm).collect()
}

#[wasm_bindgen]
pub fn stable_histogram(alpha: f64, n: usize, seed: u64, lo: f64, hi: f64, bins: usize) -> Result<Vec<f64>, JsError> {
    histogram(alpha, n, seed, lo, hi, bins).map_err(js)
}

#[wasm_bindgen]
pub fn stable_pdf(alpha: f64, xs: &[f64]) -> Result<Vec<f64>, JsError> {
    xs.iter().map(|&x| pdf_sas_1d(alpha, x)).collect::<mafla::Result<_>>().map_err(js)
}

/// Coefficients `g_k` for `k = -K..=K` of the Riesz centered difference of
/// order `alpha - 2`.
#[wasm_bindgen]
pub fn riesz_coefficients(alpha: f64, k_max: usize) -> Result<Vec<f64>, JsError> {
    let t = riesz_coeffs(alpha - 2.0, k_max).map_err(js)?;
    Ok((-(k_max as i64)..=k_max as i64).map(|k| t.get(k)).collect())
}

/// FULA and MAFLA final states on a 1-D two-mode target.
#[wasm_bindgen]
pub struct Comparison {
    fula: Vec<f64>,
    mafla: Vec<f64>,
    grid: Vec<f64>,
    density: Vec<f64>,
    w1_fula: f64,
    w1_mafla: f64,
    acceptance: f64,
}

#[wasm_bindgen]
impl Comparison {
    #[wasm_bindgen(getter)]
    pub fn fula(&self) -> Vec<f64> {
        self.fula.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn mafla(&self) -> Vec<f64> {
        self.mafla.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn grid(&self) -> Vec<f64> {
        self.grid.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn density(&self) -> Vec<f64> {
        self.density.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn w1_fula(&self) -> f64 {
        self.w1_fula
    }
    #[wasm_bindgen(getter)]
    pub fn w1_mafla(&self) -> f64 {
        self.w1_mafla
    }
    #[wasm_bindgen(getter)]
    pub fn acceptance(&self) -> f64 {
        self.acceptance
    }
}

pub fn two_mode_target(alpha: f64, weight: f64) -> mafla::Result<Target> {
    Target::new(TargetSpec::mixture(
        TargetKind::StableLocationMixture,
        Some(alpha),
        vec![
            Component { weight, center: vec![-3.0], scale: 1.0 },
            Component { weight: 1.0 - weight, center: vec![3.0], scale: 1.0 },
        ],
    ))
}

/// Train a small acceptance network, then run both samplers from exact
/// target draws.
pub fn run_comparison(alpha: f64, tau: f64, weight: f64, n_steps: usize, epochs: usize, seed: u64) -> mafla::Result<Comparison> {
    let target = two_mode_target(alpha, weight)?;
    let drift = DriftConfig::new(alpha, tau)?;
    let mut net = Mlp::acceptance(1, &[16, 16], Activation::Tanh, RngStream::new(seed, 1))?;
    let mut sbm = SbmConfig::new(epochs);
    sbm.pairs_per_epoch = 256;
    sbm.lambda_entropy = 0.01;
    sbm.adam.lr = 3e-3;
    train_acceptance(&mut net, &target, |n, rng| target.exact_sample(n, rng), &drift, &sbm, RngStream::new(seed, 2))?;
    let n_particles = 400;
    let init = target.exact_sample(n_particles, &mut RngStream::new(seed, 3).rng())?;
    let chain = ChainConfig::new(alpha, tau, n_steps);
    let fula = run_parallel(SamplerKind::Fula, &init, Models::score_only(&target), &chain, seed)?;
    let mafla = run_mafla_parallel(&init, &target, &NetAcceptance { net }, &chain, seed)?;
    let reference = target.exact_sample(4000, &mut RngStream::new(seed, 4).rng())?;
    let f = fula.final_particles.finite_rows().into_flat();
    let m = mafla.final_particles.finite_rows().into_flat();
    let reference = reference.into_flat();
    let grid: Vec<f64> = (0..=240).map(|i| -12.0 + 0.1 * i as f64).collect();
    let density = grid.iter().map(|&x| target.log_density(&[x]).map(f64::exp)).collect::<mafla::Result<_>>()?;
    Ok(Comparison {
        w1_fula: w1_1d(&f, &reference)?,
        w1_mafla: w1_1d(&m, &reference)?,
        acceptance: mafla.mean_acceptance(),
        fula: f,
        mafla: m,
        grid,
        density,
    })
}

#[wasm_bindgen]
pub fn compare(alpha: f64, tau: f64, weight: f64, n_steps: usize, epochs: usize, seed: u64) -> Result<Comparison, JsError> {
    run_comparison(alpha, tau, weight, n_steps, epochs, seed).map_err(js)
}
