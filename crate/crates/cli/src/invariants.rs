//! Self-checks run by `mafla validate`.

use std::fmt::Write as _;

use mafla::diffnet::{Activation, Mlp};
use mafla::points::PointCloud;
use mafla::proposal::{c_alpha, DriftConfig, JacobianMode};
use mafla::riesz::{riesz_drift, RieszConfig};
use mafla::samplers::{run_parallel, ChainConfig, Models, SamplerKind};
use mafla::sbm::{loss_l2, sbm_loss_and_grad, BarkerAcceptance, SbmBatch};
use mafla::stable::{ecf_check, ecf_projection_check, sample_sas_1d, sample_sas_isotropic};
use mafla::targets::{Component, ScoreModel, Target, TargetKind, TargetSpec};
use mafla::RngStream;
use rand::Rng;

use crate::runner::{CheckRow, RunOutput, Table};

const U_GRID: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 3.0];

fn row(check: impl Into<String>, value: f64, tolerance: f64) -> CheckRow {
    CheckRow { check: check.into(), value, tolerance, pass: value.is_finite() && value <= tolerance }
}

fn max(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

fn gaussian(dim: usize, scale: f64) -> Target {
    let spec = TargetSpec::mixture(
        TargetKind::GaussianMixture,
        None,
        vec![Component { weight: 1.0, center: vec![0.3; dim], scale }],
    );
    Target::new(spec).expect("valid gaussian")
}

fn random_pairs(dim: usize, n: usize, rng: &mut impl Rng) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..n)
        .map(|_| {
            let x = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            let xp = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();
            (x, xp)
        })
        .collect()
}

fn ecf_checks(out: &mut Vec<CheckRow>) {
    let n = 40_000;
    // 4/sqrt(n) is about 4 standard errors of an ECF estimate
    let tol = 4.0 / (n as f64).sqrt();
    for (i, alpha) in [1.2, 1.5, 1.8, 2.0].into_iter().enumerate() {
        let mut rng = RngStream::new(11, i as u64).rng();
        let xs = sample_sas_1d(alpha, 1.0, n, &mut rng).expect("valid alpha");
        out.push(row(format!("ecf_1d_alpha={alpha}"), max(ecf_check(&xs, &U_GRID, alpha, 1.0)), tol));
        let pts = sample_sas_isotropic(alpha, 1.0, 3, n, &mut rng).expect("valid alpha");
        let dir = [0.6, -0.8, 0.0];
        out.push(row(
            format!("ecf_isotropic_d3_alpha={alpha}"),
            max(ecf_projection_check(&pts, &dir, &U_GRID, alpha, 1.0)),
            tol,
        ));
    }
}

fn gradient_checks(out: &mut Vec<CheckRow>) {
    let mut rng = RngStream::new(12, 0).rng();
    let net = Mlp::acceptance(2, &[8, 8], Activation::Tanh, RngStream::new(12, 1)).expect("valid net");
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = net.input_grad(&x).expect("finite");
        for i in 0..4 {
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (net.logit(&up).unwrap() - net.logit(&dn).unwrap()) / (2.0 * h);
            worst = worst.max((fd - g[i]).abs() / fd.abs().max(1e-2));
        }
    }
    out.push(row("net_input_grad_fd_rel", worst, 1e-6));

    let t = gaussian(2, 0.8);
    let cfg = DriftConfig::new(1.7, 0.05).expect("valid drift");
    let batch = SbmBatch::build(random_pairs(2, 16, &mut rng), &t, &cfg, JacobianMode::Analytic).expect("batch");
    let (_, grad) = sbm_loss_and_grad(&net, &batch, 1.7, 0.5, 0.1).expect("loss");
    let loss = |p: &[f64]| {
        let mut m = net.clone();
        m.params.copy_from_slice(p);
        sbm_loss_and_grad(&m, &batch, 1.7, 0.5, 0.1).expect("loss").0.combined
    };
    let mut worst = 0.0f64;
    for i in (0..net.params.len()).step_by(7) {
        let (mut up, mut dn) = (net.params.clone(), net.params.clone());
        up[i] += h;
        dn[i] -= h;
        let fd = (loss(&up) - loss(&dn)) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(1e-3));
    }
    out.push(row("sbm_param_grad_fd_rel", worst, 1e-5));
}

fn balance_checks(out: &mut Vec<CheckRow>) {
    let mut rng = RngStream::new(13, 0).rng();
    let t = gaussian(2, 0.7);
    let cfg = DriftConfig::new(2.0, 0.1).expect("valid drift");
    let b = BarkerAcceptance { target: t.clone(), tau: cfg.tau };
    let batch = SbmBatch::build(random_pairs(2, 64, &mut rng), &t, &cfg, JacobianMode::Analytic).expect("batch");
    out.push(row("barker_residual_l2", loss_l2(&batch.residuals(&b).expect("residuals")), 1e-10));
    out.push(row("c_alpha_at_2", (c_alpha(2.0).unwrap() - 1.0).abs(), 1e-14));
}

fn riesz_checks(out: &mut Vec<CheckRow>) {
    let t = gaussian(3, 1.1);
    let mut worst = 0.0f64;
    for alpha in [1.2, 1.5, 1.8] {
        let c = c_alpha(alpha).unwrap();
        for x in [[0.0, 1.0, -2.0], [3.0, -0.5, 0.2]] {
            let d = riesz_drift(&t, &x, &RieszConfig::new(alpha, 0.05, 0), alpha).expect("drift");
            let s = t.score(&x).unwrap();
            worst = worst.max(max(d.value.iter().zip(&s).map(|(v, si)| (v - c * si).abs())));
        }
    }
    out.push(row("riesz_k0_equals_scaled_score", worst, 1e-12));
}

fn reduction_checks(out: &mut Vec<CheckRow>) {
    let t = gaussian(2, 1.0);
    let init = PointCloud::zeros(16, 2);
    let cfg = ChainConfig::new(2.0, 0.05, 50);
    let a = run_parallel(SamplerKind::Fula, &init, Models::score_only(&t), &cfg, 5).expect("run");
    let b = run_parallel(SamplerKind::Ula, &init, Models::score_only(&t), &cfg, 5).expect("run");
    let diff = max(a.final_particles.as_flat().iter().zip(b.final_particles.as_flat()).map(|(x, y)| (x - y).abs()));
    out.push(row("fula_alpha2_matches_ula", diff, 0.0));
}

pub fn checks() -> Vec<CheckRow> {
    let mut out = Vec::new();
    ecf_checks(&mut out);
    gradient_checks(&mut out);
    balance_checks(&mut out);
    riesz_checks(&mut out);
    reduction_checks(&mut out);
    out
}

pub fn checks_csv(rows: &[CheckRow]) -> String {
    let mut s = String::from("check,value,tolerance,pass\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6e},{:.6e},{}", r.check, r.value, r.tolerance, r.pass);
    }
    s
}

pub fn run_checks() -> RunOutput {
    let checks = checks();
    RunOutput {
        tables: vec![Table { name: "validate.csv".into(), description: "numerical self-checks".into(), csv: checks_csv(&checks) }],
        checks,
        ..RunOutput::default()
    }
}
