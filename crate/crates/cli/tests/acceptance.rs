//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion.
//! `ACCEPTANCE_ONLY=3,5` runs a subset; `ACCEPTANCE_STRICT=1` exits non-zero
//! on any failure.

use std::time::Instant;

use mafla::combopt::{self, Graph, Relaxation};
use mafla::diffnet::{Activation, Mlp};
use mafla::evalkit::ks_two_sample;
use mafla::points::PointCloud;
use mafla::proposal::{c_alpha, DriftConfig, JacobianMode};
use mafla::riesz::{density_ratio_along_path, riesz_coeffs, riesz_drift, RieszConfig};
use mafla::samplers::{run_mafla_parallel, run_parallel, ChainConfig, Models, SamplerKind};
use mafla::sbm::{loss_l2, sbm_loss_and_grad, BarkerAcceptance, ConstantAcceptance, SbmBatch};
use mafla::stable::{ecf_check, ecf_projection_check, sample_sas_1d, sample_sas_isotropic};
use mafla::targets::{Component, FnScore, ScoreModel, Target, TargetKind, TargetSpec};
use mafla::RngStream;
use mafla_cli::config::{relaxation_for, ExperimentConfig, GraphModel};
use mafla_cli::recipes;
use mafla_cli::runner::{make_graph, run_experiment, run_relaxation, RunOutput};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn gaussian(dim: usize, center: f64, scale: f64) -> Target {
    Target::new(TargetSpec::mixture(
        TargetKind::GaussianMixture,
        None,
        vec![Component { weight: 1.0, center: vec![center; dim], scale }],
    ))
    .unwrap()
}

fn unit(dim: usize, rng: &mut impl Rng) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn rel_err(fd: f64, an: f64) -> f64 {
    (fd - an).abs() / fd.abs().max(an.abs()).max(1e-3)
}

fn c1_stable_law() -> Outcome {
    let n = 1_000_000;
    let u: Vec<f64> = (0..=24).map(|i| -3.0 + 0.25 * i as f64).collect();
    let mut worst = 0.0f64;
    for (i, alpha) in [1.2, 1.5, 1.9, 2.0].into_iter().enumerate() {
        let mut rng = RngStream::new(101, i as u64).rng();
        let xs = sample_sas_1d(alpha, 1.0, n, &mut rng).unwrap();
        worst = worst.max(ecf_check(&xs, &u, alpha, 1.0).into_iter().fold(0.0, f64::max));
        let pts = sample_sas_isotropic(alpha, 1.0, 3, n, &mut rng).unwrap();
        for _ in 0..3 {
            let dir = unit(3, &mut rng);
            worst = worst.max(ecf_projection_check(&pts, &dir, &u, alpha, 1.0).into_iter().fold(0.0, f64::max));
        }
    }
    outcome(worst < 0.02, format!("max ECF error {worst:.4} (tol 0.02)"))
}

fn c2_gradients() -> Outcome {
    let mut rng = RngStream::new(102, 0).rng();
    let h = 1e-5;
    let instances = 100;
    let mut worst = [0.0f64; 5];
    for inst in 0..instances {
        let d = 2 + inst % 3;
        // score net: vector-Jacobian product
        let net = Mlp::score_net(d, &[16, 16], Activation::Softplus, RngStream::new(102, 1 + inst as u64)).unwrap();
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let c: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = net.input_vjp(&x, &c).unwrap();
        let f = |y: &[f64]| net.forward(y).unwrap().iter().zip(&c).map(|(a, b)| a * b).sum::<f64>();
        for i in 0..d {
            let (mut up, mut dn) = (x.clone(), x.clone());
            up[i] += h;
            dn[i] -= h;
            worst[0] = worst[0].max(rel_err((f(&up) - f(&dn)) / (2.0 * h), g[i]));
        }
        // acceptance net: input gradient of the logit
        let acc = Mlp::acceptance(d, &[16, 16], Activation::Tanh, RngStream::new(103, inst as u64)).unwrap();
        let z: Vec<f64> = (0..2 * d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let g = acc.input_grad(&z).unwrap();
        for i in 0..2 * d {
            let (mut up, mut dn) = (z.clone(), z.clone());
            up[i] += h;
            dn[i] -= h;
            worst[1] = worst[1].max(rel_err((acc.logit(&up).unwrap() - acc.logit(&dn).unwrap()) / (2.0 * h), g[i]));
        }
        // SBM parameter gradient
        let t = gaussian(d, 0.2, 0.9);
        let alpha = rng.random_range(1.3..2.0);
        let cfg = DriftConfig::new(alpha, 0.05).unwrap();
        let pairs: Vec<_> = (0..4)
            .map(|_| {
                let a: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                let b: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
                (a, b)
            })
            .collect();
        let batch = SbmBatch::build(pairs, &t, &cfg, JacobianMode::Analytic).unwrap();
        let (_, grad) = sbm_loss_and_grad(&acc, &batch, alpha, 0.5, 0.1).unwrap();
        let loss = |p: &[f64]| {
            let mut m = acc.clone();
            m.params.copy_from_slice(p);
            sbm_loss_and_grad(&m, &batch, alpha, 0.5, 0.1).unwrap().0.combined
        };
        for _ in 0..3 {
            let i = rng.random_range(0..acc.params.len());
            let (mut up, mut dn) = (acc.params.clone(), acc.params.clone());
            up[i] += h;
            dn[i] -= h;
            worst[2] = worst[2].max(rel_err((loss(&up) - loss(&dn)) / (2.0 * h), grad[i]));
        }
        // CO scores against the energy
        let n = 8 + inst % 5;
        let graph = combopt::gen_er(n, 0.4, &mut rng).unwrap();
        for (slot, rel) in [
            (3, Relaxation::MaxCut(combopt::MaxCutTarget::new(graph.clone(), 0.5).unwrap())),
            (4, Relaxation::VertexCover(combopt::VcTarget::new(graph, 2.0, 0.5).unwrap())),
        ] {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.5..1.5)).collect();
            let mut s = vec![0.0; n];
            rel.score_into(&u, &mut s).unwrap();
            for i in 0..n {
                let (mut up, mut dn) = (u.clone(), u.clone());
                up[i] += h;
                dn[i] -= h;
                let fd = -(rel.energy(&up) - rel.energy(&dn)) / (2.0 * h) / rel.temperature();
                worst[slot] = worst[slot].max(rel_err(fd, s[i]));
            }
        }
    }
    let max = worst.iter().cloned().fold(0.0, f64::max);
    outcome(
        max < 1e-3,
        format!(
            "{instances} instances; max rel err score-net {:.1e}, acceptance-net {:.1e}, SBM {:.1e}, maxcut {:.1e}, vc {:.1e} (tol 1e-3)",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

fn c3_detailed_balance() -> Outcome {
    let t = gaussian(2, 0.5, 0.8);
    let cfg = DriftConfig::new(2.0, 0.1).unwrap();
    let barker = BarkerAcceptance { target: t.clone(), tau: cfg.tau };
    let mut rng = RngStream::new(103, 0).rng();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let pairs: Vec<_> = (0..128)
            .map(|_| {
                let a: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
                let b: Vec<f64> = (0..2).map(|_| rng.random_range(-3.0..3.0)).collect();
                (a, b)
            })
            .collect();
        let batch = SbmBatch::build(pairs, &t, &cfg, JacobianMode::Analytic).unwrap();
        worst = worst.max(loss_l2(&batch.residuals(&barker).unwrap()));
    }
    let init = PointCloud::zeros(256, 2);
    let chain = ChainConfig::new(2.0, 0.1, 5000);
    let run = run_mafla_parallel(&init, &t, &barker, &chain, 7).unwrap();
    let samples = run.samples(0.2);
    let reference = t.exact_sample(20_000, &mut RngStream::new(103, 1).rng()).unwrap();
    let p: Vec<f64> =
        (0..2).map(|j| ks_two_sample(&samples.column(j), &reference.column(j)).unwrap().p_value).collect();
    let pmin = p.iter().cloned().fold(1.0, f64::min);
    outcome(
        worst < 1e-10 && pmin > 0.01,
        format!("max batch residual L2 {worst:.2e} (tol 1e-10); KS p-values {:.3}, {:.3} (need > 0.01)", p[0], p[1]),
    )
}

fn c4_degeneracy() -> Outcome {
    let t = Target::new(TargetSpec::mixture(
        TargetKind::StableLocationMixture,
        Some(1.6),
        vec![
            Component { weight: 0.4, center: vec![-1.0, 0.5], scale: 1.0 },
            Component { weight: 0.6, center: vec![2.0, 0.0], scale: 0.7 },
        ],
    ))
    .unwrap();
    let init = t.exact_sample(64, &mut RngStream::new(104, 0).rng()).unwrap();
    let chain = ChainConfig::new(1.6, 0.05, 300);
    let fula = run_parallel(SamplerKind::Fula, &init, Models::score_only(&t), &chain, 9).unwrap();
    let mafla = run_mafla_parallel(&init, &t, &ConstantAcceptance(1.0), &chain, 9).unwrap();
    let same1 = fula.final_particles.as_flat().iter().zip(mafla.final_particles.as_flat()).all(|(a, b)| a.to_bits() == b.to_bits());
    let g = gaussian(3, 0.0, 1.0);
    let init = PointCloud::zeros(64, 3);
    let chain = ChainConfig::new(2.0, 0.05, 300);
    let fula = run_parallel(SamplerKind::Fula, &init, Models::score_only(&g), &chain, 9).unwrap();
    let ula = run_parallel(SamplerKind::Ula, &init, Models::score_only(&g), &chain, 9).unwrap();
    let same2 = fula.final_particles.as_flat().iter().zip(ula.final_particles.as_flat()).all(|(a, b)| a.to_bits() == b.to_bits());
    outcome(same1 && same2, format!("MAFLA(a=1) == FULA: {same1}; FULA(alpha=2) == ULA: {same2}"))
}

fn c5_riesz() -> Outcome {
    // γ = 0: the drift is the score itself for any K and h
    let s = FnScore::new(2, |x: &[f64], o: &mut [f64]| {
        o[0] = -x[0] + 0.3 * x[1].sin();
        o[1] = -2.0 * x[1];
    });
    let x = [0.4, -0.9];
    let sx = s.score(&x).unwrap();
    let identity = [(0usize, 0.1), (1, 0.01), (3, 0.05), (5, 0.2)]
        .iter()
        .all(|&(k, h)| riesz_drift(&s, &x, &RieszConfig::new(2.0, h, k), 2.0).unwrap().value == sx);
    let mut coeff_err = 0.0f64;
    for i in 0..50 {
        let gamma = -0.99 + 0.99 * i as f64 / 49.0;
        let t = riesz_coeffs(gamma, 1).unwrap();
        coeff_err = coeff_err.max((t.get(0) - c_alpha(gamma + 2.0).unwrap()).abs());
    }
    let gs = FnScore::new(1, |x: &[f64], o: &mut [f64]| o[0] = -(x[0] - 0.3) / 1.7);
    let logp = |x: f64| -(x - 0.3f64).powi(2) / 3.4;
    let mut path_err = 0.0f64;
    for (a, b) in [(-1.2, 2.1), (0.0, 0.5), (3.0, -4.0)] {
        let r = density_ratio_along_path(&gs, &[a], &[b], 2).unwrap().ratio;
        let want = (logp(b) - logp(a)).exp();
        path_err = path_err.max((r - want).abs() / want.max(1.0));
    }
    let start = Instant::now();
    let mut cfg = recipes::riesz_ablation();
    let grid = cfg.sweep.ablation.as_mut().unwrap();
    grid.alphas = vec![1.2];
    grid.hs = vec![0.001, 0.003, 0.01, 0.03, 0.1];
    let out = run_experiment(&cfg).unwrap();
    let table = out.ablation.unwrap();
    let base = table.best_mean_w1(|c| c.k == 0).unwrap();
    let best = table.best_mean_w1(|c| c.k >= 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        identity && coeff_err < 1e-12 && path_err < 1e-12 && best < base && secs < 600.0,
        format!(
            "gamma=0 identity {identity}; max |g0 - c| {coeff_err:.1e}; path ratio err {path_err:.1e}; alpha=1.2 W1 K=0 {base:.4} vs best K>=1 {best:.4}; grid {secs:.0}s"
        ),
    )
}

fn mean_w1(out: &RunOutput, sampler: &str, label: Option<&str>) -> f64 {
    out.mean_metric(|r| r.sampler == sampler && label.is_none_or(|l| r.experiment_id.ends_with(l)), |r| r.w1).unwrap()
}

fn c6_mixture() -> Outcome {
    let start = Instant::now();
    let cfg = recipes::mixture2d();
    let out = run_experiment(&cfg).unwrap();
    let wf = mean_w1(&out, "fula", None);
    let wm = mean_w1(&out, "mafla", None);
    let qf = out.mean_metric(|r| r.sampler == "fula", |r| r.q99_err).unwrap();
    let qm = out.mean_metric(|r| r.sampler == "mafla", |r| r.q99_err).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        wm <= 0.5 * wf && qm <= 0.5 * qf && secs < 1800.0,
        format!(
            "{} seeds: W1 MAFLA {wm:.3} / FULA {wf:.3} = {:.2}; q99 err {qm:.2} / {qf:.2} = {:.2} (need <= 0.5); {secs:.0}s",
            cfg.seeds.len(),
            wm / wf,
            qm / qf
        ),
    )
}

fn c7_tau_sweep() -> Outcome {
    let cfg = recipes::tau_sweep();
    let out = run_experiment(&cfg).unwrap();
    let taus = cfg.sweep.taus.clone().unwrap();
    let mut wins = 0;
    let mut parts = Vec::new();
    for tau in &taus {
        let label = format!("tau={tau}");
        let (f, m) = (mean_w1(&out, "fula", Some(&label)), mean_w1(&out, "mafla", Some(&label)));
        wins += (m <= f) as usize;
        parts.push(format!("{tau}:{m:.3}/{f:.3}"));
    }
    let need = (0.8 * taus.len() as f64).ceil() as usize;
    outcome(wins >= need, format!("MAFLA <= FULA at {wins}/{} taus (need {need}); W1 mafla/fula {}", taus.len(), parts.join(" ")))
}

fn c8_dim_sweep() -> Outcome {
    let mut cfg = recipes::dim_sweep();
    cfg.sweep.dims = Some(vec![8, 16, 32]);
    let out = run_experiment(&cfg).unwrap();
    let mut all_better = true;
    let mut gains = Vec::new();
    let mut parts = Vec::new();
    for d in [8, 16, 32] {
        let label = format!("d={d}");
        let (f, m) = (mean_w1(&out, "fula", Some(&label)), mean_w1(&out, "mafla", Some(&label)));
        all_better &= m < f;
        gains.push(1.0 - m / f);
        parts.push(format!("d={d}:{m:.3}/{f:.3}"));
    }
    let gain = gains.iter().sum::<f64>() / gains.len() as f64;
    outcome(
        all_better && gain >= 0.15,
        format!("W1 mafla/fula {}; mean relative improvement {:.1}% (need >= 15%)", parts.join(" "), 100.0 * gain),
    )
}

fn c9_maxcut() -> Outcome {
    let start = Instant::now();
    let mut cfg = recipes::maxcut();
    cfg.sweep.graphs.as_mut().unwrap().sizes = vec![64];
    let out = run_experiment(&cfg).unwrap();
    let mut ordered = true;
    let mut parts = Vec::new();
    for model in ["ba_m2", "er_p0.1"] {
        let mean = |s: &str| {
            let v: Vec<f64> = out.graph_rows.iter().filter(|r| r.model == model && r.sampler == s).map(|r| r.value_mean).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let (u, f, m) = (mean("ula"), mean("fula"), mean("mafla"));
        ordered &= m >= f && f >= u;
        parts.push(format!("{model}: mafla {m:.2} fula {f:.2} ula {u:.2}"));
    }
    let sweep = cfg.sweep.graphs.clone().unwrap();
    // Small instances use a longer, larger-step chain than the N = 64 comparison.
    let mut small = ExperimentConfig { samplers: vec![SamplerKind::Mafla], n_steps: 2000, ..cfg.clone() };
    small.drift.alpha = 1.8;
    small.drift.tau = 0.05;
    small.sbm.epochs = 20;
    let mut hits = 0;
    for g in 0..20 {
        let n = 12 + g % 5;
        let graph: Graph = make_graph(&GraphModel::Er { p: 0.3 }, n, g, 1000).unwrap();
        let opt = combopt::brute_force_maxcut(&graph).unwrap();
        let rel = relaxation_for(small.experiment, graph.clone(), &sweep);
        let res = run_relaxation(&small, &rel, &sweep, g as u64).unwrap();
        let best = res.runs[0].1.final_particles.rows().map(|u| combopt::cut_value(&combopt::sign_decode(u), &graph)).max().unwrap();
        hits += (best == opt) as usize;
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ordered && hits >= 16 && secs < 1200.0,
        format!("{}; brute-force optimum reached on {hits}/20 small graphs (need 16); {secs:.0}s", parts.join("; ")),
    )
}

fn c10_vertex_cover() -> Outcome {
    let mut cfg = recipes::vertex_cover();
    cfg.sweep.graphs.as_mut().unwrap().sizes = vec![64];
    let out = run_experiment(&cfg).unwrap();
    let feasible = out.graph_rows.iter().all(|r| r.feasible_fraction == Some(1.0));
    let mean = |s: &str| {
        let v: Vec<f64> = out.graph_rows.iter().filter(|r| r.sampler == s).map(|r| r.value_mean).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    let (f, m) = (mean("fula"), mean("mafla"));
    outcome(feasible && m <= f, format!("all covers feasible: {feasible}; mean cover MAFLA {m:.2} vs FULA {f:.2}"))
}

fn c11_reproducibility() -> Outcome {
    let mut ok = true;
    let mut names = Vec::new();
    for r in recipes::recipes() {
        let mut cfg = r.config.clone();
        cfg.n_steps = cfg.n_steps.min(50);
        cfg.n_particles = cfg.n_particles.min(32);
        cfg.seeds.truncate(2);
        cfg.sbm.epochs = cfg.sbm.epochs.min(3);
        cfg.sbm.pairs_per_epoch = 128;
        if let Some(s) = cfg.sweep.taus.as_mut() {
            s.truncate(2);
        }
        if let Some(s) = cfg.sweep.dims.as_mut() {
            s.truncate(2);
        }
        if let Some(g) = cfg.sweep.graphs.as_mut() {
            g.sizes = vec![16];
            g.n_graphs = 2;
            g.warmup_steps = 20;
        }
        if let Some(a) = cfg.sweep.ablation.as_mut() {
            a.max_cells = 3;
            a.n_steps = 30;
        }
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let same = a.tables.len() == b.tables.len() && a.tables.iter().zip(&b.tables).all(|(x, y)| x.csv == y.csv);
        ok &= same;
        names.push(format!("{}:{}", r.name, if same { "same" } else { "DIFFERENT" }));
    }
    outcome(ok, names.join(" "))
}

fn main() {
    let only: Option<Vec<usize>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let criteria: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "stable-law ECF", c1_stable_law),
        (2, "gradient fidelity", c2_gradients),
        (3, "detailed-balance oracle", c3_detailed_balance),
        (4, "degeneracy ladder", c4_degeneracy),
        (5, "Riesz drift", c5_riesz),
        (6, "2-D mixture", c6_mixture),
        (7, "step-size sweep", c7_tau_sweep),
        (8, "dimension sweep", c8_dim_sweep),
        (9, "MaxCut", c9_maxcut),
        (10, "vertex cover", c10_vertex_cover),
        (11, "reproducibility", c11_reproducibility),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        failed += (!o.pass) as usize;
        println!(
            "{} criterion {id:>2} ({name}): {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        if std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
            std::process::exit(1);
        }
    } else {
        println!("all criteria passed");
    }
}
