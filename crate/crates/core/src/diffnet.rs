//! Small fully connected networks with input gradients and parameter
//! gradients of losses that themselves contain input gradients.
//!
//! Layout: hidden layers `a_l = W_l h_{l-1} + b_l`, `h_l = φ(a_l)`, linear
//! output `y = W_L h_{L-1} + b_L`. Parameters are stored per layer as
//! `W_l` (row-major, out × in) followed by `b_l`.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_shape, param, Error, Result};
use crate::points::{dot, PointCloud};
use crate::rng::RngStream;
use crate::targets::ScoreModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Softplus,
}

impl Activation {
    /// `(φ(a), φ'(a), φ''(a))`
    #[inline]
    fn eval(self, a: f64) -> (f64, f64, f64) {
        match self {
            Activation::Tanh => {
                let t = a.tanh();
                let d = 1.0 - t * t;
                (t, d, -2.0 * t * d)
            }
            Activation::Softplus => {
                let s = sigmoid(a);
                let v = if a > 30.0 { a } else { a.exp().ln_1p() };
                (v, s, s * (1.0 - s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    /// Vector output, used as a score model.
    Vector,
    /// One logit, used as an acceptance function `σ(g)`.
    ScalarLogit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Architecture {
    pub widths: Vec<usize>,
    pub activation: Activation,
    pub head: Head,
}

impl Architecture {
    pub fn n_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// Hex SHA-256 of the architecture and parameter count.
    pub fn shape_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(self).expect("architecture serializes"));
        h.update((self.n_params() as u64).to_le_bytes());
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: Architecture,
    offsets: Vec<usize>,
    pub params: Vec<f64>,
}

/// Forward activations and the input-gradient pass for one input, kept so
/// that parameter gradients of losses in `value` and `input_grad` can be
/// formed afterwards.
#[derive(Debug, Clone)]
pub struct NestedGrad {
    pub value: Vec<f64>,
    /// `Jᵀc` for the cotangent `c` supplied to [`Mlp::nested`].
    pub input_grad: Vec<f64>,
    cot: Vec<f64>,
    h: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
}

impl Mlp {
    pub fn new(arch: Architecture, params: Vec<f64>) -> Result<Self> {
        if arch.widths.len() < 2 || arch.widths.contains(&0) {
            return Err(param("network needs at least input and output widths, all positive"));
        }
        if arch.head == Head::ScalarLogit && *arch.widths.last().unwrap() != 1 {
            return Err(param("scalar_logit head needs output width 1"));
        }
        check_shape(arch.n_params(), params.len())?;
        let mut offsets = Vec::with_capacity(arch.widths.len());
        let mut o = 0;
        offsets.push(0);
        for w in arch.widths.windows(2) {
            o += w[0] * w[1] + w[1];
            offsets.push(o);
        }
        Ok(Self { arch, offsets, params })
    }

    /// Fan-in uniform initialization `U(-1/√fan_in, 1/√fan_in)` for weights and biases.
    pub fn init(arch: Architecture, stream: RngStream) -> Result<Self> {
        let mut rng = stream.rng();
        let mut params = Vec::with_capacity(arch.n_params());
        for w in arch.widths.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                params.push(rng.random_range(-bound..bound));
            }
        }
        Self::new(arch, params)
    }

    /// Acceptance network on concatenated `(x_new, x_old)`.
    pub fn acceptance(dim: usize, hidden: &[usize], activation: Activation, stream: RngStream) -> Result<Self> {
        let mut widths = vec![2 * dim];
        widths.extend_from_slice(hidden);
        widths.push(1);
        Self::init(Architecture { widths, activation, head: Head::ScalarLogit }, stream)
    }

    pub fn score_net(dim: usize, hidden: &[usize], activation: Activation, stream: RngStream) -> Result<Self> {
        let mut widths = vec![dim];
        widths.extend_from_slice(hidden);
        widths.push(dim);
        Self::init(Architecture { widths, activation, head: Head::Vector }, stream)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn input_dim(&self) -> usize {
        self.arch.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.arch.widths.last().unwrap()
    }

    fn n_layers(&self) -> usize {
        self.arch.widths.len() - 1
    }

    /// `(W_l, b_l)` for layer `l` in `1..=L`.
    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (i, o) = (self.arch.widths[l - 1], self.arch.widths[l]);
        let s = self.offsets[l - 1];
        (&self.params[s..s + i * o], &self.params[s + i * o..s + i * o + o])
    }

    fn w_offset(&self, l: usize) -> usize {
        self.offsets[l - 1]
    }

    fn b_offset(&self, l: usize) -> usize {
        self.offsets[l - 1] + self.arch.widths[l - 1] * self.arch.widths[l]
    }

    fn affine(&self, l: usize, input: &[f64], out: &mut Vec<f64>) {
        let (w, b) = self.layer(l);
        let n_in = self.arch.widths[l - 1];
        out.clear();
        out.extend(b.iter().enumerate().map(|(i, bi)| bi + dot(&w[i * n_in..(i + 1) * n_in], input)));
    }

    /// `out = W_lᵀ v`
    fn affine_t(&self, l: usize, v: &[f64]) -> Vec<f64> {
        let (w, _) = self.layer(l);
        let n_in = self.arch.widths[l - 1];
        let mut out = vec![0.0; n_in];
        for (i, vi) in v.iter().enumerate() {
            if *vi != 0.0 {
                for (o, wij) in out.iter_mut().zip(&w[i * n_in..(i + 1) * n_in]) {
                    *o += vi * wij;
                }
            }
        }
        out
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_shape(self.input_dim(), x.len())?;
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        for l in 1..=self.n_layers() {
            self.affine(l, &cur, &mut next);
            if l < self.n_layers() {
                next.iter_mut().for_each(|v| *v = self.arch.activation.eval(*v).0);
            }
            std::mem::swap(&mut cur, &mut next);
        }
        Ok(cur)
    }

    /// Scalar logit for a `ScalarLogit` head.
    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        Ok(self.forward(x)?[0])
    }

    /// Forward pass plus the input-gradient pass `Jᵀc`, retaining everything
    /// needed by [`Mlp::nested_backward`].
    pub fn nested(&self, x: &[f64], cot: &[f64]) -> Result<NestedGrad> {
        check_shape(self.input_dim(), x.len())?;
        check_shape(self.output_dim(), cot.len())?;
        let big_l = self.n_layers();
        let mut h = Vec::with_capacity(big_l);
        let mut a = Vec::with_capacity(big_l - 1);
        h.push(x.to_vec());
        let mut buf = Vec::new();
        for l in 1..big_l {
            self.affine(l, &h[l - 1], &mut buf);
            a.push(buf.clone());
            h.push(buf.iter().map(|&v| self.arch.activation.eval(v).0).collect());
        }
        let mut value = Vec::new();
        self.affine(big_l, &h[big_l - 1], &mut value);
        // input-gradient pass: g_{L-1} = W_Lᵀ c, g_{l-1} = W_lᵀ (φ'(a_l) ⊙ g_l)
        let mut g = vec![Vec::new(); big_l];
        g[big_l - 1] = self.affine_t(big_l, cot);
        for l in (1..big_l).rev() {
            let delta: Vec<f64> =
                a[l - 1].iter().zip(&g[l]).map(|(&al, gl)| self.arch.activation.eval(al).1 * gl).collect();
            g[l - 1] = self.affine_t(l, &delta);
        }
        let input_grad = g[0].clone();
        Ok(NestedGrad { value, input_grad, cot: cot.to_vec(), h, a, g })
    }

    /// Accumulate into `grad` the parameter gradient of a loss with
    /// `∂L/∂value = ybar` and `∂L/∂input_grad = gbar`.
    pub fn nested_backward(&self, ng: &NestedGrad, ybar: &[f64], gbar: &[f64], grad: &mut [f64]) {
        let big_l = self.n_layers();
        let act = self.arch.activation;
        // adjoint of pre-activations accumulated from the input-gradient pass
        let mut abar: Vec<Vec<f64>> = ng.a.iter().map(|a| vec![0.0; a.len()]).collect();
        let mut gbar_prev = gbar.to_vec();
        for l in 1..big_l {
            let n_in = self.arch.widths[l - 1];
            let (w, _) = self.layer(l);
            let wo = self.w_offset(l);
            let mut gbar_l = vec![0.0; self.arch.widths[l]];
            for i in 0..self.arch.widths[l] {
                let (_, d1, d2) = act.eval(ng.a[l - 1][i]);
                let delta_i = d1 * ng.g[l][i];
                let row = &w[i * n_in..(i + 1) * n_in];
                let mut dbar = 0.0;
                for j in 0..n_in {
                    grad[wo + i * n_in + j] += delta_i * gbar_prev[j];
                    dbar += row[j] * gbar_prev[j];
                }
                gbar_l[i] = d1 * dbar;
                abar[l - 1][i] += d2 * ng.g[l][i] * dbar;
            }
            gbar_prev = gbar_l;
        }
        // g_{L-1} = W_Lᵀ c
        let n_in = self.arch.widths[big_l - 1];
        let wo = self.w_offset(big_l);
        for (i, ci) in ng.cot.iter().enumerate() {
            for j in 0..n_in {
                grad[wo + i * n_in + j] += ci * gbar_prev[j];
            }
        }
        // ordinary reverse pass through the forward computation
        let bo = self.b_offset(big_l);
        for (i, yb) in ybar.iter().enumerate() {
            grad[bo + i] += yb;
            for j in 0..n_in {
                grad[wo + i * n_in + j] += yb * ng.h[big_l - 1][j];
            }
        }
        let mut hbar = self.affine_t(big_l, ybar);
        for l in (1..big_l).rev() {
            let n_in = self.arch.widths[l - 1];
            let (wo, bo) = (self.w_offset(l), self.b_offset(l));
            let at: Vec<f64> = (0..self.arch.widths[l])
                .map(|i| abar[l - 1][i] + act.eval(ng.a[l - 1][i]).1 * hbar[i])
                .collect();
            for (i, ai) in at.iter().enumerate() {
                grad[bo + i] += ai;
                if *ai != 0.0 {
                    for j in 0..n_in {
                        grad[wo + i * n_in + j] += ai * ng.h[l - 1][j];
                    }
                }
            }
            if l > 1 {
                hbar = self.affine_t(l, &at);
            }
        }
    }

    /// Plain reverse-mode parameter gradient of `ybarᵀ forward(x)`.
    pub fn param_grad(&self, x: &[f64], ybar: &[f64], grad: &mut [f64]) -> Result<()> {
        let zeros = vec![0.0; self.output_dim()];
        let ng = self.nested(x, &zeros)?;
        self.nested_backward(&ng, ybar, &vec![0.0; self.input_dim()], grad);
        Ok(())
    }

    /// `Jᵀv`, the input gradient of `vᵀ forward(x)`.
    pub fn input_vjp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.nested(x, v)?.input_grad)
    }

    /// `∇ₓ g(x)` for a scalar head.
    pub fn input_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.input_vjp(x, &[1.0])
    }

    /// `J v`, forward-mode.
    pub fn jvp(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        check_shape(self.input_dim(), x.len())?;
        check_shape(self.input_dim(), v.len())?;
        let big_l = self.n_layers();
        let mut h = x.to_vec();
        let mut t = v.to_vec();
        let mut buf = Vec::new();
        for l in 1..=big_l {
            self.affine(l, &h, &mut buf);
            let (w, _) = self.layer(l);
            let n_in = self.arch.widths[l - 1];
            let mut tn: Vec<f64> = (0..self.arch.widths[l]).map(|i| dot(&w[i * n_in..(i + 1) * n_in], &t)).collect();
            if l < big_l {
                for (ti, ai) in tn.iter_mut().zip(buf.iter_mut()) {
                    let (p, d1, _) = self.arch.activation.eval(*ai);
                    *ti *= d1;
                    *ai = p;
                }
            }
            h = buf.clone();
            t = tn;
        }
        Ok(t)
    }
}

/// A network used as a score model, with its input Jacobian exposed.
impl ScoreModel for Mlp {
    fn dim(&self) -> usize {
        self.input_dim()
    }

    fn score_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        let y = self.forward(x)?;
        check_shape(out.len(), y.len())?;
        out.copy_from_slice(&y);
        Ok(())
    }

    fn score_jacobian_t_vec(&self, x: &[f64], v: &[f64], out: &mut [f64]) -> Result<()> {
        let g = self.input_vjp(x, v)?;
        out.copy_from_slice(&g);
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Clamped binary entropy `a ln a + (1-a) ln(1-a)` and its derivative in the logit.
pub fn entropy_and_dlogit(logit: f64) -> (f64, f64) {
    const EPS: f64 = 1e-7;
    let a = sigmoid(logit).clamp(EPS, 1.0 - EPS);
    let h = a * a.ln() + (1.0 - a) * (1.0 - a).ln();
    let s = sigmoid(logit);
    (h, s * (1.0 - s) * (a / (1.0 - a)).ln())
}

/// Mean loss and parameter gradient over `inputs` for the network-only losses:
/// `half_sq` (`½‖y‖²`), `ssm` (`½‖s‖² + vᵀ∇s v` with `aux` rows as `v`) and
/// `entropy` (mean clamped binary entropy of `σ(g)`).
pub fn loss_param_grad(net: &Mlp, loss: &str, inputs: &PointCloud, aux: Option<&PointCloud>) -> Result<(f64, Vec<f64>)> {
    if inputs.is_empty() {
        return Err(Error::Empty("loss batch".into()));
    }
    let mut grad = vec![0.0; net.params.len()];
    let mut total = 0.0;
    let n = inputs.len() as f64;
    match loss {
        "half_sq" => {
            for x in inputs.rows() {
                let y = net.forward(x)?;
                total += 0.5 * dot(&y, &y);
                net.param_grad(x, &y, &mut grad)?;
            }
        }
        "ssm" => {
            let aux = aux.ok_or_else(|| param("ssm loss needs projection vectors"))?;
            if aux.len() % inputs.len() != 0 {
                return Err(param("projection count must be a multiple of the batch size"));
            }
            let per = aux.len() / inputs.len();
            for (i, x) in inputs.rows().enumerate() {
                for k in 0..per {
                    let v = aux.row(i * per + k);
                    let ng = net.nested(x, v)?;
                    total += (0.5 * dot(&ng.value, &ng.value) + dot(&ng.input_grad, v)) / per as f64;
                    let ybar: Vec<f64> = ng.value.iter().map(|y| y / per as f64).collect();
                    let gbar: Vec<f64> = v.iter().map(|y| y / per as f64).collect();
                    net.nested_backward(&ng, &ybar, &gbar, &mut grad);
                }
            }
        }
        "entropy" => {
            for x in inputs.rows() {
                let g = net.logit(x)?;
                let (h, dh) = entropy_and_dlogit(g);
                total += h;
                net.param_grad(x, &[dh], &mut grad)?;
            }
        }
        other => return Err(Error::UnknownLoss(other.to_string())),
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_clip")]
    pub clip_norm: f64,
}

fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.999
}
fn default_eps() -> f64 {
    1e-8
}
fn default_clip() -> f64 {
    10.0
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8, clip_norm: 10.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, cfg: AdamConfig) -> Self {
        Self { cfg, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    /// One step with global-norm clipping.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = if norm > self.cfg.clip_norm { self.cfg.clip_norm / norm } else { 1.0 };
        self.t += 1;
        let c1 = 1.0 - self.cfg.beta1.powi(self.t);
        let c2 = 1.0 - self.cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i] * scale;
            self.m[i] = self.cfg.beta1 * self.m[i] + (1.0 - self.cfg.beta1) * g;
            self.v[i] = self.cfg.beta2 * self.v[i] + (1.0 - self.cfg.beta2) * g * g;
            params[i] -= self.cfg.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.cfg.eps);
        }
    }
}

// ---------------------------------------------------------------------------
// Sliced score matching
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsmConfig {
    #[serde(default = "default_projections")]
    pub n_projections: usize,
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub adam: AdamConfig,
}

fn default_projections() -> usize {
    1
}
fn default_batch() -> usize {
    128
}

/// Train a vector-head network by sliced score matching with Gaussian
/// projections. Returns the mean loss of each epoch.
pub fn ssm_train(net: &mut Mlp, data: &PointCloud, cfg: &SsmConfig, stream: RngStream) -> Result<Vec<f64>> {
    if data.is_empty() {
        return Err(Error::Empty("score-matching data".into()));
    }
    check_shape(net.input_dim(), data.dim())?;
    if cfg.n_projections < 1 || cfg.batch_size < 1 {
        return Err(param("n_projections and batch_size must be positive"));
    }
    let mut rng = stream.rng();
    let mut opt = Adam::new(net.params.len(), cfg.adam);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let d = data.dim();
    for epoch in 0..cfg.epochs {
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut sum = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let mut batch = PointCloud::new(d);
            let mut proj = PointCloud::new(d);
            let mut v = vec![0.0; d];
            for &i in chunk {
                batch.push(data.row(i));
                for _ in 0..cfg.n_projections {
                    v.iter_mut().for_each(|x| *x = StandardNormal.sample(&mut rng));
                    proj.push(&v);
                }
            }
            let (loss, grad) = loss_param_grad(net, "ssm", &batch, Some(&proj))?;
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged(format!("score matching loss {loss} at epoch {epoch}")));
            }
            opt.step(&mut net.params, &grad);
            sum += loss;
            batches += 1;
        }
        trace.push(sum / batches as f64);
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

const MAGIC: &[u8; 11] = b"MAFLACKPT1\n";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub architecture: Architecture,
    pub seed: u64,
    pub training: serde_json::Value,
    pub shape_hash: String,
    pub n_params: usize,
}

/// Writes magic, a little-endian u64 header length, the JSON header, then the
/// parameters as little-endian f64.
pub fn save_checkpoint(net: &Mlp, seed: u64, training: serde_json::Value, path: &Path) -> Result<()> {
    let header = CheckpointHeader {
        architecture: net.arch.clone(),
        seed,
        training,
        shape_hash: net.arch.shape_hash(),
        n_params: net.params.len(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut bytes = Vec::with_capacity(MAGIC.len() + 8 + json.len() + 8 * net.params.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&(json.len() as u64).to_le_bytes());
    bytes.extend_from_slice(&json);
    for p in &net.params {
        bytes.extend_from_slice(&p.to_le_bytes());
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Mlp, CheckpointHeader)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    if bytes.len() < MAGIC.len() + 8 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let mut pos = MAGIC.len();
    let hlen = u64::from_le_bytes(bytes[pos..pos + 8].try_into().unwrap()) as usize;
    pos += 8;
    if bytes.len() < pos + hlen {
        return Err(bad("truncated header"));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[pos..pos + hlen])?;
    pos += hlen;
    if header.shape_hash != header.architecture.shape_hash() || header.n_params != header.architecture.n_params() {
        return Err(bad("shape hash does not match architecture"));
    }
    if bytes.len() != pos + 8 * header.n_params {
        return Err(bad("parameter block has the wrong length"));
    }
    let params = bytes[pos..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((Mlp::new(header.architecture.clone(), params)?, header))
}
