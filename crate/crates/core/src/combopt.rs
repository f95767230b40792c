//! MaxCut and minimum vertex cover as continuous relaxations with oracle
//! scores, plus graph generators, decoders and brute-force optima.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_shape, param, Error, Result};

/// Simple undirected graph stored as a canonical edge list plus adjacency lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRepr", into = "GraphRepr")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<GraphRepr> for Graph {
    type Error = Error;
    fn try_from(r: GraphRepr) -> Result<Self> {
        Graph::new(r.n, r.edges)
    }
}

impl From<Graph> for GraphRepr {
    fn from(g: Graph) -> Self {
        GraphRepr { n: g.n, edges: g.edges }
    }
}

impl Graph {
    /// Build from any edge list; edges are canonicalized to `i < j`, sorted and
    /// deduplicated. Self-loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut canon = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(param(format!("edge ({a}, {b}) out of range for {n} vertices")));
            }
            if a == b {
                return Err(param(format!("self-loop at vertex {a}")));
            }
            canon.push((a.min(b), a.max(b)));
        }
        canon.sort_unstable();
        canon.dedup();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &canon {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        Ok(Self { n, edges: canon, neighbors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    /// Dense symmetric 0/1 adjacency matrix, row-major.
    pub fn adjacency(&self) -> Vec<f64> {
        let mut a = vec![0.0; self.n * self.n];
        for &(i, j) in &self.edges {
            a[i * self.n + j] = 1.0;
            a[j * self.n + i] = 1.0;
        }
        a
    }

    /// `out = A y`.
    pub fn adj_mul(&self, y: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.neighbors[i].iter().map(|&j| y[j]).sum();
        }
    }

    /// Edge-list text: header `n m`, then one `i j` per line (0-indexed).
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{} {}\n", self.n, self.edges.len());
        for &(i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::Empty("graph file has no header".into()))?;
        let nums = parse_pair(header, 1)?;
        let (n, m) = nums;
        let mut edges = Vec::with_capacity(m);
        for (k, line) in lines.enumerate() {
            edges.push(parse_pair(line, k + 2)?);
        }
        if edges.len() != m {
            return Err(param(format!("header declares {m} edges, file lists {}", edges.len())));
        }
        let g = Graph::new(n, edges)?;
        if g.n_edges() != m {
            return Err(param("graph file contains duplicate edges"));
        }
        Ok(g)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }
}

fn parse_pair(line: &str, lineno: usize) -> Result<(usize, usize)> {
    let mut it = line.split_whitespace().map(|t| t.parse::<usize>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(a)), Some(Ok(b)), None) => Ok((a, b)),
        _ => Err(param(format!("line {lineno}: expected two non-negative integers, got `{line}`"))),
    }
}

/// Erdős–Rényi `G(n, p)`: each pair `i < j` independently with probability `p`.
pub fn gen_er<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(param(format!("edge probability must lie in (0, 1], got {p}")));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges)
}

/// Erdős–Rényi `G(n, m)`: exactly `m` distinct edges chosen uniformly.
pub fn gen_er_edges<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    let total = n * n.saturating_sub(1) / 2;
    if m > total {
        return Err(param(format!("{m} edges requested but only {total} pairs exist")));
    }
    let picks = sample_indices(rng, total, m);
    let mut edges: Vec<(usize, usize)> = picks.into_iter().map(|k| pair_from_index(n, k)).collect();
    edges.sort_unstable();
    Graph::new(n, edges)
}

fn pair_from_index(n: usize, mut k: usize) -> (usize, usize) {
    let mut i = 0;
    while k >= n - 1 - i {
        k -= n - 1 - i;
        i += 1;
    }
    (i, i + 1 + k)
}

/// Barabási–Albert preferential attachment, seeded with the complete graph on
/// `m + 1` vertices; every later vertex attaches to `m` distinct existing
/// vertices chosen proportionally to degree.
pub fn gen_ba<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    if m < 1 || m >= n {
        return Err(param(format!("BA requires 1 <= m < n, got m={m}, n={n}")));
    }
    let mut edges = Vec::new();
    // each vertex appears once per incident edge
    let mut ends: Vec<usize> = Vec::new();
    for i in 0..=m {
        for j in i + 1..=m {
            edges.push((i, j));
            ends.push(i);
            ends.push(j);
        }
    }
    for v in m + 1..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        let mut seen = HashSet::with_capacity(m);
        while chosen.len() < m {
            let t = ends[rng.random_range(0..ends.len())];
            if seen.insert(t) {
                chosen.push(t);
            }
        }
        for t in chosen {
            edges.push((t, v));
            ends.push(t);
            ends.push(v);
        }
    }
    Graph::new(n, edges)
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// `π(u) ∝ exp(-E(u)/T)` with `E(u) = ½ tanh(u)ᵀ A tanh(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaxCutTarget {
    pub graph: Graph,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

/// `π(u) ∝ exp(-E(u)/T)` with `E(u) = 1ᵀp + (λ/2)(1-p)ᵀA(1-p)`, `p = σ(u)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VcTarget {
    pub graph: Graph,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_temperature() -> f64 {
    0.5
}

fn default_penalty() -> f64 {
    2.0
}

impl MaxCutTarget {
    pub fn new(graph: Graph, temperature: f64) -> Result<Self> {
        check_positive("temperature", temperature)?;
        Ok(Self { graph, temperature })
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let y: Vec<f64> = u.iter().map(|v| v.tanh()).collect();
        self.graph.edges().iter().map(|&(i, j)| y[i] * y[j]).sum()
    }

    pub fn score_into(&self, u: &[f64], out: &mut [f64]) {
        let y: Vec<f64> = u.iter().map(|v| v.tanh()).collect();
        self.graph.adj_mul(&y, out);
        for (o, yi) in out.iter_mut().zip(&y) {
            *o *= -(1.0 - yi * yi) / self.temperature;
        }
    }
}

impl VcTarget {
    pub fn new(graph: Graph, penalty: f64, temperature: f64) -> Result<Self> {
        check_positive("temperature", temperature)?;
        check_positive("penalty", penalty)?;
        Ok(Self { graph, penalty, temperature })
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let p: Vec<f64> = u.iter().map(|&v| sigmoid(v)).collect();
        let card: f64 = p.iter().sum();
        let pen: f64 = self.graph.edges().iter().map(|&(i, j)| (1.0 - p[i]) * (1.0 - p[j])).sum();
        card + self.penalty * pen
    }

    pub fn score_into(&self, u: &[f64], out: &mut [f64]) {
        let p: Vec<f64> = u.iter().map(|&v| sigmoid(v)).collect();
        let q: Vec<f64> = p.iter().map(|v| 1.0 - v).collect();
        self.graph.adj_mul(&q, out);
        for (o, &pi) in out.iter_mut().zip(&p) {
            let ds = pi * (1.0 - pi);
            *o = -ds * (1.0 - self.penalty * *o) / self.temperature;
        }
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(param(format!("{name} must be positive, got {v}")))
    }
}

/// A combinatorial problem together with its relaxation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Relaxation {
    MaxCut(MaxCutTarget),
    VertexCover(VcTarget),
}

impl Relaxation {
    pub fn graph(&self) -> &Graph {
        match self {
            Relaxation::MaxCut(t) => &t.graph,
            Relaxation::VertexCover(t) => &t.graph,
        }
    }

    pub fn dim(&self) -> usize {
        self.graph().n()
    }

    pub fn temperature(&self) -> f64 {
        match self {
            Relaxation::MaxCut(t) => t.temperature,
            Relaxation::VertexCover(t) => t.temperature,
        }
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        match self {
            Relaxation::MaxCut(t) => t.energy(u),
            Relaxation::VertexCover(t) => t.energy(u),
        }
    }

    pub fn score_into(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        check_shape(self.dim(), u.len())?;
        match self {
            Relaxation::MaxCut(t) => t.score_into(u, out),
            Relaxation::VertexCover(t) => t.score_into(u, out),
        }
        Ok(())
    }
}

/// `x_i = sgn(u_i)` with `sgn(0) = +1`.
pub fn sign_decode(u: &[f64]) -> Vec<i8> {
    u.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect()
}

pub fn cut_value(x: &[i8], graph: &Graph) -> usize {
    graph.edges().iter().filter(|&&(i, j)| x[i] != x[j]).count()
}

/// `x_i = 1{u_i > 0}`.
pub fn threshold_vc(u: &[f64]) -> Vec<u8> {
    u.iter().map(|&v| u8::from(v > 0.0)).collect()
}

/// Threshold, then repair every uncovered edge (in canonical order) by adding
/// the endpoint with the larger `σ(u)`, ties to the lower index.
pub fn greedy_decode_vc(u: &[f64], graph: &Graph) -> Vec<u8> {
    let mut x = threshold_vc(u);
    for &(i, j) in graph.edges() {
        if x[i] == 0 && x[j] == 0 {
            if u[j] > u[i] {
                x[j] = 1;
            } else {
                x[i] = 1;
            }
        }
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverMetrics {
    pub size: usize,
    pub uncovered: usize,
    pub uncovered_ratio: f64,
}

pub fn cover_metrics(x: &[u8], graph: &Graph) -> CoverMetrics {
    let size = x.iter().filter(|&&v| v == 1).count();
    let uncovered = graph.edges().iter().filter(|&&(i, j)| x[i] == 0 && x[j] == 0).count();
    let uncovered_ratio = if graph.n_edges() == 0 { 0.0 } else { uncovered as f64 / graph.n_edges() as f64 };
    CoverMetrics { size, uncovered, uncovered_ratio }
}

const BRUTE_FORCE_MAX: usize = 24;

/// Maximum cut by enumeration (vertex 0 fixed to +1).
pub fn brute_force_maxcut(graph: &Graph) -> Result<usize> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX {
        return Err(param(format!("brute force limited to {BRUTE_FORCE_MAX} vertices")));
    }
    if n < 2 {
        return Ok(0);
    }
    let mut best = 0;
    for mask in 0u64..(1 << (n - 1)) {
        let side = |v: usize| v > 0 && (mask >> (v - 1)) & 1 == 1;
        let cut = graph.edges().iter().filter(|&&(i, j)| side(i) != side(j)).count();
        best = best.max(cut);
    }
    Ok(best)
}

/// Minimum vertex cover size by enumeration.
pub fn brute_force_vc(graph: &Graph) -> Result<usize> {
    let n = graph.n();
    if n > BRUTE_FORCE_MAX {
        return Err(param(format!("brute force limited to {BRUTE_FORCE_MAX} vertices")));
    }
    let mut best = n;
    for mask in 0u64..(1 << n) {
        let size = mask.count_ones() as usize;
        if size >= best {
            continue;
        }
        if graph.edges().iter().all(|&(i, j)| (mask >> i) & 1 == 1 || (mask >> j) & 1 == 1) {
            best = size;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use rand::Rng;

    fn k3() -> Graph {
        Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn fd_check(energy: impl Fn(&[f64]) -> f64, score: impl Fn(&[f64], &mut [f64]), t: f64, u: &[f64]) {
        let mut s = vec![0.0; u.len()];
        score(u, &mut s);
        for i in 0..u.len() {
            let h = 1e-6;
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[i] += h;
            dn[i] -= h;
            let fd = -(energy(&up) - energy(&dn)) / (2.0 * h * t);
            assert!((fd - s[i]).abs() <= 1e-5 * fd.abs().max(1e-3), "coord {i}: fd {fd} vs {}", s[i]);
        }
    }

    #[test]
    fn maxcut_energy_and_score() {
        let t = MaxCutTarget::new(k3(), 0.5).unwrap();
        assert_eq!(t.energy(&[0.0; 3]), 0.0);
        let mut s = vec![1.0; 3];
        t.score_into(&[0.0; 3], &mut s);
        assert_eq!(s, vec![0.0; 3]);
        assert!((t.energy(&[10.0, 10.0, -10.0]) + 1.0).abs() < 1e-7);
        let mut rng = RngStream::new(11, 0).rng();
        for _ in 0..100 {
            let g = gen_er(8, 0.4, &mut rng).unwrap();
            let t = MaxCutTarget::new(g, 0.7).unwrap();
            let u: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            fd_check(|u| t.energy(u), |u, o| t.score_into(u, o), t.temperature, &u);
        }
    }

    #[test]
    fn vc_energy_limits_and_score() {
        let g = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let t = VcTarget::new(g, 2.0, 0.5).unwrap();
        assert!((t.energy(&[60.0; 3]) - 3.0).abs() < 1e-12);
        assert!((t.energy(&[-60.0; 3]) - 2.0 * 2.0).abs() < 1e-12);
        let mut rng = RngStream::new(12, 0).rng();
        for _ in 0..100 {
            let g = gen_er(8, 0.4, &mut rng).unwrap();
            let t = VcTarget::new(g, 2.0, 0.5).unwrap();
            let u: Vec<f64> = (0..8).map(|_| rng.random_range(-2.0..2.0)).collect();
            fd_check(|u| t.energy(u), |u, o| t.score_into(u, o), t.temperature, &u);
        }
    }

    #[test]
    fn decoding_and_cuts() {
        assert_eq!(sign_decode(&[0.0, -0.0, -1e-300, 2.0]), vec![1, 1, -1, 1]);
        let g = k3();
        assert_eq!(cut_value(&[1, 1, -1], &g), 2);
        assert_eq!(brute_force_maxcut(&g).unwrap(), 2);
        assert_eq!(cut_value(&[1, 1, 1], &g), 0);
        let k22 = Graph::new(4, [(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert_eq!(cut_value(&[1, 1, -1, -1], &k22), 4);
    }

    #[test]
    fn greedy_cover_cases() {
        let p3 = Graph::new(3, [(0, 1), (1, 2)]).unwrap();
        let x = greedy_decode_vc(&[-1.0, 2.0, -1.0], &p3);
        assert_eq!(x, vec![0, 1, 0]);
        assert_eq!(brute_force_vc(&p3).unwrap(), 1);
        let e = Graph::new(2, [(0, 1)]).unwrap();
        let x = greedy_decode_vc(&[-1.0, -3.0], &e);
        assert_eq!(x, vec![1, 0]);
        assert_eq!(greedy_decode_vc(&[-1.0, -1.0], &e), vec![1, 0]);
        assert_eq!(greedy_decode_vc(&[1.0, -1.0], &e), vec![1, 0]);
        let m = cover_metrics(&[0, 1, 0], &p3);
        assert_eq!((m.size, m.uncovered, m.uncovered_ratio), (1, 0, 0.0));
        assert_eq!(cover_metrics(&[0, 0, 0], &p3).uncovered_ratio, 1.0);
        assert_eq!(cover_metrics(&[1, 0, 0], &p3).uncovered_ratio, 0.5);
    }

    #[test]
    fn er_edge_count_mean() {
        let mut total = 0usize;
        for s in 0..200 {
            total += gen_er(64, 0.1, &mut RngStream::new(s, 5).rng()).unwrap().n_edges();
        }
        let mean = total as f64 / 200.0;
        assert!((mean - 201.6).abs() < 5.0, "{mean}");
        let g = gen_er(2, 1.0, &mut RngStream::new(1, 1).rng()).unwrap();
        assert_eq!(g.edges(), &[(0, 1)]);
    }

    #[test]
    fn exact_edge_count_and_ba_size() {
        let mut rng = RngStream::new(3, 0).rng();
        let g = gen_er_edges(64, 160, &mut rng).unwrap();
        assert_eq!(g.n_edges(), 160);
        for n in [3, 10, 64, 256] {
            let g = gen_ba(n, 2, &mut rng).unwrap();
            assert_eq!(g.n_edges(), 2 * n - 3);
        }
        assert!(gen_ba(3, 3, &mut rng).is_err());
        assert_eq!(pair_from_index(4, 0), (0, 1));
        assert_eq!(pair_from_index(4, 5), (2, 3));
    }

    #[test]
    fn edge_list_round_trip() {
        let g = gen_ba(20, 2, &mut RngStream::new(4, 0).rng()).unwrap();
        let back = Graph::from_edge_list(&g.to_edge_list()).unwrap();
        assert_eq!(g, back);
        assert!(Graph::from_edge_list("3 1\n0 0\n").is_err());
        assert!(Graph::from_edge_list("3 2\n0 1\n").is_err());
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(serde_json::from_str::<Graph>(&json).unwrap(), g);
    }
}
