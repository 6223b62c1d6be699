//! Instance constructors: noisy hypercubes, discretized Gaussian sphere
//! graphs, Unique-Games reduction graphs, and small standard fixtures.
//!
//! All constructors emit normalized [`WeightedGraph`]s whose weights are the
//! exact (or Monte Carlo estimated) probabilities of the edge-sampling
//! processes that define each family.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, map_chunks, plan_chunks, ExecMode};
use crate::graph::WeightedGraph;
use crate::sdp::UnitVectorAssignment;

/// Maximum hypercube dimension (the graph has `4^n / 2` edges).
pub const MAX_HYPERCUBE_DIM: usize = 16;

/// Maximum Unique-Games label count (the reduction graph has `|V| · 2^M`
/// vertices and enumeration runs over `4^M` string pairs).
pub const MAX_UG_LABELS: usize = 10;

/// The ±1 string label of hypercube vertex `i` (bit `j` of `i` set ⇒ `-`).
fn hypercube_label(i: usize, n: usize) -> String {
    (0..n).map(|j| if (i >> j) & 1 == 0 { '+' } else { '-' }).collect()
}

/// Total self-loop probability of the ρ-noisy hypercube: `((1+ρ)/2)^n`.
pub fn hypercube_loop_weight(n: usize, rho: f64) -> f64 {
    ((1.0 + rho) / 2.0).powi(n as i32)
}

/// The ρ-noisy hypercube graph on `{−1,+1}^n`.
///
/// The weight of an unordered pair `{x, y}` is the exact probability that a
/// uniform `x` and a ρ-correlated `y` realize that pair: with
/// `q = (1+ρ)/2`, `p = (1−ρ)/2`, and `d` the Hamming distance,
/// `w = 2^{−n} q^{n−d} p^d`, doubled for `x ≠ y`. With `loops = false`,
/// self-loops are removed via [`WeightedGraph::remove_self_loops`]
/// (equivalently: the pair distribution conditioned on `x ≠ y`).
pub fn noisy_hypercube(n: usize, rho: f64, loops: bool) -> Result<WeightedGraph> {
    if n == 0 || n > MAX_HYPERCUBE_DIM {
        return Err(Error::DimensionTooLarge {
            what: "hypercube dimension",
            got: n,
            max: MAX_HYPERCUBE_DIM,
        });
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    let size = 1usize << n;
    let q = (1.0 + rho) / 2.0;
    let p = (1.0 - rho) / 2.0;
    // qp[d] = q^{n-d} p^d; exact zeros at rho = ±1 keep the edge list sparse.
    let qp: Vec<f64> = (0..=n).map(|d| q.powi((n - d) as i32) * p.powi(d as i32)).collect();
    let base = (0.5f64).powi(n as i32);

    let labels: Vec<String> = (0..size).map(|i| hypercube_label(i, n)).collect();
    let mut edges = Vec::new();
    for i in 0..size {
        for j in i..size {
            let d = (i ^ j).count_ones() as usize;
            let w = if i == j { base * qp[0] } else { 2.0 * base * qp[d] };
            if w != 0.0 {
                edges.push((i, j, w));
            }
        }
    }
    let graph = WeightedGraph::new(labels, edges)?.normalize_weights()?;
    if loops {
        Ok(graph)
    } else {
        Ok(graph.remove_self_loops()?.0)
    }
}

/// Small fixture graphs with uniform normalized weights.
///
/// Accepted kinds: `single_edge`, `complete:N` / `complete(N)`, and
/// `cycle:N` / `cycle(N)` with `N >= 3`.
pub fn standard_graph(kind: &str) -> Result<WeightedGraph> {
    let (name, arg) = parse_kind(kind);
    match (name, arg) {
        ("single_edge", None) => WeightedGraph::from_labeled(&[("a", "b", 1.0)]),
        ("complete", Some(n)) | ("cycle", Some(n)) => {
            if n < 3 {
                return Err(Error::Domain(format!("{name} graphs require n >= 3, got {n}")));
            }
            let width = (n - 1).to_string().len();
            let labels: Vec<String> = (0..n).map(|i| format!("v{i:0width$}")).collect();
            let edges: Vec<(usize, usize, f64)> = if name == "complete" {
                let m = n * (n - 1) / 2;
                (0..n)
                    .flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0 / m as f64)))
                    .collect()
            } else {
                (0..n).map(|i| (i, (i + 1) % n, 1.0 / n as f64)).collect()
            };
            let g = WeightedGraph::new(labels, edges)?;
            g.normalize_weights()
        }
        _ => Err(Error::Domain(format!(
            "unknown graph kind {kind:?} (expected single_edge, complete:N, or cycle:N)"
        ))),
    }
}

fn parse_kind(kind: &str) -> (&str, Option<usize>) {
    let kind = kind.trim();
    if let Some((name, rest)) = kind.split_once(':') {
        return (name, rest.parse().ok());
    }
    if let Some((name, rest)) = kind.split_once('(') {
        if let Some(num) = rest.strip_suffix(')') {
            return (name, num.parse().ok());
        }
    }
    (kind, None)
}

/// Metadata accompanying a Monte Carlo discretized Gaussian graph.
#[derive(Debug, Clone, Serialize)]
pub struct GaussianMeta {
    /// Ambient dimension of the sphere `S^{n-1}`.
    pub n: usize,
    /// Correlation of the sampled Gaussian pairs.
    pub rho: f64,
    /// Number of Voronoi cells.
    pub net_size: usize,
    /// Sampled pairs.
    pub mc_samples: u64,
    /// Splitting multiplicity applied to every cell vertex.
    pub m_split: usize,
    /// RNG seed.
    pub seed: u64,
    /// Number of sampling chunks (results are a deterministic function of
    /// `(seed, chunk_count)`).
    pub chunk_count: u64,
    /// Loop mass of the split graph that was removed at the final step.
    pub w_loops: f64,
    /// Smallest per-cell endpoint count — a direct read on sampling error.
    pub min_cell_hits: u64,
}

/// A discretized Gaussian graph: the final loop-free split graph, the raw
/// binned cell graph (loops included), the net centers, and run metadata.
#[derive(Debug, Clone)]
pub struct GaussianGraph {
    /// Final graph: cell graph split `m_split` ways with loops removed.
    pub graph: WeightedGraph,
    /// Normalized cell-pair graph before splitting (self-loops included).
    pub binned: WeightedGraph,
    /// Net centers, row `i` for cell label `c{i}`.
    pub centers: Vec<Vec<f64>>,
    /// Reproducibility and error metadata.
    pub meta: GaussianMeta,
}

impl GaussianGraph {
    /// The identity vector assignment `f(cell copy) = center` on the final
    /// split graph — the feasible SDP point inherited from the sphere.
    pub fn identity_assignment(&self) -> Result<UnitVectorAssignment> {
        let rows = self
            .graph
            .labels()
            .iter()
            .map(|label| {
                let cell = label
                    .split('#')
                    .next()
                    .and_then(|c| c.strip_prefix('c'))
                    .and_then(|c| c.parse::<usize>().ok())
                    .ok_or_else(|| Error::Domain(format!("unexpected cell label {label:?}")))?;
                self.centers
                    .get(cell)
                    .cloned()
                    .ok_or_else(|| Error::Domain(format!("cell index {cell} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        UnitVectorAssignment::new(self.graph.labels().to_vec(), rows)
    }
}

/// Uniform random unit vector in `R^n`.
fn random_unit_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.iter().map(|x| x / norm).collect();
        }
    }
}

/// Index of the net center with the largest inner product (ties: lowest index).
fn nearest_center(centers: &[Vec<f64>], x: &[f64]) -> usize {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d: f64 = c.iter().zip(x).map(|(a, b)| a * b).sum();
        if d > best_dot {
            best_dot = d;
            best = i;
        }
    }
    best
}

/// Monte Carlo discretization of the ρ-correlated Gaussian graph on `S^{n−1}`.
///
/// Pipeline: sample `net_size` uniform centers; draw `mc_samples` pairs of
/// ρ-correlated Gaussian vectors radially projected to the sphere; bin each
/// endpoint to its nearest center; normalize pair counts to weights; split
/// every cell into `m_split` copies; remove self-loops. Bit-for-bit
/// reproducible given `(seed, parameters)`.
pub fn discretized_gaussian_graph(
    n: usize,
    rho: f64,
    net_size: usize,
    mc_samples: u64,
    m_split: usize,
    seed: u64,
) -> Result<GaussianGraph> {
    if n < 2 {
        return Err(Error::Domain(format!("gaussian graph requires n >= 2, got {n}")));
    }
    let mut rng = chunk_rng(seed, 0, 0);
    let centers: Vec<Vec<f64>> = (0..net_size).map(|_| random_unit_vector(&mut rng, n)).collect();
    discretized_gaussian_graph_with_centers(&centers, rho, mc_samples, m_split, seed)
}

/// Same as [`discretized_gaussian_graph`], but with caller-provided net
/// centers (must be unit vectors; used for structured nets in tests).
pub fn discretized_gaussian_graph_with_centers(
    centers: &[Vec<f64>],
    rho: f64,
    mc_samples: u64,
    m_split: usize,
    seed: u64,
) -> Result<GaussianGraph> {
    let net_size = centers.len();
    if net_size < 2 {
        return Err(Error::Domain(format!("net_size must be >= 2, got {net_size}")));
    }
    let n = centers[0].len();
    if n < 2 || centers.iter().any(|c| c.len() != n) {
        return Err(Error::Domain("net centers must share one dimension n >= 2".into()));
    }
    for c in centers {
        let norm = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::Domain("net centers must be unit vectors".into()));
        }
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    if mc_samples < 10 * (net_size as u64) * (net_size as u64) {
        return Err(Error::Domain(format!(
            "mc_samples = {mc_samples} too small: need at least 10 * net_size^2 = {}",
            10 * net_size * net_size
        )));
    }
    if m_split == 0 {
        return Err(Error::Domain("m_split must be >= 1".into()));
    }

    let (chunk_count, sizes) = plan_chunks(mc_samples);
    let tail = (1.0 - rho * rho).sqrt();
    // Each chunk fills a dense upper-triangular count matrix from its own
    // RNG stream; chunks merge by integer addition, so thread order is moot.
    let chunk_counts = map_chunks(ExecMode::Auto, chunk_count, |c| {
        let mut rng = chunk_rng(seed, 1, c);
        let mut counts = vec![0u64; net_size * net_size];
        let mut x = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        for _ in 0..sizes[c as usize] {
            for i in 0..n {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                x[i] = g1;
                y[i] = rho * g1 + tail * g2;
            }
            // Radial projection is implicit: nearest_center only compares
            // inner products, which the positive norm factor cannot reorder.
            let cu = nearest_center(centers, &x);
            let cv = nearest_center(centers, &y);
            let (a, b) = (cu.min(cv), cu.max(cv));
            counts[a * net_size + b] += 1;
        }
        counts
    });

    let mut counts = vec![0u64; net_size * net_size];
    for chunk in &chunk_counts {
        for (total, c) in counts.iter_mut().zip(chunk) {
            *total += c;
        }
    }

    // Per-cell endpoint incidence; a starved cell means the net was too fine
    // for the sample budget.
    let mut hits = vec![0u64; net_size];
    for a in 0..net_size {
        for b in a..net_size {
            let c = counts[a * net_size + b];
            hits[a] += c;
            hits[b] += c;
        }
    }
    if let Some(cell) = hits.iter().position(|&h| h == 0) {
        return Err(Error::DegenerateNet { cell, cells: net_size, samples: mc_samples });
    }
    let min_cell_hits = hits.iter().copied().min().unwrap_or(0);

    let width = (net_size - 1).to_string().len();
    let labels: Vec<String> = (0..net_size).map(|i| format!("c{i:0width$}")).collect();
    let mut edges = Vec::new();
    for a in 0..net_size {
        for b in a..net_size {
            let c = counts[a * net_size + b];
            if c > 0 {
                edges.push((a, b, c as f64 / mc_samples as f64));
            }
        }
    }
    let binned = WeightedGraph::new(labels, edges)?.normalize_weights()?;
    let split = binned.split_vertices(m_split)?;
    let w_loops = split.loop_weight();
    let graph = if w_loops > 0.0 { split.remove_self_loops()?.0 } else { split };

    Ok(GaussianGraph {
        graph,
        binned,
        centers: centers.to_vec(),
        meta: GaussianMeta {
            n,
            rho,
            net_size,
            mc_samples,
            m_split,
            seed,
            chunk_count,
            w_loops,
            min_cell_hits,
        },
    })
}

/// One Unique-Games constraint: edge `(u, v)` with the bijection
/// `π_{u→v}` stored as its image list (`perm[i]` = image of label `i`,
/// 0-based). The edge is satisfied by a labeling `L` iff
/// `perm[L(u)] = L(v)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UgEdge {
    /// Index into the left vertex list.
    pub u: usize,
    /// Index into the right vertex list.
    pub v: usize,
    /// Image list of `π_{u→v}` (a bijection on `0..label_count`).
    pub perm: Vec<usize>,
}

/// A bipartite Unique-Games instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UgInstance {
    /// Left vertex labels.
    pub left: Vec<String>,
    /// Right vertex labels.
    pub right: Vec<String>,
    /// Alphabet size `M`; labels are `0..M` internally (1-based in files).
    pub label_count: usize,
    /// Constraint edges with their permutations.
    pub edges: Vec<UgEdge>,
}

/// A labeling of a Unique-Games instance (one label per vertex, 0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UgLabeling {
    /// Label of each left vertex.
    pub left_labels: Vec<usize>,
    /// Label of each right vertex.
    pub right_labels: Vec<usize>,
}

impl UgInstance {
    /// Validate and build an instance: labels must be unique and
    /// whitespace-free, every permutation a bijection on `0..label_count`,
    /// every endpoint index in range, and every left vertex incident to at
    /// least one edge.
    pub fn new(
        left: Vec<String>,
        right: Vec<String>,
        label_count: usize,
        edges: Vec<UgEdge>,
    ) -> Result<Self> {
        if label_count == 0 {
            return Err(Error::InvalidUgInstance("label_count must be >= 1".into()));
        }
        if left.is_empty() || right.is_empty() || edges.is_empty() {
            return Err(Error::InvalidUgInstance(
                "instance needs nonempty left/right vertex sets and edges".into(),
            ));
        }
        for side in [&left, &right] {
            let mut seen = side.clone();
            seen.sort();
            if seen.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidUgInstance("duplicate vertex labels".into()));
            }
            if side.iter().any(|l| l.is_empty() || l.chars().any(char::is_whitespace)) {
                return Err(Error::InvalidUgInstance(
                    "vertex labels must be non-empty and whitespace-free".into(),
                ));
            }
        }
        let mut left_degree = vec![0usize; left.len()];
        for e in &edges {
            if e.u >= left.len() || e.v >= right.len() {
                return Err(Error::InvalidUgInstance(format!(
                    "edge ({}, {}) out of range",
                    e.u, e.v
                )));
            }
            let mut sorted = e.perm.clone();
            sorted.sort_unstable();
            if sorted != (0..label_count).collect::<Vec<_>>() {
                return Err(Error::InvalidUgInstance(format!(
                    "permutation {:?} on edge ({}, {}) is not a bijection on 0..{label_count}",
                    e.perm, e.u, e.v
                )));
            }
            left_degree[e.u] += 1;
        }
        if let Some(u) = left_degree.iter().position(|&d| d == 0) {
            return Err(Error::InvalidUgInstance(format!(
                "left vertex {:?} has no neighbors",
                left[u]
            )));
        }
        Ok(UgInstance { left, right, label_count, edges })
    }

    /// The complete bipartite instance with identity permutations — the
    /// canonical satisfiable fixture.
    pub fn complete_identity(left_count: usize, right_count: usize, label_count: usize) -> Self {
        let width = |k: usize| (k.max(2) - 1).to_string().len();
        let lw = width(left_count);
        let rw = width(right_count);
        let left: Vec<String> = (0..left_count).map(|i| format!("u{i:0lw$}")).collect();
        let right: Vec<String> = (0..right_count).map(|i| format!("v{i:0rw$}")).collect();
        let identity: Vec<usize> = (0..label_count).collect();
        let edges = (0..left_count)
            .flat_map(|u| {
                let identity = identity.clone();
                (0..right_count).map(move |v| UgEdge { u, v, perm: identity.clone() })
            })
            .collect();
        UgInstance::new(left, right, label_count, edges).expect("valid by construction")
    }

    /// Fraction of constraints satisfied by a labeling.
    pub fn value(&self, labeling: &UgLabeling) -> Result<f64> {
        if labeling.left_labels.len() != self.left.len()
            || labeling.right_labels.len() != self.right.len()
        {
            return Err(Error::InvalidUgInstance(
                "labeling does not cover every vertex exactly once".into(),
            ));
        }
        for &l in labeling.left_labels.iter().chain(&labeling.right_labels) {
            if l >= self.label_count {
                return Err(Error::InvalidUgInstance(format!("label {l} out of range")));
            }
        }
        let satisfied = self
            .edges
            .iter()
            .filter(|e| e.perm[labeling.left_labels[e.u]] == labeling.right_labels[e.v])
            .count();
        Ok(satisfied as f64 / self.edges.len() as f64)
    }

    /// Whether all left degrees agree and all right degrees agree.
    pub fn is_biregular(&self) -> bool {
        let mut ld = vec![0usize; self.left.len()];
        let mut rd = vec![0usize; self.right.len()];
        for e in &self.edges {
            ld[e.u] += 1;
            rd[e.v] += 1;
        }
        ld.windows(2).all(|w| w[0] == w[1]) && rd.windows(2).all(|w| w[0] == w[1])
    }

    /// Serialize to the `qmclab-ug v1` text format (permutations 1-based).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("qmclab-ug v1\n");
        let _ = writeln!(out, "labels {}", self.label_count);
        let _ = writeln!(out, "left {}", self.left.len());
        for l in &self.left {
            out.push_str(l);
            out.push('\n');
        }
        let _ = writeln!(out, "right {}", self.right.len());
        for r in &self.right {
            out.push_str(r);
            out.push('\n');
        }
        for e in &self.edges {
            let _ = write!(out, "{} {}", self.left[e.u], self.right[e.v]);
            for &p in &e.perm {
                let _ = write!(out, " {}", p + 1);
            }
            out.push('\n');
        }
        out
    }

    /// Parse the `qmclab-ug v1` text format.
    pub fn from_text(text: &str) -> Result<Self> {
        fn expect<'a>(
            lines: &mut impl Iterator<Item = (usize, &'a str)>,
            what: &str,
        ) -> Result<(usize, &'a str)> {
            lines.next().ok_or_else(|| Error::Parse { line: 0, msg: format!("missing {what}") })
        }
        fn counted<'a>(
            lines: &mut impl Iterator<Item = (usize, &'a str)>,
            keyword: &'static str,
        ) -> Result<usize> {
            let (ln, line) = expect(lines, keyword)?;
            line.strip_prefix(keyword)
                .and_then(|rest| rest.trim().parse().ok())
                .ok_or_else(|| Error::Parse { line: ln, msg: format!("expected `{keyword} N`") })
        }

        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let (ln, header) = expect(&mut lines, "header")?;
        if header != "qmclab-ug v1" {
            return Err(Error::Parse { line: ln, msg: format!("bad header {header:?}") });
        }
        let label_count = counted(&mut lines, "labels")?;
        let nu = counted(&mut lines, "left")?;
        let mut left = Vec::with_capacity(nu);
        for _ in 0..nu {
            left.push(expect(&mut lines, "left label")?.1.to_string());
        }
        let nv = counted(&mut lines, "right")?;
        let mut right = Vec::with_capacity(nv);
        for _ in 0..nv {
            right.push(expect(&mut lines, "right label")?.1.to_string());
        }
        let lidx: BTreeMap<&str, usize> =
            left.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let ridx: BTreeMap<&str, usize> =
            right.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        let mut edges = Vec::new();
        for (ln, line) in lines {
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (u, v) = match (parts.next(), parts.next()) {
                (Some(u), Some(v)) => (u, v),
                _ => return Err(Error::Parse { line: ln, msg: "expected `<u> <v> <perm>`".into() }),
            };
            let u = *lidx
                .get(u)
                .ok_or_else(|| Error::Parse { line: ln, msg: format!("unknown left vertex {u:?}") })?;
            let v = *ridx
                .get(v)
                .ok_or_else(|| Error::Parse { line: ln, msg: format!("unknown right vertex {v:?}") })?;
            let perm: Vec<usize> = parts
                .map(|p| {
                    p.parse::<usize>()
                        .ok()
                        .and_then(|x| x.checked_sub(1))
                        .ok_or_else(|| Error::Parse {
                            line: ln,
                            msg: format!("bad permutation entry {p:?} (1-based integers)"),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
            if perm.len() != label_count {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("permutation has {} entries, expected {label_count}", perm.len()),
                });
            }
            edges.push(UgEdge { u, v, perm });
        }
        UgInstance::new(left, right, label_count, edges)
    }

    /// Write the text format to a file.
    pub fn write_text_file(&self, path: &Path) -> Result<()> {
        Ok(std::fs::write(path, self.to_text())?)
    }

    /// Read the text format from a file.
    pub fn read_text_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Apply `x ∘ π` to a bitmask string: result bit `i` is bit `π(i)` of `x`.
fn compose_mask(x: usize, perm: &[usize]) -> usize {
    let mut out = 0usize;
    for (i, &p) in perm.iter().enumerate() {
        out |= ((x >> p) & 1) << i;
    }
    out
}

/// Invert a permutation given as an image list.
fn invert_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

/// The dictatorship-test graph of a Unique-Games instance, by exact
/// enumeration.
///
/// Vertex set `V × {−1,+1}^M` (labels `v:±…±`). The edge distribution:
/// draw `u ∈ U` uniformly, two independent uniform neighbors `v, w ∈ N(u)`,
/// and a ρ-correlated string pair `(x, y)`; connect `(v, x ∘ π_{v→u})` to
/// `(w, y ∘ π_{w→u})`. With `loops = false` the pair `(x, y)` is conditioned
/// on `x ≠ y` **before** permuting (this also removes some non-loop edges,
/// and leaves the output exactly loop-free).
pub fn ug_reduction_graph(instance: &UgInstance, rho: f64, loops: bool) -> Result<WeightedGraph> {
    let m = instance.label_count;
    if m > MAX_UG_LABELS {
        return Err(Error::DimensionTooLarge { what: "UG label count", got: m, max: MAX_UG_LABELS });
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    let size = 1usize << m;
    let q = (1.0 + rho) / 2.0;
    let p = (1.0 - rho) / 2.0;
    let qp: Vec<f64> = (0..=m).map(|d| q.powi((m - d) as i32) * p.powi(d as i32)).collect();
    let keep = if loops {
        1.0
    } else {
        let stay = qp[0]; // Pr[x = y] = q^M
        if stay >= 1.0 - 1e-15 {
            return Err(Error::AllLoops { w_loops: stay });
        }
        1.0 - stay
    };

    // Neighbor lists with the inverse permutations the reduction applies.
    let mut neighbors: Vec<Vec<(usize, Vec<usize>)>> = vec![Vec::new(); instance.left.len()];
    for e in &instance.edges {
        neighbors[e.u].push((e.v, invert_perm(&e.perm)));
    }

    let base_u = 1.0 / instance.left.len() as f64;
    let sample_x = (0.5f64).powi(m as i32);
    let vertex = |v: usize, mask: usize| v * size + mask;

    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for nbrs in &neighbors {
        let deg = nbrs.len() as f64;
        let tuple_base = base_u / (deg * deg);
        for (v, pi_vu) in nbrs {
            for (w, pi_wu) in nbrs {
                for x in 0..size {
                    let a = vertex(*v, compose_mask(x, pi_vu));
                    for y in 0..size {
                        if !loops && x == y {
                            continue;
                        }
                        let d = (x ^ y).count_ones() as usize;
                        let prob = tuple_base * sample_x * qp[d] / keep;
                        if prob == 0.0 {
                            continue;
                        }
                        let b = vertex(*w, compose_mask(y, pi_wu));
                        *weights.entry((a.min(b), a.max(b))).or_insert(0.0) += prob;
                    }
                }
            }
        }
    }

    let labels: Vec<String> = instance
        .right
        .iter()
        .flat_map(|r| (0..size).map(move |mask| format!("{r}:{}", hypercube_label(mask, m))))
        .collect();
    let edges: Vec<(usize, usize, f64)> =
        weights.into_iter().map(|((a, b), w)| (a, b, w)).collect();
    WeightedGraph::new(labels, edges)?.normalize_weights()
}

/// The embedded-dictator Bloch assignment on a reduction graph: vertex
/// `(v, x) ↦ (x_coord, 0, 0)`. `coord` is 0-based.
pub fn dictator_assignment(graph: &WeightedGraph, coord: usize) -> Result<UnitVectorAssignment> {
    let rows = graph
        .labels()
        .iter()
        .map(|label| {
            let mask = label
                .rsplit(':')
                .next()
                .filter(|m| m.chars().all(|c| c == '+' || c == '-'))
                .ok_or_else(|| Error::Domain(format!("label {label:?} has no ±-string part")))?;
            let c = mask
                .chars()
                .nth(coord)
                .ok_or_else(|| Error::Domain(format!("coordinate {coord} out of range")))?;
            let sign = if c == '+' { 1.0 } else { -1.0 };
            Ok(vec![sign, 0.0, 0.0])
        })
        .collect::<Result<Vec<_>>>()?;
    UnitVectorAssignment::new(graph.labels().to_vec(), rows)
}
