//! Weighted graphs with probability-mass edge weights.
//!
//! Every instance in this crate is an undirected graph whose edge weights
//! form (after [`WeightedGraph::normalize_weights`]) a probability
//! distribution over edges, self-loops included. Vertices carry opaque
//! string labels; edges are stored in canonical orientation (lexicographically
//! smaller label first) and sorted, so construction order never leaks into
//! serialized output or downstream numerics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Tolerance for treating total edge weight as exactly 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One undirected edge. `u <= v` always holds (canonical orientation), and
/// `u == v` denotes a self-loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    /// Index of the lexicographically smaller endpoint.
    pub u: usize,
    /// Index of the lexicographically larger endpoint.
    pub v: usize,
    /// Non-negative weight.
    pub w: f64,
}

/// An undirected weighted graph with string-labeled vertices.
///
/// Immutable after construction: all mutating operations return new graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    labels: Vec<String>,
    edges: Vec<Edge>,
    total_weight: f64,
}

impl WeightedGraph {
    /// Build a graph from vertex labels and index-based edges.
    ///
    /// Labels are sorted (byte-lexicographically) and edges re-indexed
    /// accordingly; duplicate edges are merged by weight addition; exactly
    /// zero-weight edges are dropped. Rejects negative weights, out-of-range
    /// indices, duplicate or whitespace-containing labels.
    pub fn new(labels: Vec<String>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        for label in &labels {
            if label.is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::Domain(format!(
                    "vertex label {label:?} must be non-empty and whitespace-free"
                )));
            }
        }
        // Sort labels and remember where each original index moved.
        let mut order: Vec<usize> = (0..labels.len()).collect();
        order.sort_by(|&a, &b| labels[a].cmp(&labels[b]));
        let sorted: Vec<String> = order.iter().map(|&i| labels[i].clone()).collect();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate vertex labels".into()));
        }
        let mut new_index = vec![0usize; labels.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }

        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (u, v, w) in edges {
            for &idx in &[u, v] {
                if idx >= labels.len() {
                    return Err(Error::VertexOutOfRange { index: idx, len: labels.len() });
                }
            }
            if w < 0.0 || !w.is_finite() {
                return Err(Error::NegativeWeight {
                    u: labels[u].clone(),
                    v: labels[v].clone(),
                    w,
                });
            }
            let (a, b) = (new_index[u].min(new_index[v]), new_index[u].max(new_index[v]));
            *merged.entry((a, b)).or_insert(0.0) += w;
        }
        let edges: Vec<Edge> = merged
            .into_iter()
            .filter(|&(_, w)| w != 0.0)
            .map(|((u, v), w)| Edge { u, v, w })
            .collect();
        let total_weight = edges.iter().map(|e| e.w).sum();
        Ok(WeightedGraph { labels: sorted, edges, total_weight })
    }

    /// Build a graph from `(label, label, weight)` triples, collecting the
    /// vertex set from the edges.
    pub fn from_labeled(edges: &[(&str, &str, f64)]) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut index: BTreeMap<&str, usize> = BTreeMap::new();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (u, v, w) in edges {
            for s in [u, v] {
                if !index.contains_key(s) {
                    index.insert(s, labels.len());
                    labels.push((*s).to_string());
                }
            }
            idx_edges.push((index[u], index[v], *w));
        }
        Self::new(labels, idx_edges)
    }

    /// Vertex labels in sorted order. Edge endpoint indices refer to this slice.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Edges in canonical sorted order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of vertices.
    pub fn vertex_count(&self) -> usize {
        self.labels.len()
    }

    /// Number of (merged, nonzero) edges.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Index of `label` in the sorted vertex list, if present.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    /// Sum of self-loop weights.
    pub fn loop_weight(&self) -> f64 {
        self.edges.iter().filter(|e| e.u == e.v).map(|e| e.w).sum()
    }

    /// Whether total weight is 1 within [`NORMALIZATION_TOL`].
    pub fn is_normalized(&self) -> bool {
        (self.total_weight - 1.0).abs() <= NORMALIZATION_TOL
    }

    /// Whether any self-loop is present.
    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|e| e.u == e.v)
    }

    /// Neighbor lists `adj[u] = [(v, w), ...]` including self-loops (listed
    /// once, on their own vertex).
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.labels.len()];
        for e in &self.edges {
            adj[e.u].push((e.v, e.w));
            if e.u != e.v {
                adj[e.v].push((e.u, e.w));
            }
        }
        adj
    }

    /// Rescale weights to total exactly 1.
    ///
    /// Proportions are preserved to relative 1e-15; any residual float error
    /// is folded into the canonically last edge so the sum is exactly 1.0.
    pub fn normalize_weights(&self) -> Result<WeightedGraph> {
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let total = self.total_weight;
        if total <= 0.0 {
            return Err(Error::Domain("total edge weight must be positive".into()));
        }
        let mut g = self.clone();
        for e in &mut g.edges {
            e.w /= total;
        }
        g.fold_residual();
        Ok(g)
    }

    /// Make the weight sum exactly 1.0 by adjusting the last edge.
    fn fold_residual(&mut self) {
        let partial: f64 = self.edges[..self.edges.len() - 1].iter().map(|e| e.w).sum();
        let last = self.edges.len() - 1;
        self.edges[last].w = 1.0 - partial;
        debug_assert!(self.edges[last].w >= 0.0, "residual fold produced a negative weight");
        self.total_weight = partial + self.edges[last].w;
    }

    /// Remove self-loops and renormalize, returning the loop-free graph and
    /// the removed loop mass `w_loops`.
    ///
    /// Requires a normalized graph. Post: every surviving weight is the
    /// original divided by `1 − w_loops`, and the result is normalized.
    /// Returns [`Error::AllLoops`] if (almost) all mass sits on loops.
    pub fn remove_self_loops(&self) -> Result<(WeightedGraph, f64)> {
        if !self.is_normalized() {
            return Err(Error::Domain("remove_self_loops requires a normalized graph".into()));
        }
        let w_loops = self.loop_weight();
        if w_loops == 0.0 {
            return Ok((self.clone(), 0.0));
        }
        if w_loops >= 1.0 - NORMALIZATION_TOL {
            return Err(Error::AllLoops { w_loops });
        }
        let scale = 1.0 - w_loops;
        let edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| e.u != e.v)
            .map(|e| Edge { w: e.w / scale, ..*e })
            .collect();
        let mut g = WeightedGraph {
            labels: self.labels.clone(),
            total_weight: edges.iter().map(|e| e.w).sum(),
            edges,
        };
        g.fold_residual();
        Ok((g, w_loops))
    }

    /// Split every vertex into `m` equal-mass copies `label#0 .. label#{m-1}`.
    ///
    /// An edge `(u, v, w)` with `u != v` becomes `m²` edges of weight `w/m²`;
    /// a self-loop becomes `m` loops of weight `w/m²` plus `m(m-1)/2` cross
    /// edges of weight `2w/m²`. Total weight is preserved, so a normalized
    /// graph stays normalized (residual re-folded).
    pub fn split_vertices(&self, m: usize) -> Result<WeightedGraph> {
        if m == 0 {
            return Err(Error::Domain("split_vertices requires m >= 1".into()));
        }
        if self.edges.is_empty() {
            return Err(Error::EmptyGraph);
        }
        let was_normalized = self.is_normalized();
        let labels: Vec<String> = self
            .labels
            .iter()
            .flat_map(|l| (0..m).map(move |j| format!("{l}#{j}")))
            .collect();
        let copy = |vertex: usize, j: usize| vertex * m + j;
        let mf = (m * m) as f64;
        let mut edges = Vec::with_capacity(self.edges.len() * m * m);
        for e in &self.edges {
            let w = e.w / mf;
            if e.u != e.v {
                for i in 0..m {
                    for j in 0..m {
                        edges.push((copy(e.u, i), copy(e.v, j), w));
                    }
                }
            } else {
                for i in 0..m {
                    edges.push((copy(e.u, i), copy(e.u, i), w));
                    for j in i + 1..m {
                        edges.push((copy(e.u, i), copy(e.u, j), 2.0 * w));
                    }
                }
            }
        }
        let mut g = WeightedGraph::new(labels, edges)?;
        if was_normalized {
            g.fold_residual();
        }
        Ok(g)
    }

    /// Endpoint-distribution statistics used by the product-state error bound.
    ///
    /// Draw an edge with probability its weight and orient it uniformly at
    /// random, giving an ordered pair `(u', v')`. Then `p_u = Pr[v' = u]`
    /// (for a loop both orientations land on the same vertex) and
    /// `a_max = max Pr[u' = u | v' = v]`. Requires a normalized graph.
    pub fn bh_stats(&self) -> Result<GraphStats> {
        if !self.is_normalized() {
            return Err(Error::Domain("bh_stats requires a normalized graph".into()));
        }
        let n = self.labels.len();
        // p[v]: probability the second endpoint is v.
        let mut p = vec![0.0f64; n];
        for e in &self.edges {
            if e.u == e.v {
                p[e.u] += e.w;
            } else {
                p[e.u] += e.w / 2.0;
                p[e.v] += e.w / 2.0;
            }
        }
        // a_max: max over (u, v) of Pr[u' = u, v' = v] / p[v].
        let mut a_max = 0.0f64;
        for e in &self.edges {
            if e.u == e.v {
                a_max = a_max.max(e.w / p[e.u]);
            } else {
                a_max = a_max.max((e.w / 2.0) / p[e.v]);
                a_max = a_max.max((e.w / 2.0) / p[e.u]);
            }
        }
        let p_max = p.iter().cloned().fold(0.0, f64::max);
        Ok(GraphStats { vertex_count: n, edge_count: self.edges.len(), p_max, a_max })
    }

    /// Serialize to the `qmclab-graph v1` text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("qmclab-graph v1\n");
        let _ = writeln!(out, "vertices {}", self.labels.len());
        for l in &self.labels {
            out.push_str(l);
            out.push('\n');
        }
        let _ = writeln!(out, "edges {}", self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "{} {} {:.16e}", self.labels[e.u], self.labels[e.v], e.w);
        }
        out
    }

    /// Parse the `qmclab-graph v1` text format.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut next_line = |expect: &str| -> Result<(usize, &str)> {
            lines
                .next()
                .map(|(i, l)| (i + 1, l.trim()))
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing {expect}") })
        };

        let (ln, header) = next_line("header")?;
        if header != "qmclab-graph v1" {
            return Err(Error::Parse { line: ln, msg: format!("bad header {header:?}") });
        }
        let (ln, vline) = next_line("vertex count")?;
        let n: usize = match vline.strip_prefix("vertices ") {
            Some(rest) => rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln, msg: "bad vertex count".into() })?,
            None => return Err(Error::Parse { line: ln, msg: "expected `vertices N`".into() }),
        };
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, label) = next_line("vertex label")?;
            if label.is_empty() {
                return Err(Error::Parse { line: ln, msg: "empty vertex label".into() });
            }
            labels.push(label.to_string());
        }
        let (ln, eline) = next_line("edge count")?;
        let m: usize = match eline.strip_prefix("edges ") {
            Some(rest) => rest
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln, msg: "bad edge count".into() })?,
            None => return Err(Error::Parse { line: ln, msg: "expected `edges E`".into() }),
        };
        let index: BTreeMap<&str, usize> =
            labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        if index.len() != labels.len() {
            return Err(Error::Parse { line: ln, msg: "duplicate vertex labels".into() });
        }
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, line) = next_line("edge")?;
            let mut parts = line.split_whitespace();
            let (u, v, w) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(u), Some(v), Some(w), None) => (u, v, w),
                _ => {
                    return Err(Error::Parse {
                        line: ln,
                        msg: "expected `<u> <v> <weight>`".into(),
                    })
                }
            };
            let get = |s: &str| -> Result<usize> {
                index
                    .get(s)
                    .copied()
                    .ok_or_else(|| Error::Parse { line: ln, msg: format!("unknown vertex {s:?}") })
            };
            let w: f64 = w
                .parse()
                .map_err(|_| Error::Parse { line: ln, msg: format!("bad weight {w:?}") })?;
            edges.push((get(u)?, get(v)?, w));
        }
        WeightedGraph::new(labels, edges)
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

/// Vertex/edge counts plus the endpoint-distribution statistics `p_max`,
/// `a_max` (see [`WeightedGraph::bh_stats`]).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GraphStats {
    /// Number of vertices.
    pub vertex_count: usize,
    /// Number of edges.
    pub edge_count: usize,
    /// Largest single-vertex endpoint probability.
    pub p_max: f64,
    /// Largest conditional endpoint probability.
    pub a_max: f64,
}

/// The additive product-state error bound `20 (n · a_max · p_max)^{1/8} + p_max`.
///
/// For graphs whose endpoint distribution is spread out (small `p_max`,
/// `a_max`), the best product state is guaranteed to come within this additive
/// slack of the true maximum energy.
pub fn bh_error_bound(stats: &GraphStats) -> f64 {
    20.0 * (stats.vertex_count as f64 * stats.a_max * stats.p_max).powf(0.125) + stats.p_max
}
