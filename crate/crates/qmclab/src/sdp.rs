//! Vector-program relaxations over unit spheres and their block
//! coordinate-ascent solver.
//!
//! Every relaxation here maximizes `E_{(u,v) ~ w} [ a − b ⟨f(u), f(v)⟩ ]`
//! over maps `f : V → S^{r−1}`. The three shipped objectives differ only in
//! `(a, b)`:
//!
//! * Max-Cut:            `(1/2, 1/2)`
//! * Product state:      `(1/4, 1/4)`
//! * Quantum Max-Cut:    `(1/4, 3/4)`
//!
//! Since `b > 0`, all three share the same optimizer, which forces the exact
//! affine identities `SDP_Prod = SDP_MC / 2` and
//! `SDP_QMC = (3/2)·SDP_MC − 1/2` ([`sdp_identities`]).
//!
//! The solver is low-rank block coordinate ascent: each vertex update
//! `f(u) ← −normalize(Σ_v w_uv f(v))` is the exact maximizer of the objective
//! with all other rows fixed, so the value is monotone nondecreasing and
//! converges to a first-order critical point. At rank `r = |V|` the sphere
//! relaxation is equivalent to the full semidefinite program.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{map_chunks, ExecMode};
use crate::graph::WeightedGraph;

/// Tolerance for unit-norm rows of an assignment.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// An edge objective `a − b ⟨f(u), f(v)⟩` with `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Objective {
    /// Constant term.
    pub a: f64,
    /// Inner-product coefficient (positive: anti-alignment is rewarded).
    pub b: f64,
}

impl Objective {
    /// Max-Cut objective `1/2 − 1/2 ⟨·,·⟩`.
    pub const MAX_CUT: Objective = Objective { a: 0.5, b: 0.5 };
    /// Product-state objective `1/4 − 1/4 ⟨·,·⟩`.
    pub const PRODUCT: Objective = Objective { a: 0.25, b: 0.25 };
    /// Quantum Max-Cut objective `1/4 − 3/4 ⟨·,·⟩`.
    pub const QUANTUM_MAX_CUT: Objective = Objective { a: 0.25, b: 0.75 };

    /// A custom objective; rejects `b <= 0` (ascent direction would flip).
    pub fn custom(a: f64, b: f64) -> Result<Objective> {
        if b <= 0.0 || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!(
                "objective requires finite coefficients with b > 0, got a = {a}, b = {b}"
            )));
        }
        Ok(Objective { a, b })
    }

    /// Value contributed by a single edge given the endpoint inner product.
    #[inline]
    pub fn edge_value(&self, dot: f64) -> f64 {
        self.a - self.b * dot
    }

    /// Human-readable name of the objective family.
    pub fn name(&self) -> &'static str {
        if *self == Objective::MAX_CUT {
            "max_cut"
        } else if *self == Objective::PRODUCT {
            "product"
        } else if *self == Objective::QUANTUM_MAX_CUT {
            "quantum_max_cut"
        } else {
            "custom"
        }
    }
}

/// A map from vertex labels to unit vectors in `R^r`, stored as one row per
/// vertex in the owning graph's label order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnitVectorAssignment {
    /// Vertex labels, same order as `rows`.
    pub labels: Vec<String>,
    /// Embedding dimension.
    pub r: usize,
    /// One unit vector per label.
    pub rows: Vec<Vec<f64>>,
}

impl UnitVectorAssignment {
    /// Build an assignment, validating shapes and unit norms (within 1e-9).
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::Domain(format!(
                "label count {} does not match row count {}",
                labels.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::Domain("assignment must cover at least one vertex".into()));
        }
        let r = rows[0].len();
        if r == 0 {
            return Err(Error::Domain("assignment rank must be >= 1".into()));
        }
        for (label, row) in labels.iter().zip(&rows) {
            if row.len() != r {
                return Err(Error::Domain(format!("row for {label:?} has mixed dimension")));
            }
            let norm = dot(row, row).sqrt();
            if (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::Domain(format!(
                    "row for {label:?} has norm {norm}, expected 1 within {UNIT_NORM_TOL}"
                )));
            }
        }
        Ok(UnitVectorAssignment { labels, r, rows })
    }

    /// The identity embedding of `{−1,+1}^n` hypercube labels: vertex
    /// `x ↦ x/√n ∈ S^{n−1}`. Labels must be strings over `+`/`-`.
    pub fn hypercube_identity(labels: &[String]) -> Result<Self> {
        let n = labels.first().map(|l| l.len()).unwrap_or(0);
        if n == 0 {
            return Err(Error::Domain("hypercube identity needs nonempty labels".into()));
        }
        let scale = 1.0 / (n as f64).sqrt();
        let rows = labels
            .iter()
            .map(|label| {
                label
                    .chars()
                    .map(|c| match c {
                        '+' => Ok(scale),
                        '-' => Ok(-scale),
                        _ => Err(Error::Domain(format!(
                            "label {label:?} is not a +/- hypercube string"
                        ))),
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        UnitVectorAssignment::new(labels.to_vec(), rows)
    }

    /// Dimension of the rows.
    pub fn rank(&self) -> usize {
        self.r
    }

    /// Row index for a label, if covered.
    pub fn index_of(&self, label: &str) -> Option<usize> {
        // Rows follow the graph's sorted label order, so binary search works;
        // fall back to linear scan if the caller built an unsorted assignment.
        match self.labels.binary_search_by(|l| l.as_str().cmp(label)) {
            Ok(i) => Some(i),
            Err(_) => self.labels.iter().position(|l| l == label),
        }
    }
}

/// Inner product of two equal-length slices.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Average objective value of an assignment on a graph:
/// `Σ_e w_e (a − b ⟨f(u), f(v)⟩)`.
///
/// Self-loops contribute `a − b` (their inner product is exactly 1).
/// Fails with [`Error::MissingVertex`] if the assignment misses a vertex.
pub fn evaluate_assignment(
    graph: &WeightedGraph,
    objective: Objective,
    assignment: &UnitVectorAssignment,
) -> Result<f64> {
    let index: Vec<usize> = graph
        .labels()
        .iter()
        .map(|label| {
            assignment
                .index_of(label)
                .ok_or_else(|| Error::MissingVertex { label: label.clone() })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut value = 0.0;
    for e in graph.edges() {
        let d = if e.u == e.v {
            1.0
        } else {
            dot(&assignment.rows[index[e.u]], &assignment.rows[index[e.v]])
        };
        value += e.w * objective.edge_value(d);
    }
    Ok(value)
}

/// Result of a block coordinate-ascent solve.
#[derive(Debug, Clone, Serialize)]
pub struct SdpSolution {
    /// The optimizing assignment (best restart).
    pub assignment: UnitVectorAssignment,
    /// Objective value of `assignment`.
    pub value: f64,
    /// Sweeps performed by the winning restart.
    pub iterations: usize,
    /// Largest tangential gradient norm over vertices at termination.
    pub residual: f64,
    /// Number of independent restarts performed.
    pub restarts: usize,
}

/// Options for [`solve_vector_program`]; `Default` matches the documented
/// solver policy.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Embedding dimension; `None` means `r = |V|` (full rank, exact SDP).
    pub rank: Option<usize>,
    /// Per-sweep value-gain convergence threshold.
    pub tol: f64,
    /// Sweep cap per restart; `None` means `10 · |V| · ln(1/tol)`.
    pub max_iter: Option<usize>,
    /// Independent random restarts.
    pub restarts: usize,
    /// RNG seed; restart `i` derives its own stream.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { rank: None, tol: 1e-10, max_iter: None, restarts: 5, seed: 1 }
    }
}

/// Maximize `Σ_e w_e (a − b ⟨f(u), f(v)⟩)` over unit-sphere maps by block
/// coordinate ascent with randomized sweep order and independent restarts.
///
/// Requires a normalized, loop-free graph (a loop's contribution is constant,
/// so callers must strip loops first and account for the rescaling).
/// The returned value is a lower bound on the true relaxation optimum; at
/// full rank with several restarts it is exact in practice, which the test
/// suite pins against exact diagonalization and closed-form optima.
pub fn solve_vector_program(
    graph: &WeightedGraph,
    objective: Objective,
    options: &SolveOptions,
) -> Result<SdpSolution> {
    if graph.edge_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    if !graph.is_normalized() {
        return Err(Error::Domain("solve_vector_program requires a normalized graph".into()));
    }
    if graph.has_loops() {
        return Err(Error::LoopsNotAllowed { context: "solve_vector_program" });
    }
    let n = graph.vertex_count();
    let r = options.rank.unwrap_or(n).max(1);
    if !(options.tol > 0.0 && options.tol < 1.0) {
        return Err(Error::Domain(format!("tol must be in (0, 1), got {}", options.tol)));
    }
    if options.restarts == 0 {
        return Err(Error::Domain("restarts must be >= 1".into()));
    }
    let max_iter = options
        .max_iter
        .unwrap_or_else(|| (10.0 * n as f64 * (1.0 / options.tol).ln()).ceil() as usize);

    let adjacency = graph.adjacency();
    let runs = map_chunks(ExecMode::Auto, options.restarts as u64, |restart| {
        ascend_once(graph, objective, &adjacency, r, options.tol, max_iter, options.seed, restart)
    });

    // Best value wins; ties broken by restart index for determinism.
    let best = runs
        .into_iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(j.cmp(i)))
        .map(|(_, run)| run)
        .expect("at least one restart");

    let rows = best.rows;
    let assignment = UnitVectorAssignment::new(graph.labels().to_vec(), rows)?;
    let value = evaluate_assignment(graph, objective, &assignment)?;
    Ok(SdpSolution {
        assignment,
        value,
        iterations: best.iterations,
        residual: best.residual,
        restarts: options.restarts,
    })
}

struct AscentRun {
    rows: Vec<Vec<f64>>,
    value: f64,
    iterations: usize,
    residual: f64,
}

#[allow(clippy::too_many_arguments)]
fn ascend_once(
    graph: &WeightedGraph,
    objective: Objective,
    adjacency: &[Vec<(usize, f64)>],
    r: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
    restart: u64,
) -> AscentRun {
    let n = graph.vertex_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart);

    // Random unit rows.
    let mut rows: Vec<Vec<f64>> = (0..n).map(|_| random_unit_row(&mut rng, r)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut value = graph_value(graph, objective, &rows);
    let mut iterations = 0;

    for _ in 0..max_iter {
        iterations += 1;
        order.shuffle(&mut rng);
        for &u in &order {
            let mut s = vec![0.0f64; r];
            for &(v, w) in &adjacency[u] {
                for (si, fv) in s.iter_mut().zip(&rows[v]) {
                    *si += w * fv;
                }
            }
            let norm = dot(&s, &s).sqrt();
            // Zero neighbor sum: the objective is flat in f(u); keep the
            // previous vector, preserving the unit-norm invariant.
            if norm > 1e-300 {
                for (fu, si) in rows[u].iter_mut().zip(&s) {
                    *fu = -si / norm;
                }
            }
        }
        let new_value = graph_value(graph, objective, &rows);
        let gain = new_value - value;
        value = new_value;
        if gain < tol {
            break;
        }
    }

    AscentRun { residual: tangential_residual(objective, adjacency, &rows), rows, value, iterations }
}

fn random_unit_row(rng: &mut ChaCha8Rng, r: usize) -> Vec<f64> {
    loop {
        let row: Vec<f64> =
            (0..r).map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        let norm = dot(&row, &row).sqrt();
        if norm > 1e-12 {
            return row.iter().map(|x| x / norm).collect();
        }
    }
}

fn graph_value(graph: &WeightedGraph, objective: Objective, rows: &[Vec<f64>]) -> f64 {
    graph
        .edges()
        .iter()
        .map(|e| e.w * objective.edge_value(dot(&rows[e.u], &rows[e.v])))
        .sum()
}

/// Largest norm over vertices of the objective gradient projected onto the
/// sphere tangent space: `max_u ‖P_{f(u)}^⊥ (−b Σ_v w_uv f(v))‖`.
fn tangential_residual(
    objective: Objective,
    adjacency: &[Vec<(usize, f64)>],
    rows: &[Vec<f64>],
) -> f64 {
    let mut worst = 0.0f64;
    for (u, neighbors) in adjacency.iter().enumerate() {
        let r = rows[u].len();
        let mut g = vec![0.0f64; r];
        for &(v, w) in neighbors {
            for (gi, fv) in g.iter_mut().zip(&rows[v]) {
                *gi -= objective.b * w * fv;
            }
        }
        let along = dot(&g, &rows[u]);
        let tangent_sq = (dot(&g, &g) - along * along).max(0.0);
        worst = worst.max(tangent_sq.sqrt());
    }
    worst
}

/// The exact affine identities tying the three relaxation values together:
/// given `SDP_MC`, returns `(SDP_Prod, SDP_QMC) = (mc/2, 3·mc/2 − 1/2)`.
pub fn sdp_identities(sdp_mc: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&sdp_mc) {
        return Err(Error::Domain(format!("SDP_MC value must lie in [0, 1], got {sdp_mc}")));
    }
    Ok((sdp_mc / 2.0, 1.5 * sdp_mc - 0.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::standard_graph;

    fn solve(graph: &WeightedGraph, objective: Objective) -> SdpSolution {
        solve_vector_program(graph, objective, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn objective_constructors() {
        assert_eq!(Objective::MAX_CUT.edge_value(-1.0), 1.0);
        assert_eq!(Objective::PRODUCT.edge_value(-1.0), 0.5);
        assert_eq!(Objective::QUANTUM_MAX_CUT.edge_value(-1.0), 1.0);
        assert!(Objective::custom(0.5, 0.0).is_err());
        assert!(Objective::custom(0.5, -1.0).is_err());
        assert!(Objective::custom(0.0, 2.0).is_ok());
    }

    #[test]
    fn assignment_validation() {
        let ok = UnitVectorAssignment::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![0.0, -1.0]],
        );
        assert!(ok.is_ok());
        let bad_norm = UnitVectorAssignment::new(vec!["a".into()], vec![vec![0.5, 0.0]]);
        assert!(bad_norm.is_err());
        let mixed = UnitVectorAssignment::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![0.0, 1.0]],
        );
        assert!(mixed.is_err());
    }

    #[test]
    fn evaluate_single_edge_antipodal() {
        let g = standard_graph("single_edge").unwrap();
        let f = UnitVectorAssignment::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(evaluate_assignment(&g, Objective::MAX_CUT, &f).unwrap(), 1.0);
        assert_eq!(evaluate_assignment(&g, Objective::QUANTUM_MAX_CUT, &f).unwrap(), 1.0);
        assert_eq!(evaluate_assignment(&g, Objective::PRODUCT, &f).unwrap(), 0.5);
    }

    #[test]
    fn evaluate_rejects_missing_vertex() {
        let g = standard_graph("single_edge").unwrap();
        let f = UnitVectorAssignment::new(vec!["a".into()], vec![vec![1.0]]).unwrap();
        assert!(matches!(
            evaluate_assignment(&g, Objective::MAX_CUT, &f),
            Err(Error::MissingVertex { .. })
        ));
    }

    #[test]
    fn loops_contribute_their_constant_value() {
        let g = crate::graph::WeightedGraph::from_labeled(&[("a", "a", 0.5), ("a", "b", 0.5)])
            .unwrap();
        let f = UnitVectorAssignment::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![-1.0]],
        )
        .unwrap();
        // Loop: 1/2 * (1/2 - 1/2) = 0; edge: 1/2 * 1 = 1/2.
        assert_eq!(evaluate_assignment(&g, Objective::MAX_CUT, &f).unwrap(), 0.5);
    }

    #[test]
    fn single_edge_solves_to_one() {
        let g = standard_graph("single_edge").unwrap();
        let sol = solve(&g, Objective::MAX_CUT);
        assert!((sol.value - 1.0).abs() < 1e-9, "value = {}", sol.value);
        assert!(sol.residual < 1e-6);
        // The two vectors end up antipodal.
        let d = dot(&sol.assignment.rows[0], &sol.assignment.rows[1]);
        assert!((d + 1.0).abs() < 1e-7);
    }

    #[test]
    fn triangle_max_cut_is_three_quarters() {
        // The K3 Max-Cut SDP optimum is 3/4, attained by planar vectors at
        // 120 degrees; full-rank ascent finds it.
        let g = standard_graph("complete:3").unwrap();
        let sol = solve(&g, Objective::MAX_CUT);
        assert!((sol.value - 0.75).abs() < 1e-8, "value = {}", sol.value);
        // Every pairwise inner product is -1/2. The gain-based stop bounds
        // the value to ~tol but positions only to ~sqrt(tol).
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let d = dot(&sol.assignment.rows[i], &sol.assignment.rows[j]);
            assert!((d + 0.5).abs() < 1e-4, "dot({i},{j}) = {d}");
        }
    }

    #[test]
    fn triangle_objectives_satisfy_affine_identities() {
        let g = standard_graph("complete:3").unwrap();
        let mc = solve(&g, Objective::MAX_CUT).value;
        let prod = solve(&g, Objective::PRODUCT).value;
        let qmc = solve(&g, Objective::QUANTUM_MAX_CUT).value;
        let (prod_id, qmc_id) = sdp_identities(mc).unwrap();
        assert!((prod - prod_id).abs() < 1e-8);
        assert!((qmc - qmc_id).abs() < 1e-8);
        // K3: MC = 3/4, Prod = 3/8, QMC = 5/8.
        assert!((prod - 0.375).abs() < 1e-8);
        assert!((qmc - 0.625).abs() < 1e-8);
    }

    #[test]
    fn rank_one_solves_discrete_max_cut() {
        // At r = 1 the sphere is {-1, +1}: C5's best cut has 4 of 5 edges.
        let g = standard_graph("cycle:5").unwrap();
        let sol = solve_vector_program(
            &g,
            Objective::MAX_CUT,
            &SolveOptions { rank: Some(1), restarts: 20, ..Default::default() },
        )
        .unwrap();
        assert!((sol.value - 0.8).abs() < 1e-12, "value = {}", sol.value);
    }

    #[test]
    fn solver_rejects_bad_inputs() {
        let g = standard_graph("single_edge").unwrap();
        assert!(solve_vector_program(
            &g,
            Objective::MAX_CUT,
            &SolveOptions { restarts: 0, ..Default::default() }
        )
        .is_err());
        let loopy = crate::graph::WeightedGraph::from_labeled(&[("a", "a", 0.5), ("a", "b", 0.5)])
            .unwrap();
        assert!(matches!(
            solve_vector_program(&loopy, Objective::MAX_CUT, &SolveOptions::default()),
            Err(Error::LoopsNotAllowed { .. })
        ));
        let unnormalized =
            crate::graph::WeightedGraph::from_labeled(&[("a", "b", 2.0)]).unwrap();
        assert!(solve_vector_program(&unnormalized, Objective::MAX_CUT, &SolveOptions::default())
            .is_err());
    }

    #[test]
    fn solver_is_deterministic_in_seed() {
        let g = standard_graph("cycle:4").unwrap();
        let a = solve(&g, Objective::MAX_CUT);
        let b = solve(&g, Objective::MAX_CUT);
        assert_eq!(a.value, b.value);
        assert_eq!(a.assignment.rows, b.assignment.rows);
        // C4 is bipartite: SDP_MC = 1.
        assert!((a.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn identities_reject_out_of_range() {
        assert!(sdp_identities(1.5).is_err());
        assert!(sdp_identities(-0.1).is_err());
        let (p, q) = sdp_identities(0.75).unwrap();
        assert_eq!(p, 0.375);
        assert_eq!(q, 0.625);
    }
}
