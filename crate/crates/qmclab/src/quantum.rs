//! Ground-truth oracles: the Quantum Max-Cut Hamiltonian as Pauli terms,
//! exact maximum energy by dense or iterative eigensolving, and product-state
//! evaluation/optimization via Bloch vectors.
//!
//! Basis convention: computational-basis index `i` encodes qubit `j` (the
//! graph vertex with sorted-label index `j`) as bit `j` of `i`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, map_chunks, ExecMode};
use crate::graph::WeightedGraph;
use crate::sdp::{
    evaluate_assignment, solve_vector_program, Objective, SolveOptions, UnitVectorAssignment,
};

/// Qubit cap for the matvec-based iterative eigensolver.
pub const MAX_QUBITS: usize = 24;

/// Qubit cap for dense eigendecomposition (a `2^n × 2^n` matrix).
pub const MAX_QUBITS_DENSE: usize = 12;

/// Default residual tolerance for the iterative eigensolver.
pub const DEFAULT_EIG_TOL: f64 = 1e-9;

/// One single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    /// Bit flip.
    X,
    /// Bit flip with phase `i·(−1)^bit`.
    Y,
    /// Phase `(−1)^bit`.
    Z,
}

/// A weighted tensor product of single-qubit Paulis (identity elsewhere).
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    /// Real coefficient.
    pub coefficient: f64,
    /// Qubit index → Pauli factor; empty means a scalar identity term.
    pub factors: BTreeMap<usize, Pauli>,
}

impl PauliTerm {
    /// Convenience constructor from `(qubit, Pauli)` pairs.
    pub fn new(coefficient: f64, factors: &[(usize, Pauli)]) -> Self {
        PauliTerm { coefficient, factors: factors.iter().copied().collect() }
    }
}

/// A compiled term: bitmasks per Pauli kind plus the effective real
/// coefficient (the original times `i^{#Y}`, which is real for even `#Y`).
#[derive(Debug, Clone, Copy)]
struct CompiledTerm {
    flip_mask: usize,
    sign_mask: usize,
    coeff: f64,
}

/// A Hermitian operator `c·I + Σ_t coeff_t · P_t` on `qubit_count` qubits.
///
/// Restricted to terms with an even number of `Y` factors, which makes the
/// matrix real symmetric in the computational basis — every Quantum Max-Cut
/// Hamiltonian has this form.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    qubit_count: usize,
    identity_coeff: f64,
    terms: Vec<PauliTerm>,
    compiled: Vec<CompiledTerm>,
}

impl Hamiltonian {
    /// Validate and compile a Hamiltonian from Pauli terms.
    pub fn new(qubit_count: usize, identity_coeff: f64, terms: Vec<PauliTerm>) -> Result<Self> {
        if qubit_count == 0 || qubit_count > MAX_QUBITS {
            return Err(Error::DimensionTooLarge {
                what: "qubit count",
                got: qubit_count,
                max: MAX_QUBITS,
            });
        }
        if !identity_coeff.is_finite() {
            return Err(Error::Domain("identity coefficient must be finite".into()));
        }
        let mut compiled = Vec::with_capacity(terms.len());
        for term in &terms {
            if !term.coefficient.is_finite() {
                return Err(Error::Domain("Pauli coefficients must be finite".into()));
            }
            let (mut x, mut y, mut z) = (0usize, 0usize, 0usize);
            for (&q, &p) in &term.factors {
                if q >= qubit_count {
                    return Err(Error::VertexOutOfRange { index: q, len: qubit_count });
                }
                match p {
                    Pauli::X => x |= 1 << q,
                    Pauli::Y => y |= 1 << q,
                    Pauli::Z => z |= 1 << q,
                }
            }
            let y_count = y.count_ones();
            if y_count % 2 != 0 {
                return Err(Error::Domain(
                    "terms with an odd number of Y factors make the matrix complex; \
                     only even-Y (real symmetric) Hamiltonians are supported"
                        .into(),
                ));
            }
            // i^{#Y} = (−1)^{#Y/2} for even #Y.
            let phase = if (y_count / 2) % 2 == 0 { 1.0 } else { -1.0 };
            compiled.push(CompiledTerm {
                flip_mask: x | y,
                sign_mask: y | z,
                coeff: term.coefficient * phase,
            });
        }
        Ok(Hamiltonian { qubit_count, identity_coeff, terms, compiled })
    }

    /// Number of qubits.
    pub fn qubit_count(&self) -> usize {
        self.qubit_count
    }

    /// Hilbert-space dimension `2^n`.
    pub fn dimension(&self) -> usize {
        1usize << self.qubit_count
    }

    /// Coefficient of the identity component.
    pub fn identity_coeff(&self) -> f64 {
        self.identity_coeff
    }

    /// The Pauli terms (identity excluded).
    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Apply the operator to a real state vector.
    ///
    /// Each output entry is an independent sum over terms, so the
    /// chunk-parallel evaluation is exactly reproducible.
    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let dim = self.dimension();
        if v.len() != dim {
            return Err(Error::Domain(format!(
                "state has length {}, expected 2^{} = {dim}",
                v.len(),
                self.qubit_count
            )));
        }
        let chunk = 1usize << 14;
        let chunk_count = dim.div_ceil(chunk) as u64;
        let pieces = map_chunks(ExecMode::Auto, chunk_count, |c| {
            let lo = c as usize * chunk;
            let hi = (lo + chunk).min(dim);
            let mut out = vec![0.0f64; hi - lo];
            for (slot, o) in out.iter_mut().zip(lo..hi) {
                let mut acc = self.identity_coeff * v[o];
                for t in &self.compiled {
                    let i = o ^ t.flip_mask;
                    let sign = if (i & t.sign_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    acc += t.coeff * sign * v[i];
                }
                *slot = acc;
            }
            out
        });
        Ok(pieces.concat())
    }

    /// `⟨ψ|H|ψ⟩` for a (not necessarily normalized) real state.
    pub fn expectation(&self, state: &[f64]) -> Result<f64> {
        let hv = self.apply(state)?;
        let num: f64 = state.iter().zip(&hv).map(|(a, b)| a * b).sum();
        let den: f64 = state.iter().map(|a| a * a).sum();
        if den <= 0.0 {
            return Err(Error::Domain("state vector must be nonzero".into()));
        }
        Ok(num / den)
    }

    /// Dense real symmetric matrix (requires `n ≤ MAX_QUBITS_DENSE`).
    pub fn dense_matrix(&self) -> Result<DMatrix<f64>> {
        if self.qubit_count > MAX_QUBITS_DENSE {
            return Err(Error::DimensionTooLarge {
                what: "dense qubit count",
                got: self.qubit_count,
                max: MAX_QUBITS_DENSE,
            });
        }
        let dim = self.dimension();
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        for o in 0..dim {
            m[(o, o)] = self.identity_coeff;
        }
        for t in &self.compiled {
            for i in 0..dim {
                let o = i ^ t.flip_mask;
                let sign = if (i & t.sign_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                m[(o, i)] += t.coeff * sign;
            }
        }
        Ok(m)
    }
}

/// Build the Quantum Max-Cut Hamiltonian
/// `H = Σ_e w_e · (I − X_uX_v − Y_uY_v − Z_uZ_v)/4` of a normalized,
/// loop-free graph. Each edge term is the singlet projector on its qubits.
pub fn build_hamiltonian(graph: &WeightedGraph) -> Result<Hamiltonian> {
    if graph.has_loops() {
        return Err(Error::LoopsNotAllowed { context: "build_hamiltonian" });
    }
    if !graph.is_normalized() {
        return Err(Error::Domain("build_hamiltonian requires a normalized graph".into()));
    }
    let n = graph.vertex_count();
    if n > MAX_QUBITS {
        return Err(Error::DimensionTooLarge { what: "qubit count", got: n, max: MAX_QUBITS });
    }
    let mut identity = 0.0;
    let mut terms = Vec::with_capacity(3 * graph.edge_count());
    for e in graph.edges() {
        identity += e.w / 4.0;
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push(PauliTerm::new(-e.w / 4.0, &[(e.u, p), (e.v, p)]));
        }
    }
    Hamiltonian::new(n, identity, terms)
}

/// Eigensolver backend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigMethod {
    /// Full dense symmetric eigendecomposition (`n ≤ 12`).
    Dense,
    /// Lanczos with full reorthogonalization on the matvec (`n ≤ 24`).
    Iterative,
}

/// Maximum energy `λ_max(H)` and a witnessing unit eigenvector.
///
/// `tol` is the iterative residual target `‖Hψ − λψ‖ ≤ tol` (ignored by the
/// dense path, which is exact to machine precision); `seed` drives the
/// iterative starting vector. With a degenerate top eigenspace any unit
/// eigenvector may be returned — the value is the contract, not the state.
pub fn max_energy(
    h: &Hamiltonian,
    method: EigMethod,
    tol: f64,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    match method {
        EigMethod::Dense => {
            let eig = SymmetricEigen::new(h.dense_matrix()?);
            let (best, _) = eig
                .eigenvalues
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty spectrum");
            let value = eig.eigenvalues[best];
            let state: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
            Ok((value, state))
        }
        EigMethod::Iterative => lanczos_max(h, tol, seed),
    }
}

/// Lanczos with full reorthogonalization and restarts from the best Ritz
/// vector. Memory: `(basis + 2) · 2^n` doubles.
fn lanczos_max(h: &Hamiltonian, tol: f64, seed: u64) -> Result<(f64, Vec<f64>)> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Domain(format!("eigensolver tol must lie in (0, 1), got {tol}")));
    }
    let dim = h.dimension();
    let max_basis = dim.min(128);
    let max_restarts = 20usize;

    let mut rng = chunk_rng(seed, 0, 0);
    let mut v0: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    normalize(&mut v0);

    let mut total_iters = 0usize;
    let mut last_residual = f64::INFINITY;
    for _restart in 0..max_restarts {
        let mut basis: Vec<Vec<f64>> = vec![v0.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for j in 0..max_basis {
            total_iters += 1;
            let mut w = h.apply(&basis[j])?;
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            // Full reorthogonalization, two passes, keeps the basis
            // orthonormal to machine precision.
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(&w, q);
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let beta = dot(&w, &w).sqrt();

            let (_theta, s) = top_ritz(&alphas, &betas);
            // Standard Lanczos bound: ‖Hy − θy‖ = |β_j · s_last|.
            let residual = beta * s.last().copied().unwrap_or(1.0).abs();
            last_residual = residual;
            if residual <= tol || beta <= 1e-300 || j + 1 == dim {
                let mut y = vec![0.0f64; dim];
                for (coef, q) in s.iter().zip(&basis) {
                    for (yi, qi) in y.iter_mut().zip(q) {
                        *yi += coef * qi;
                    }
                }
                normalize(&mut y);
                // Exact residual check guards against a lucky bound.
                let hy = h.apply(&y)?;
                let lambda = dot(&y, &hy);
                let exact: f64 =
                    hy.iter().zip(&y).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
                if exact <= tol * 10.0 || beta <= 1e-300 || j + 1 == dim {
                    return Ok((lambda, y));
                }
                // Bound was optimistic: restart from this Ritz vector.
                v0 = y;
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
            if j + 1 == max_basis {
                // Krylov budget exhausted: restart from the best Ritz vector.
                let mut y = vec![0.0f64; dim];
                for (coef, q) in s.iter().zip(&basis[..s.len()]) {
                    for (yi, qi) in y.iter_mut().zip(q) {
                        *yi += coef * qi;
                    }
                }
                normalize(&mut y);
                v0 = y;
            }
        }
    }
    Err(Error::NoConvergence {
        what: "Lanczos eigensolver",
        iterations: total_iters,
        residual: last_residual,
    })
}

/// Top eigenpair of the symmetric tridiagonal matrix `(alphas, betas)`.
fn top_ritz(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let j = alphas.len();
    let mut t = DMatrix::<f64>::zeros(j, j);
    for (i, &a) in alphas.iter().enumerate() {
        t[(i, i)] = a;
    }
    for (i, &b) in betas.iter().take(j.saturating_sub(1)).enumerate() {
        t[(i, i + 1)] = b;
        t[(i + 1, i)] = b;
    }
    let eig = SymmetricEigen::new(t);
    let (best, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty spectrum");
    (eig.eigenvalues[best], eig.eigenvectors.column(best).iter().copied().collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        for x in v {
            *x /= n;
        }
    }
}

/// A unit-vector assignment into `S² ⊂ R³` — one Bloch vector per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct BlochAssignment(UnitVectorAssignment);

impl BlochAssignment {
    /// Wrap an assignment, requiring rank exactly 3.
    pub fn new(f: UnitVectorAssignment) -> Result<Self> {
        if f.rank() != 3 {
            return Err(Error::Domain(format!(
                "Bloch assignments need rank 3 rows, got rank {}",
                f.rank()
            )));
        }
        Ok(BlochAssignment(f))
    }

    /// The underlying assignment.
    pub fn as_assignment(&self) -> &UnitVectorAssignment {
        &self.0
    }

    /// Unwrap.
    pub fn into_assignment(self) -> UnitVectorAssignment {
        self.0
    }
}

/// Energy of the product state with the given Bloch vectors:
/// `Σ_e w_e (1/4 − ⟨f(u), f(v)⟩/4)`.
pub fn energy_of_bloch(graph: &WeightedGraph, f: &BlochAssignment) -> Result<f64> {
    evaluate_assignment(graph, Objective::PRODUCT, f.as_assignment())
}

/// Best product-state energy found by multi-restart sphere ascent on `S²`
/// (the vector-program solver with rank pinned to 3).
///
/// The returned value always satisfies `value = energy_of_bloch(g, f)` and,
/// for normalized graphs, `value ≤ 1/2`.
pub fn product_state_value(
    graph: &WeightedGraph,
    options: &SolveOptions,
) -> Result<(f64, BlochAssignment)> {
    let opts = SolveOptions { rank: Some(3), ..*options };
    let solution = solve_vector_program(graph, Objective::PRODUCT, &opts)?;
    let bloch = BlochAssignment::new(solution.assignment)?;
    Ok((solution.value, bloch))
}
