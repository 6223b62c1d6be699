//! Walsh–Fourier analysis of vector-valued Boolean functions
//! `f : {−1,+1}^n → R^k`: transforms, influences, noise stability, the noise
//! operator, odd parts, embedded dictators, and notable-coordinate
//! extraction for the dictatorship test.
//!
//! Input convention: strings are bitmask indices where bit `j` clear means
//! `x_j = +1` (matching hypercube vertex labels, char `j` of the label).
//! Subsets `S` are bitmasks; `χ_S(x) = (−1)^{popcount(x & S)}`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, map_chunks, mean_ci95, plan_chunks, ExecMode};

/// Maximum input bits (tables are dense `2^n × k`).
pub const MAX_FOURIER_BITS: usize = 20;

/// Tolerance for the unit-ball range check.
pub const BALL_TOL: f64 = 1e-12;

/// In-place Walsh–Hadamard butterfly (unnormalized): replaces `data[x]`
/// by `Σ_y data[y] (−1)^{popcount(x & y)}`. Involution up to a `2^n` factor.
pub fn walsh_hadamard(data: &mut [f64]) {
    debug_assert!(data.len().is_power_of_two());
    let mut len = 1;
    while len < data.len() {
        for block in data.chunks_mut(2 * len) {
            let (lo, hi) = block.split_at_mut(len);
            for (a, b) in lo.iter_mut().zip(hi) {
                let (s, d) = (*a + *b, *a - *b);
                *a = s;
                *b = d;
            }
        }
        len *= 2;
    }
}

/// A vector-valued Boolean function with its Walsh coefficients.
///
/// The coefficient table is computed eagerly at construction: row `S` holds
/// `f̂(S) ∈ R^k` with `f(x) = Σ_S f̂(S) χ_S(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BooleanVectorFunction {
    n: usize,
    k: usize,
    /// Row-major `2^n × k` values.
    table: Vec<f64>,
    /// Row-major `2^n × k` Walsh coefficients.
    coeffs: Vec<f64>,
    /// Every value row lies in the unit ball `B^k` (within [`BALL_TOL`]).
    range_constrained: bool,
}

impl BooleanVectorFunction {
    /// Build from a full value table (`rows[x]` is `f(x)`, one row per
    /// bitmask input in increasing order).
    pub fn from_rows(n: usize, k: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if n == 0 || n > MAX_FOURIER_BITS {
            return Err(Error::DimensionTooLarge {
                what: "Boolean input bits",
                got: n,
                max: MAX_FOURIER_BITS,
            });
        }
        if k == 0 {
            return Err(Error::Domain("output dimension k must be >= 1".into()));
        }
        let size = 1usize << n;
        if rows.len() != size || rows.iter().any(|r| r.len() != k) {
            return Err(Error::Domain(format!(
                "value table must be 2^{n} rows of dimension {k}"
            )));
        }
        let mut table = Vec::with_capacity(size * k);
        for row in rows {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("table entries must be finite".into()));
            }
            table.extend_from_slice(row);
        }
        Ok(Self::from_flat(n, k, table))
    }

    fn from_flat(n: usize, k: usize, table: Vec<f64>) -> Self {
        let size = 1usize << n;
        // One butterfly per output coordinate, then the 2^{-n} normalization.
        let mut coeffs = vec![0.0f64; size * k];
        let mut scratch = vec![0.0f64; size];
        let scale = 1.0 / size as f64;
        for j in 0..k {
            for x in 0..size {
                scratch[x] = table[x * k + j];
            }
            walsh_hadamard(&mut scratch);
            for s in 0..size {
                coeffs[s * k + j] = scratch[s] * scale;
            }
        }
        let range_constrained = table
            .chunks(k)
            .all(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1.0 + BALL_TOL);
        BooleanVectorFunction { n, k, table, coeffs, range_constrained }
    }

    /// Rebuild a function from its coefficient table (inverse transform).
    fn from_coeffs(n: usize, k: usize, coeffs: Vec<f64>) -> Self {
        let size = 1usize << n;
        let mut table = vec![0.0f64; size * k];
        let mut scratch = vec![0.0f64; size];
        for j in 0..k {
            for s in 0..size {
                scratch[s] = coeffs[s * k + j];
            }
            walsh_hadamard(&mut scratch);
            for x in 0..size {
                table[x * k + j] = scratch[x];
            }
        }
        let mut f = Self::from_flat(n, k, table);
        // Replace the recomputed coefficients with the exact originals to
        // avoid a pointless round-trip error.
        f.coeffs = coeffs;
        f
    }

    /// Input bits.
    pub fn input_bits(&self) -> usize {
        self.n
    }

    /// Output dimension.
    pub fn output_dim(&self) -> usize {
        self.k
    }

    /// Whether every value lies in the unit ball `B^k`.
    pub fn is_range_constrained(&self) -> bool {
        self.range_constrained
    }

    /// `f(x)` for a bitmask input.
    pub fn value(&self, x: usize) -> &[f64] {
        &self.table[x * self.k..(x + 1) * self.k]
    }

    /// `f̂(S)` for a bitmask subset.
    pub fn coefficient(&self, s: usize) -> &[f64] {
        &self.coeffs[s * self.k..(s + 1) * self.k]
    }

    /// `‖f̂(S)‖²`.
    fn coeff_norm2(&self, s: usize) -> f64 {
        self.coefficient(s).iter().map(|v| v * v).sum()
    }

    /// `E_x ‖f(x)‖²`.
    pub fn mean_square(&self) -> f64 {
        let size = 1usize << self.n;
        self.table.iter().map(|v| v * v).sum::<f64>() / size as f64
    }

    /// Low-degree influence `Inf_i^{≤m}[f] = Σ_{S ∋ i, |S| ≤ m} ‖f̂(S)‖²`
    /// (`m = None` means no degree cap). Coordinate `i` is 0-based.
    pub fn influence(&self, i: usize, degree_cap: Option<usize>) -> Result<f64> {
        if i >= self.n {
            return Err(Error::VertexOutOfRange { index: i, len: self.n });
        }
        let bit = 1usize << i;
        let cap = degree_cap.unwrap_or(self.n);
        Ok((0..1usize << self.n)
            .filter(|&s| s & bit != 0 && (s.count_ones() as usize) <= cap)
            .map(|s| self.coeff_norm2(s))
            .sum())
    }

    /// `Var[f] = Σ_{S ≠ ∅} ‖f̂(S)‖²`.
    pub fn variance(&self) -> f64 {
        (1..1usize << self.n).map(|s| self.coeff_norm2(s)).sum()
    }

    /// `Σ_{|S| > m} ‖f̂(S)‖²`.
    pub fn high_degree_variance(&self, m: usize) -> f64 {
        (0..1usize << self.n)
            .filter(|s| (s.count_ones() as usize) > m)
            .map(|s| self.coeff_norm2(s))
            .sum()
    }

    /// The noise operator `T_ρ f`: scales `f̂(S)` by `ρ^{|S|}`.
    pub fn noise_operator(&self, rho: f64) -> Result<BooleanVectorFunction> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
        }
        let size = 1usize << self.n;
        let pow: Vec<f64> = (0..=self.n).map(|d| rho.powi(d as i32)).collect();
        let mut coeffs = self.coeffs.clone();
        for s in 0..size {
            let factor = pow[s.count_ones() as usize];
            for v in &mut coeffs[s * self.k..(s + 1) * self.k] {
                *v *= factor;
            }
        }
        Ok(Self::from_coeffs(self.n, self.k, coeffs))
    }

    /// Noise stability `Stab_ρ[f] = Σ_S ρ^{|S|} ‖f̂(S)‖²
    /// = E_{x ~_ρ y} ⟨f(x), f(y)⟩`.
    pub fn stab(&self, rho: f64) -> f64 {
        let pow: Vec<f64> = (0..=self.n).map(|d| rho.powi(d as i32)).collect();
        (0..1usize << self.n)
            .map(|s| pow[s.count_ones() as usize] * self.coeff_norm2(s))
            .sum()
    }

    /// Monte Carlo cross-check of [`Self::stab`] by direct ρ-correlated pair
    /// sampling. Returns `(mean, ci95)`.
    pub fn stab_sampled(&self, rho: f64, pairs: u64, seed: u64) -> Result<(f64, f64)> {
        if !(-1.0..=1.0).contains(&rho) {
            return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
        }
        if pairs == 0 {
            return Err(Error::Domain("need at least one sampled pair".into()));
        }
        let flip_prob = (1.0 - rho) / 2.0;
        let mask = (1usize << self.n) - 1;
        let (chunk_count, sizes) = plan_chunks(pairs);
        let partials = map_chunks(ExecMode::Auto, chunk_count, |c| {
            let mut rng = chunk_rng(seed, 0, c);
            let mut sum = 0.0;
            let mut sumsq = 0.0;
            for _ in 0..sizes[c as usize] {
                let x = rng.gen_range(0..=mask);
                let mut flips = 0usize;
                for j in 0..self.n {
                    if rng.gen::<f64>() < flip_prob {
                        flips |= 1 << j;
                    }
                }
                let y = x ^ flips;
                let dot: f64 =
                    self.value(x).iter().zip(self.value(y)).map(|(a, b)| a * b).sum();
                sum += dot;
                sumsq += dot * dot;
            }
            (sum, sumsq)
        });
        let (sum, sumsq) =
            partials.iter().fold((0.0, 0.0), |(s, q), (cs, cq)| (s + cs, q + cq));
        Ok(mean_ci95(sum, sumsq, pairs))
    }

    /// The odd part `g(x) = (f(x) − f(−x))/2`, which keeps exactly the
    /// odd-`|S|` coefficients.
    pub fn odd_part(&self) -> BooleanVectorFunction {
        let size = 1usize << self.n;
        let all = size - 1;
        let mut table = vec![0.0f64; size * self.k];
        for x in 0..size {
            let fx = self.value(x);
            let fnx = self.value(x ^ all);
            for j in 0..self.k {
                table[x * self.k + j] = 0.5 * (fx[j] - fnx[j]);
            }
        }
        Self::from_flat(self.n, self.k, table)
    }

    /// Coordinates with `Inf_i^{≤m} ≥ δ`. Requires a range-constrained
    /// function, which guarantees at most `m/δ` of them.
    pub fn notable_coordinates(&self, m: usize, delta: f64) -> Result<Vec<usize>> {
        if !(delta > 0.0) {
            return Err(Error::Domain(format!("delta must be positive, got {delta}")));
        }
        if !self.range_constrained {
            return Err(Error::Domain(
                "notable_coordinates requires values in the unit ball".into(),
            ));
        }
        let set: Vec<usize> = (0..self.n)
            .filter(|&i| self.influence(i, Some(m)).expect("index in range") >= delta)
            .collect();
        assert!(
            set.len() as f64 <= m as f64 / delta,
            "influence-bound violation: {} notables > {}/{}",
            set.len(),
            m,
            delta
        );
        Ok(set)
    }

    /// Dictator-test value on the ρ-noisy hypercube (loops kept):
    /// `1/4 − Stab_ρ[f]/4`.
    pub fn hypercube_value(&self, rho: f64) -> f64 {
        0.25 - self.stab(rho) / 4.0
    }

    /// The embedded dictator `f(x) = (x_i, 0, …, 0) ∈ R^k` (0-based `i`).
    pub fn embedded_dictator(n: usize, k: usize, i: usize) -> Result<BooleanVectorFunction> {
        if i >= n {
            return Err(Error::VertexOutOfRange { index: i, len: n });
        }
        let rows: Vec<Vec<f64>> = (0..1usize << n)
            .map(|x| {
                let mut row = vec![0.0; k];
                row[0] = if (x >> i) & 1 == 0 { 1.0 } else { -1.0 };
                row
            })
            .collect();
        Self::from_rows(n, k, &rows)
    }

    /// Scalar majority on an odd number of bits (`+1` wins ties never).
    pub fn majority(n: usize) -> Result<BooleanVectorFunction> {
        if n.is_multiple_of(2) {
            return Err(Error::Domain(format!("majority needs odd n, got {n}")));
        }
        let rows: Vec<Vec<f64>> = (0..1usize << n)
            .map(|x| {
                // Bits set encode −1 inputs.
                let minus = x.count_ones() as usize;
                vec![if 2 * minus < n { 1.0 } else { -1.0 }]
            })
            .collect();
        Self::from_rows(n, 1, &rows)
    }

    /// Embed a scalar function into output coordinate `coord` of `R^k`.
    pub fn embed(f: &BooleanVectorFunction, k: usize, coord: usize) -> Result<BooleanVectorFunction> {
        if f.k != 1 {
            return Err(Error::Domain("embed expects a scalar (k = 1) function".into()));
        }
        if coord >= k {
            return Err(Error::VertexOutOfRange { index: coord, len: k });
        }
        let rows: Vec<Vec<f64>> = (0..1usize << f.n)
            .map(|x| {
                let mut row = vec![0.0; k];
                row[coord] = f.value(x)[0];
                row
            })
            .collect();
        Self::from_rows(f.n, k, &rows)
    }

    /// A random function with every value uniform in the unit ball `B^k`.
    pub fn random_in_ball(n: usize, k: usize, seed: u64) -> Result<BooleanVectorFunction> {
        let mut rng = chunk_rng(seed, 0, 0);
        let rows: Vec<Vec<f64>> = (0..1usize << n)
            .map(|_| {
                let g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
                let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                let radius: f64 = rng.gen::<f64>().powf(1.0 / k as f64);
                g.iter().map(|v| v * radius / norm).collect()
            })
            .collect();
        Self::from_rows(n, k, &rows)
    }
}

/// Proof-constant calculator for the dictatorship-test soundness pipeline.
///
/// Pure arithmetic from the stated bounds — no empirical claim is attached:
/// `gamma` solves `|ρ|·(1 − (1−γ)²) = ε/2` (clamped to `(0, 1]`), `δ` is
/// `(ε²/(36·c_m))^{18/γ}`, and the degree cap is `⌈log₂(1/δ)⌉` (the
/// invariance principle's `d = log(1/τ)`, base 2 here). `δ` and the
/// notable-coordinate cap `m·d/δ` are reported in log10 because the literal
/// values underflow `f64` for realistic inputs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DictatorTestParameters {
    /// Noise-rate perturbation `γ`.
    pub gamma: f64,
    /// `log₁₀ δ` (δ itself is usually far below `f64` range).
    pub log10_delta: f64,
    /// Degree cap `d = ⌈log₂(1/δ)⌉`.
    pub degree: f64,
    /// `log₁₀` of the influence-bound cap `m·d/δ`.
    pub log10_notable_bound: f64,
}

/// Compute [`DictatorTestParameters`] for accuracy `ε`, correlation `ρ`,
/// invariance constant `c_m`, and output dimension `m`.
pub fn dictator_test_parameters(
    epsilon: f64,
    rho: f64,
    c_m: f64,
    m: usize,
) -> Result<DictatorTestParameters> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    if !(c_m > 0.0) || m == 0 {
        return Err(Error::Domain("c_m must be positive and m >= 1".into()));
    }
    let x = if rho == 0.0 { 1.0 } else { (epsilon / (2.0 * rho.abs())).min(1.0) };
    let gamma = 1.0 - (1.0 - x).sqrt();
    let log10_delta = (18.0 / gamma) * (epsilon * epsilon / (36.0 * c_m)).log10();
    let degree = (-log10_delta / 2.0f64.log10()).ceil().max(1.0);
    Ok(DictatorTestParameters {
        gamma,
        log10_delta,
        degree,
        log10_notable_bound: (m as f64 * degree).log10() - log10_delta,
    })
}
