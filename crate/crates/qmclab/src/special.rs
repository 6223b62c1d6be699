//! The exact rounding curve `F*(k, ρ)` and the approximation constants it
//! induces.
//!
//! `F*(k, ρ)` is the expected inner product of two unit vectors after rank-`k`
//! Gaussian projection rounding, as a function of the inner product ρ of the
//! originals:
//!
//! ```text
//! F*(k, ρ) = (2/k) · (Γ((k+1)/2) / Γ(k/2))² · ρ · ₂F₁(1/2, 1/2; k/2 + 1; ρ²)
//! ```
//!
//! Minimizing the induced value ratios over ρ yields the classical constants:
//! `α_GW ≈ 0.8786` (k = 1), `α_2MC ≈ 0.9349`, `α_BOV ≈ 0.9563` (k = 3), and
//! the product-state ratio `α_GP ≈ 0.498`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative series cutoff: stop once a term drops below this times the sum.
const SERIES_RELATIVE_EPS: f64 = 1e-15;

/// Hard cap on hypergeometric series length before giving up.
const SERIES_MAX_TERMS: usize = 1_000_000;

/// Gauss hypergeometric function ₂F₁(a, b; c; z) by direct series summation.
///
/// Supported domain: `0 ≤ z < 1` and `c > 0` (all uses in this crate have
/// `z = ρ²` and `c = k/2 + 1`). Terms are accumulated until one falls below
/// `1e-15` relative to the running sum.
pub fn gauss_2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::Domain(format!("2F1 series requires 0 <= z < 1, got z = {z}")));
    }
    if c <= 0.0 {
        return Err(Error::Domain(format!("2F1 series requires c > 0, got c = {c}")));
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 0..SERIES_MAX_TERMS {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (1.0 + nf)) * z;
        sum += term;
        if term.abs() < SERIES_RELATIVE_EPS * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::NoConvergence {
        what: "2F1 series",
        iterations: SERIES_MAX_TERMS,
        residual: term.abs() / sum.abs(),
    })
}

/// The ratio Γ((k+1)/2) / Γ(k/2) for integer `k ≥ 1`, computed by the exact
/// half-integer recursion `g(1) = 1/√π`, `g(k+1) = (k/2) / g(k)` (no gamma
/// evaluations, so no cancellation).
pub fn gamma_half_ratio(k: usize) -> f64 {
    debug_assert!(k >= 1);
    let mut g = 1.0 / std::f64::consts::PI.sqrt();
    for j in 1..k {
        g = (j as f64 / 2.0) / g;
    }
    g
}

/// The exact rank-`k` rounding curve `F*(k, ρ)`.
///
/// `F*(k, ρ)` is odd in ρ, strictly increasing, and fixes the endpoints
/// `F*(k, ±1) = ±1` (returned directly; the series is only evaluated for
/// `|ρ| < 1`). For `k = 1` it reduces to `(2/π)·asin(ρ)`.
pub fn f_star(k: usize, rho: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("F*(k, rho) requires k >= 1".into()));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("F*(k, rho) requires -1 <= rho <= 1, got {rho}")));
    }
    if rho == 1.0 || rho == -1.0 {
        return Ok(rho);
    }
    let g = gamma_half_ratio(k);
    let hyp = gauss_2f1(0.5, 0.5, k as f64 / 2.0 + 1.0, rho * rho)?;
    Ok((2.0 / k as f64) * g * g * rho * hyp)
}

/// Which value ratio to minimize.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RatioKind {
    /// Rank-`k` Max-Cut ratio `(1/2 − F*(k,ρ)/2) / (1/2 − ρ/2)` on ρ ∈ [−1, 1).
    /// `k = 1` is the Goemans–Williamson curve; `k = 3` gives α_BOV.
    KMc(usize),
    /// Product-state ratio `(1/4 − F*(3,ρ)/4) / (1/4 − 3ρ/4)` on ρ ∈ [−1, 1/3).
    Gp,
}

impl RatioKind {
    /// Exclusive upper end of the ρ domain (the denominator vanishes there).
    fn rho_upper(self) -> f64 {
        match self {
            RatioKind::KMc(_) => 1.0,
            RatioKind::Gp => 1.0 / 3.0,
        }
    }

    /// Short name used in reports ("1MC", "2MC", "3MC", "GP", ...).
    pub fn name(self) -> String {
        match self {
            RatioKind::KMc(k) => format!("{k}MC"),
            RatioKind::Gp => "GP".to_string(),
        }
    }
}

/// Value of the chosen ratio curve at ρ.
pub fn ratio(kind: RatioKind, rho: f64) -> Result<f64> {
    if rho < -1.0 || rho >= kind.rho_upper() {
        return Err(Error::Domain(format!(
            "ratio {} defined on -1 <= rho < {}, got {rho}",
            kind.name(),
            kind.rho_upper()
        )));
    }
    match kind {
        RatioKind::KMc(k) => {
            let f = f_star(k, rho)?;
            Ok((0.5 - 0.5 * f) / (0.5 - 0.5 * rho))
        }
        RatioKind::Gp => {
            let f = f_star(3, rho)?;
            Ok((0.25 - 0.25 * f) / (0.25 - 0.75 * rho))
        }
    }
}

/// One evaluated grid point of a ratio curve.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridPoint {
    /// Original inner product.
    pub rho: f64,
    /// Curve value at `rho`.
    pub ratio: f64,
}

/// Result of minimizing a ratio curve: the approximation constant, its
/// minimizer, and the coarse grid that located it.
#[derive(Debug, Clone, Serialize)]
pub struct RatioReport {
    /// Which curve was minimized.
    pub kind: RatioKind,
    /// Short curve name for display ("1MC", "GP", ...).
    pub name: String,
    /// The approximation constant (minimum ratio value).
    pub alpha: f64,
    /// The minimizing ρ*.
    pub rho_star: f64,
    /// Grid spacing used for the coarse scan.
    pub grid_step: f64,
    /// Width of the final golden-section bracket.
    pub refine_tol: f64,
    /// Coarse grid samples (ρ, ratio), in increasing ρ.
    pub grid: Vec<GridPoint>,
}

/// Minimize a ratio curve: coarse grid scan over the ρ domain followed by
/// golden-section refinement of the best bracket down to `refine_tol` in ρ.
///
/// Defaults used by the CLI: `grid_step = 1e-3`, `refine_tol = 1e-8`.
pub fn find_alpha_rho(kind: RatioKind, grid_step: f64, refine_tol: f64) -> Result<RatioReport> {
    if !(grid_step > 0.0 && grid_step <= 0.1) {
        return Err(Error::Domain(format!("grid_step must be in (0, 0.1], got {grid_step}")));
    }
    if !(refine_tol > 0.0 && refine_tol <= grid_step) {
        return Err(Error::Domain(format!(
            "refine_tol must be in (0, grid_step], got {refine_tol}"
        )));
    }
    if let RatioKind::KMc(0) = kind {
        return Err(Error::Domain("kMC ratio requires k >= 1".into()));
    }

    // Keep strictly inside the open upper end so the denominator stays positive.
    let upper = kind.rho_upper() - 1e-9;
    let mut grid = Vec::new();
    let mut rho = -1.0;
    let mut i = 0u64;
    while rho < upper {
        grid.push(GridPoint { rho, ratio: ratio(kind, rho)? });
        i += 1;
        rho = -1.0 + i as f64 * grid_step;
    }
    if grid.len() < 3 {
        return Err(Error::Domain("grid_step too coarse for the curve domain".into()));
    }

    let best = grid
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.ratio.total_cmp(&b.ratio))
        .map(|(i, _)| i)
        .expect("grid is non-empty");
    let lo = (grid[best].rho - grid_step).max(-1.0);
    let hi = (grid[best].rho + grid_step).min(upper);
    let (rho_star, alpha) = golden_section_min(|r| ratio(kind, r), lo, hi, refine_tol)?;

    Ok(RatioReport {
        kind,
        name: kind.name(),
        alpha,
        rho_star,
        grid_step,
        refine_tol,
        grid,
    })
}

/// Golden-section search for the minimum of a unimodal function on `[lo, hi]`,
/// returning `(argmin, min)` once the bracket is narrower than `tol`.
fn golden_section_min<F>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let xm = 0.5 * (lo + hi);
    Ok((xm, f(xm)?))
}
