//! Gegenbauer polynomials, the ν_d antiderivative family, eigenvalues of
//! spherical noise operators `U_g`, and Monte Carlo verification of the
//! Funk–Hecke eigenrelation and the n-dimensional vector-valued Borell
//! inequality.
//!
//! Throughout, the sphere is `S^{n−1} ⊂ R^n`, the Gegenbauer parameter is
//! `α = (n−2)/2`, and the one-dimensional marginal of the uniform measure
//! has density `(1/Z_n)(1−t²)^{α−1/2}` on `[−1, 1]`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, map_chunks, mean_ci95, plan_chunks, ExecMode};
use crate::special::f_star;

/// Quadrature refinement target: successive panel doublings must agree to
/// this tolerance.
pub const QUADRATURE_TOL: f64 = 1e-9;

/// Nodes per Gauss–Legendre panel.
const PANEL_NODES: usize = 16;

/// Maximum number of panels before the quadrature reports non-convergence.
const MAX_PANELS: usize = 1 << 14;

/// Gegenbauer polynomial `C_d^{(α)}(t)` by the three-term recurrence
/// `d·C_d = 2(d−1+α)·t·C_{d−1} − (d−2+2α)·C_{d−2}`, seeded `C₀ = 1`,
/// `C₁ = 2αt`. Requires `α > −1/2`.
pub fn gegenbauer_c(alpha: f64, d: usize, t: f64) -> Result<f64> {
    if !(alpha > -0.5) {
        return Err(Error::Domain(format!("Gegenbauer parameter must exceed -1/2, got {alpha}")));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("Gegenbauer argument must lie in [-1, 1], got {t}")));
    }
    if d == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * alpha * t;
    for k in 2..=d {
        let kf = k as f64;
        let next = (2.0 * (kf - 1.0 + alpha) * t * cur - (kf - 2.0 + 2.0 * alpha) * prev) / kf;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `C_d^{(α)}(1) = (2α)_d / d!`, computed by the stable product recurrence.
pub fn gegenbauer_at_one(alpha: f64, d: usize) -> Result<f64> {
    if !(alpha > -0.5) {
        return Err(Error::Domain(format!("Gegenbauer parameter must exceed -1/2, got {alpha}")));
    }
    let mut v = 1.0;
    for k in 1..=d {
        v *= (2.0 * alpha + k as f64 - 1.0) / k as f64;
    }
    Ok(v)
}

/// The degree-`d` zonal polynomial for `S^{n−1}`: Gegenbauer with
/// `α = (n−2)/2` for `n ≥ 3`, Chebyshev `cos(d·arccos t)` for `n = 2`.
pub fn zonal(n: usize, d: usize, t: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension n must be >= 2, got {n}")));
    }
    if n == 2 {
        if !(-1.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("Chebyshev argument must lie in [-1, 1], got {t}")));
        }
        Ok((d as f64 * t.acos()).cos())
    } else {
        gegenbauer_c((n as f64 - 2.0) / 2.0, d, t)
    }
}

/// `zonal(n, d, ·)` evaluated at `t = 1`.
pub fn zonal_at_one(n: usize, d: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Domain(format!("sphere dimension n must be >= 2, got {n}")));
    }
    if n == 2 {
        Ok(1.0)
    } else {
        gegenbauer_at_one((n as f64 - 2.0) / 2.0, d)
    }
}

/// The key-lemma antiderivative
/// `ν_d(t) = ∫_{−1}^t (C_d(w)/C_d(1)) (1−w²)^{α−1/2} dw` in closed form:
/// `−2α(1−t²)^{α+1/2} C_{d−1}^{(α+1)}(t) / (d(d+2α) C_d^{(α)}(1))`.
/// Requires `d ≥ 1` and `α > 0`.
pub fn nu_d(alpha: f64, d: usize, t: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::Domain("nu_d requires d >= 1".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!(
            "the closed form for nu_d requires alpha > 0 (n >= 3), got {alpha}"
        )));
    }
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("nu_d argument must lie in [-1, 1], got {t}")));
    }
    let df = d as f64;
    let up = gegenbauer_c(alpha + 1.0, d - 1, t)?;
    let norm = gegenbauer_at_one(alpha, d)?;
    Ok(-2.0 * alpha * (1.0 - t * t).powf(alpha + 0.5) * up / (df * (df + 2.0 * alpha) * norm))
}

/// Kernel shape for the spherical noise operator `U_g`.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelForm {
    /// `g = 1` on `[−1, t0]`, `0` above.
    IndicatorBelow {
        /// Cut point in `(−1, 1]`.
        t0: f64,
    },
    /// The conditioned Gaussian kernel `g(t) ∝ exp(ρ r s t / (1−ρ²))`
    /// (normalization is irrelevant: eigenvalues are computed as ratios).
    ConditionedGaussian {
        /// Correlation in `(−1, 1)`.
        rho: f64,
        /// First radius, `≥ 0`.
        r: f64,
        /// Second radius, `≥ 0`.
        s: f64,
    },
    /// Nonnegative values on a strictly increasing grid spanning `[−1, 1]`,
    /// evaluated by linear interpolation.
    Tabulated {
        /// Grid abscissae.
        ts: Vec<f64>,
        /// Kernel values at the abscissae.
        values: Vec<f64>,
    },
}

/// A kernel together with the ambient sphere dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    /// Ambient dimension of `S^{n−1}` (so `α = (n−2)/2`).
    pub n: usize,
    /// Kernel shape.
    pub form: KernelForm,
}

impl KernelSpec {
    /// Validate and build a kernel spec.
    pub fn new(n: usize, form: KernelForm) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("sphere dimension n must be >= 2, got {n}")));
        }
        match &form {
            KernelForm::IndicatorBelow { t0 } => {
                if !(*t0 > -1.0 && *t0 <= 1.0) {
                    return Err(Error::Domain(format!(
                        "indicator cut must lie in (-1, 1], got {t0}"
                    )));
                }
            }
            KernelForm::ConditionedGaussian { rho, r, s } => {
                if !(rho.abs() < 1.0) {
                    return Err(Error::Domain(format!(
                        "conditioned kernel needs |rho| < 1, got {rho}"
                    )));
                }
                if !(*r >= 0.0 && *s >= 0.0) {
                    return Err(Error::Domain("radii r, s must be nonnegative".into()));
                }
            }
            KernelForm::Tabulated { ts, values } => {
                if ts.len() < 2 || ts.len() != values.len() {
                    return Err(Error::Domain(
                        "tabulated kernel needs matching grids of length >= 2".into(),
                    ));
                }
                if ts.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Domain("tabulated grid must be strictly increasing".into()));
                }
                if ts[0] > -1.0 + 1e-12 || *ts.last().unwrap() < 1.0 - 1e-12 {
                    return Err(Error::Domain("tabulated grid must span [-1, 1]".into()));
                }
                if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(Error::Domain(
                        "tabulated kernel values must be finite and nonnegative".into(),
                    ));
                }
            }
        }
        Ok(KernelSpec { n, form })
    }

    /// Kernel value at `t` (the indicator's cut is handled by domain
    /// clipping during quadrature, so it evaluates to 1 here).
    fn g(&self, t: f64) -> f64 {
        match &self.form {
            KernelForm::IndicatorBelow { .. } => 1.0,
            KernelForm::ConditionedGaussian { rho, r, s } => {
                (rho * r * s * t / (1.0 - rho * rho)).exp()
            }
            KernelForm::Tabulated { ts, values } => {
                let t = t.clamp(ts[0], *ts.last().unwrap());
                let idx = ts.partition_point(|&x| x < t).clamp(1, ts.len() - 1);
                let (a, b) = (ts[idx - 1], ts[idx]);
                let frac = if b > a { (t - a) / (b - a) } else { 0.0 };
                values[idx - 1] + frac * (values[idx] - values[idx - 1])
            }
        }
    }

    /// Upper integration limit in `t` (below which `g` may be nonzero).
    fn t_upper(&self) -> f64 {
        match &self.form {
            KernelForm::IndicatorBelow { t0 } => *t0,
            _ => 1.0,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]` by Newton iteration.
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0f64; m];
    let mut weights = vec![0.0f64; m];
    for i in 0..m.div_ceil(2) {
        let mut x =
            (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_m and P_{m-1} by recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre on `[a, b]` with panel doubling until two
/// successive levels agree to [`QUADRATURE_TOL`] (relative to `max(1, |I|)`).
fn integrate_adaptive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, initial_panels: usize) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let (nodes, weights) = gauss_legendre(PANEL_NODES);
    let eval = |panels: usize| -> f64 {
        let h = (b - a) / panels as f64;
        let mut total = 0.0;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            let mid = lo + h / 2.0;
            let half = h / 2.0;
            let mut acc = 0.0;
            for (x, w) in nodes.iter().zip(&weights) {
                acc += w * f(mid + half * x);
            }
            total += acc * half;
        }
        total
    };
    let mut panels = initial_panels.max(1);
    let mut prev = eval(panels);
    while panels <= MAX_PANELS {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() <= QUADRATURE_TOL * cur.abs().max(1.0) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::NoConvergence {
        what: "panel-doubling quadrature",
        iterations: MAX_PANELS,
        residual: prev,
    })
}

/// `∫ ratio_d(t) g(t) dt` over the kernel's support, where
/// `ratio_d(t) = (C_d(t)/C_d(1)) (1−t²)^{α−1/2}`.
///
/// Always computed in the substituted variable `t = cos θ`, which turns the
/// integrand into `(C_d(cos θ)/C_d(1)) (sin θ)^{2α} g(cos θ)` — smooth at
/// the endpoints for every `n ≥ 2`, including the `α < 1/2` densities where
/// the `t`-form integrand blows up.
fn ratio_integral(spec: &KernelSpec, d: usize, initial_panels: usize) -> Result<f64> {
    let n = spec.n;
    let alpha = (n as f64 - 2.0) / 2.0;
    let norm = zonal_at_one(n, d)?;
    // t in [-1, t_upper] maps to theta in [acos(t_upper), pi].
    let theta_lo = spec.t_upper().acos();
    let theta_hi = std::f64::consts::PI;
    let f = |theta: f64| -> f64 {
        let t = theta.cos();
        let zon = zonal(n, d, t.clamp(-1.0, 1.0)).unwrap_or(0.0);
        let sin_pow = if alpha == 0.0 { 1.0 } else { theta.sin().powf(2.0 * alpha) };
        zon / norm * sin_pow * spec.g(t)
    };
    integrate_adaptive(f, theta_lo, theta_hi, initial_panels)
}

/// Quadrature oracle for `ν_d`: `∫_{−1}^{t0} ratio_d(t) dt` on `S^{n−1}`.
pub fn zonal_integral_below(n: usize, d: usize, t0: f64, quad_points: usize) -> Result<f64> {
    let spec = KernelSpec::new(n, KernelForm::IndicatorBelow { t0 })?;
    ratio_integral(&spec, d, initial_panels(quad_points))
}

fn initial_panels(quad_points: usize) -> usize {
    (quad_points / PANEL_NODES).max(4)
}

/// Eigenvalue `λ_d` of `U_g` on `S^{n−1}`:
/// `λ_d = ∫ ratio_d g dt / ∫ ratio_0 g dt`.
///
/// The denominator is the same quadrature at `d = 0`, so any kernel
/// normalization cancels and `λ₀ = 1` holds exactly by construction.
/// `quad_points` sets the initial node budget (`≥ 64`); panels then double
/// until the [`QUADRATURE_TOL`] target is met.
pub fn kernel_eigenvalue(spec: &KernelSpec, d: usize, quad_points: usize) -> Result<f64> {
    if quad_points < 64 {
        return Err(Error::Domain(format!("quad_points must be >= 64, got {quad_points}")));
    }
    let panels = initial_panels(quad_points);
    let den = ratio_integral(spec, 0, panels)?;
    if !den.is_finite() || den <= 0.0 {
        return Err(Error::Domain(format!(
            "kernel has non-positive or divergent mass {den}; not a usable density"
        )));
    }
    let num = ratio_integral(spec, d, panels)?;
    Ok(num / den)
}

/// Result of the key-Gegenbauer-lemma grid check.
#[derive(Debug, Clone, Serialize)]
pub struct KeyLemmaReport {
    /// Gegenbauer parameter.
    pub alpha: f64,
    /// Largest degree checked.
    pub d_max: usize,
    /// Grid spacing.
    pub grid_step: f64,
    /// Minimum of `−ν₁(t) − |ν_d(t)|` over the grid and `2 ≤ d ≤ d_max`.
    pub min_margin: f64,
    /// Degree attaining the minimum margin.
    pub worst_d: usize,
    /// Grid point attaining the minimum margin.
    pub worst_t: f64,
    /// Maximum of `ν₁` over the grid (the lemma needs `≤ 0`).
    pub nu1_max: f64,
    /// Whether every inequality held strictly.
    pub pass: bool,
}

/// Grid check of the key Gegenbauer lemma: `ν₁(t) ≤ 0` and
/// `|ν_d(t)| < −ν₁(t)` for `2 ≤ d ≤ d_max` over `t ∈ (−1, 1)`.
pub fn check_key_lemma(alpha: f64, d_max: usize, grid_step: f64) -> Result<KeyLemmaReport> {
    if d_max < 2 {
        return Err(Error::Domain(format!("d_max must be >= 2, got {d_max}")));
    }
    if !(grid_step > 0.0 && grid_step < 1.0) {
        return Err(Error::Domain(format!("grid_step must lie in (0, 1), got {grid_step}")));
    }
    let mut min_margin = f64::INFINITY;
    let mut worst = (2usize, 0.0f64);
    let mut nu1_max = f64::NEG_INFINITY;
    let steps = (2.0 / grid_step).ceil() as usize;
    for i in 1..steps {
        let t = -1.0 + i as f64 * grid_step;
        if t >= 1.0 {
            break;
        }
        let nu1 = nu_d(alpha, 1, t)?;
        nu1_max = nu1_max.max(nu1);
        for d in 2..=d_max {
            let margin = -nu1 - nu_d(alpha, d, t)?.abs();
            if margin < min_margin {
                min_margin = margin;
                worst = (d, t);
            }
        }
    }
    Ok(KeyLemmaReport {
        alpha,
        d_max,
        grid_step,
        min_margin,
        worst_d: worst.0,
        worst_t: worst.1,
        nu1_max,
        pass: min_margin > 0.0 && nu1_max <= 0.0,
    })
}

/// Result of a Funk–Hecke Monte Carlo spot check.
#[derive(Debug, Clone, Serialize)]
pub struct FunkHeckeReport {
    /// Sphere dimension.
    pub n: usize,
    /// Harmonic degree tested.
    pub d: usize,
    /// Quadrature eigenvalue.
    pub lambda_d: f64,
    /// Monte Carlo estimate of `E[g·C_d] − λ_d C_d(1) E[g]` (should be 0).
    pub discrepancy: f64,
    /// 95% CI radius of the discrepancy.
    pub ci95: f64,
    /// Samples used.
    pub mc_samples: u64,
    /// Pass at 4 standard errors.
    pub pass: bool,
}

/// Monte Carlo check of the Funk–Hecke eigenrelation: with
/// `h(u) = C_d(u₁)`, verify `(U_g h)(e₁) = λ_d h(e₁)` by sampling `v`
/// uniformly on `S^{n−1}` and averaging
/// `g(v₁)·C_d(v₁) − λ_d·C_d(1)·g(v₁)` (expected 0, both sides normalized
/// by the same kernel mass).
pub fn funk_hecke_spot_check(
    spec: &KernelSpec,
    d: usize,
    mc_samples: u64,
    seed: u64,
) -> Result<FunkHeckeReport> {
    if !(spec.n == 3 || spec.n == 4) {
        return Err(Error::Domain(format!(
            "spot check supports n in {{3, 4}}, got {}",
            spec.n
        )));
    }
    if d > 3 {
        return Err(Error::Domain(format!("spot check supports d <= 3, got {d}")));
    }
    if mc_samples < 1_000 {
        return Err(Error::Domain("need at least 1000 samples".into()));
    }
    let lambda = kernel_eigenvalue(spec, d, 256)?;
    let n = spec.n;
    let cd1 = zonal_at_one(n, d)?;
    let t_cut = spec.t_upper();
    let (chunk_count, sizes) = plan_chunks(mc_samples);
    let partials = map_chunks(ExecMode::Auto, chunk_count, |c| {
        let mut rng = chunk_rng(seed, 0, c);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..sizes[c as usize] {
            // Uniform on the sphere: only the first coordinate matters.
            let v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let t: f64 = v[0] / norm;
            let g = if t <= t_cut { spec.g(t) } else { 0.0 };
            let cd = zonal(n, d, t.clamp(-1.0, 1.0)).expect("t in range");
            let x = g * cd - lambda * cd1 * g;
            sum += x;
            sumsq += x * x;
        }
        (sum, sumsq)
    });
    let (sum, sumsq) = partials.iter().fold((0.0, 0.0), |(s, q), (a, b)| (s + a, q + b));
    let (discrepancy, ci95) = mean_ci95(sum, sumsq, mc_samples);
    Ok(FunkHeckeReport {
        n,
        d,
        lambda_d: lambda,
        discrepancy,
        ci95,
        mc_samples,
        pass: discrepancy.abs() <= 4.0 * ci95 / 1.96,
    })
}

/// A candidate function `R^n → B^n` from the fixed library for the Borell
/// check.
#[derive(Debug, Clone, PartialEq)]
pub enum BorellCandidate {
    /// The conjectured optimizer `f(x) = x/‖x‖`.
    FOpt,
    /// `M · x/‖x‖` for a seeded random orthogonal `M` (must tie `FOpt`).
    Rotated {
        /// Seed for the orthogonal matrix.
        seed: u64,
    },
    /// A constant map to a point of the unit ball.
    Constant {
        /// The constant value (`‖c‖ ≤ 1`).
        value: Vec<f64>,
    },
    /// `sign(x_coord) · e_coord`.
    CoordinateSign {
        /// Coordinate index (0-based).
        coord: usize,
    },
    /// `min(‖x‖/scale, 1) · x/‖x‖`.
    RadialModulated {
        /// Radius scale (`> 0`).
        scale: f64,
    },
}

impl BorellCandidate {
    fn name(&self) -> String {
        match self {
            BorellCandidate::FOpt => "f_opt".into(),
            BorellCandidate::Rotated { seed } => format!("rotated[{seed}]"),
            BorellCandidate::Constant { .. } => "constant".into(),
            BorellCandidate::CoordinateSign { coord } => format!("coordinate_sign[{coord}]"),
            BorellCandidate::RadialModulated { scale } => format!("radial_modulated[{scale}]"),
        }
    }
}

/// A compiled candidate ready for evaluation.
enum CompiledCandidate {
    FOpt,
    Rotated(DMatrix<f64>),
    Constant(Vec<f64>),
    CoordinateSign(usize),
    RadialModulated(f64),
}

impl CompiledCandidate {
    fn eval(&self, x: &[f64], out: &mut [f64]) {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        match self {
            CompiledCandidate::FOpt => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v / norm;
                }
            }
            CompiledCandidate::Rotated(m) => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = (0..x.len()).map(|j| m[(i, j)] * x[j] / norm).sum();
                }
            }
            CompiledCandidate::Constant(c) => out.copy_from_slice(c),
            CompiledCandidate::CoordinateSign(i) => {
                out.fill(0.0);
                out[*i] = if x[*i] >= 0.0 { 1.0 } else { -1.0 };
            }
            CompiledCandidate::RadialModulated(scale) => {
                let factor = (norm / scale).min(1.0) / norm;
                for (o, v) in out.iter_mut().zip(x) {
                    *o = v * factor;
                }
            }
        }
    }
}

/// Seeded random orthogonal matrix via QR of a Gaussian matrix.
fn random_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = chunk_rng(seed, 0, 0);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Per-candidate outcome of the Borell check.
#[derive(Debug, Clone, Serialize)]
pub struct BorellCandidateResult {
    /// Candidate name.
    pub name: String,
    /// Monte Carlo `Stab_ρ[f]`.
    pub stab: f64,
    /// 95% CI radius of the stability estimate.
    pub ci95: f64,
    /// Paired mean of `⟨f(x),f(y)⟩ − ⟨f_opt(x),f_opt(y)⟩`.
    pub excess: f64,
    /// 95% CI radius of the paired excess.
    pub excess_ci95: f64,
    /// `excess ≥ −4·stderr(excess)`.
    pub pass: bool,
}

/// Result of the n-dimensional Borell inequality Monte Carlo check.
#[derive(Debug, Clone, Serialize)]
pub struct BorellReport {
    /// Ambient dimension.
    pub n: usize,
    /// Correlation (negative).
    pub rho: f64,
    /// Samples per candidate.
    pub mc_samples: u64,
    /// Chunk count (determinism contract).
    pub chunk_count: u64,
    /// Monte Carlo stability of `f_opt`.
    pub f_opt_stab: f64,
    /// 95% CI radius for `f_opt`.
    pub f_opt_ci95: f64,
    /// The exact curve value `F*(n, ρ)` that `f_opt` attains.
    pub f_star_value: f64,
    /// Per-candidate outcomes.
    pub candidates: Vec<BorellCandidateResult>,
    /// All candidates passed.
    pub all_pass: bool,
}

/// Monte Carlo check of the n-dimensional vector-valued Borell inequality:
/// every ball-valued candidate has `Stab_ρ[f] ≥ Stab_ρ[f_opt]` for
/// `ρ ∈ (−1, 0)`, with `f_opt(x) = x/‖x‖` attaining `F*(n, ρ)`.
///
/// Candidates are compared to `f_opt` on the *same* correlated Gaussian
/// pairs, so the pass criterion uses the tight paired standard error.
pub fn borell_nk_check(
    n: usize,
    rho: f64,
    candidates: &[BorellCandidate],
    mc_samples: u64,
    seed: u64,
) -> Result<BorellReport> {
    if n < 2 {
        return Err(Error::Domain(format!("dimension n must be >= 2, got {n}")));
    }
    if !(rho > -1.0 && rho < 0.0) {
        return Err(Error::Domain(format!("rho must lie in (-1, 0), got {rho}")));
    }
    if mc_samples < 1_000 {
        return Err(Error::Domain("need at least 1000 samples".into()));
    }
    let compiled: Vec<CompiledCandidate> = candidates
        .iter()
        .map(|c| {
            Ok(match c {
                BorellCandidate::FOpt => CompiledCandidate::FOpt,
                BorellCandidate::Rotated { seed } => {
                    CompiledCandidate::Rotated(random_orthogonal(n, *seed))
                }
                BorellCandidate::Constant { value } => {
                    if value.len() != n {
                        return Err(Error::Domain(format!(
                            "constant candidate has dimension {}, expected {n}",
                            value.len()
                        )));
                    }
                    let norm = value.iter().map(|v| v * v).sum::<f64>().sqrt();
                    if norm > 1.0 + 1e-12 {
                        return Err(Error::Domain(format!(
                            "constant candidate has norm {norm} > 1"
                        )));
                    }
                    CompiledCandidate::Constant(value.clone())
                }
                BorellCandidate::CoordinateSign { coord } => {
                    if *coord >= n {
                        return Err(Error::VertexOutOfRange { index: *coord, len: n });
                    }
                    CompiledCandidate::CoordinateSign(*coord)
                }
                BorellCandidate::RadialModulated { scale } => {
                    if !(*scale > 0.0) {
                        return Err(Error::Domain(format!(
                            "radial scale must be positive, got {scale}"
                        )));
                    }
                    CompiledCandidate::RadialModulated(*scale)
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tail = (1.0 - rho * rho).sqrt();
    let k = compiled.len();
    let (chunk_count, sizes) = plan_chunks(mc_samples);
    // Per chunk: (opt_sum, opt_sumsq, per-candidate [stab_sum, stab_sumsq,
    // diff_sum, diff_sumsq]).
    let partials = map_chunks(ExecMode::Auto, chunk_count, |c| {
        let mut rng = chunk_rng(seed, 0, c);
        let mut opt = (0.0f64, 0.0f64);
        let mut acc = vec![[0.0f64; 4]; k];
        let mut x = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut fx = vec![0.0f64; n];
        let mut fy = vec![0.0f64; n];
        let opt_fn = CompiledCandidate::FOpt;
        for _ in 0..sizes[c as usize] {
            for i in 0..n {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                x[i] = g1;
                y[i] = rho * g1 + tail * g2;
            }
            opt_fn.eval(&x, &mut fx);
            opt_fn.eval(&y, &mut fy);
            let base: f64 = fx.iter().zip(&fy).map(|(a, b)| a * b).sum();
            opt.0 += base;
            opt.1 += base * base;
            for (cand, a) in compiled.iter().zip(acc.iter_mut()) {
                cand.eval(&x, &mut fx);
                cand.eval(&y, &mut fy);
                let dot: f64 = fx.iter().zip(&fy).map(|(p, q)| p * q).sum();
                let diff = dot - base;
                a[0] += dot;
                a[1] += dot * dot;
                a[2] += diff;
                a[3] += diff * diff;
            }
        }
        (opt, acc)
    });

    let mut opt = (0.0f64, 0.0f64);
    let mut acc = vec![[0.0f64; 4]; k];
    for (o, a) in &partials {
        opt.0 += o.0;
        opt.1 += o.1;
        for (total, part) in acc.iter_mut().zip(a) {
            for i in 0..4 {
                total[i] += part[i];
            }
        }
    }
    let (f_opt_stab, f_opt_ci95) = mean_ci95(opt.0, opt.1, mc_samples);
    let mut results = Vec::with_capacity(k);
    let mut all_pass = true;
    for (cand, a) in candidates.iter().zip(&acc) {
        let (stab, ci95) = mean_ci95(a[0], a[1], mc_samples);
        let (excess, excess_ci95) = mean_ci95(a[2], a[3], mc_samples);
        // The absolute floor covers candidates that tie f_opt exactly
        // (e.g. rotations), where the paired variance collapses to
        // floating-point roundoff.
        let pass = excess >= -(4.0 * excess_ci95 / 1.96 + 1e-12);
        all_pass &= pass;
        results.push(BorellCandidateResult {
            name: cand.name(),
            stab,
            ci95,
            excess,
            excess_ci95,
            pass,
        });
    }
    Ok(BorellReport {
        n,
        rho,
        mc_samples,
        chunk_count,
        f_opt_stab,
        f_opt_ci95,
        f_star_value: f_star(n, rho)?,
        candidates: results,
        all_pass,
    })
}

/// The default candidate library used by the CLI and acceptance checks.
pub fn default_borell_candidates(n: usize) -> Vec<BorellCandidate> {
    let mut constant = vec![0.0; n];
    constant[0] = 0.6;
    vec![
        BorellCandidate::FOpt,
        BorellCandidate::Rotated { seed: 1 },
        BorellCandidate::Constant { value: constant },
        BorellCandidate::CoordinateSign { coord: 0 },
        BorellCandidate::RadialModulated { scale: (n as f64).sqrt() },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gegenbauer_low_degree_oracles() {
        assert_eq!(gegenbauer_c(0.7, 0, -0.4).unwrap(), 1.0);
        assert!((gegenbauer_c(0.5, 1, 0.3).unwrap() - 0.3).abs() < 1e-15);
        // (2α)_2/2! at α = 1/2 is 1·2/2 = 1.
        assert!((gegenbauer_c(0.5, 2, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gegenbauer_at_one(0.5, 2).unwrap() - 1.0).abs() < 1e-15);
        // α = 1/2 gives Legendre polynomials: P2(t) = (3t² − 1)/2.
        let p2 = gegenbauer_c(0.5, 2, 0.4).unwrap();
        assert!((p2 - (3.0 * 0.16 - 1.0) / 2.0).abs() < 1e-14);
        assert!(gegenbauer_c(-0.5, 1, 0.0).is_err());
        assert!(gegenbauer_c(0.5, 1, 1.5).is_err());
    }

    #[test]
    fn gegenbauer_is_bounded_by_value_at_one() {
        for alpha in [0.5, 1.0, 2.5] {
            for d in 1..=8usize {
                let at_one = gegenbauer_at_one(alpha, d).unwrap();
                for i in 1..100 {
                    let t = -1.0 + 2.0 * i as f64 / 100.0;
                    if t >= 1.0 {
                        break;
                    }
                    let v = gegenbauer_c(alpha, d, t).unwrap().abs();
                    assert!(v < at_one, "alpha={alpha} d={d} t={t}: {v} >= {at_one}");
                }
            }
        }
    }

    #[test]
    fn chebyshev_branch_for_n2() {
        for d in 0..=6usize {
            assert!((zonal_at_one(2, d).unwrap() - 1.0).abs() < 1e-15);
            for i in 0..=20 {
                let theta = std::f64::consts::PI * i as f64 / 20.0;
                let v = zonal(2, d, theta.cos()).unwrap();
                assert!((v - (d as f64 * theta).cos()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn nu_oracles() {
        // ν₁(0) at α = 1/2 is −1/(1+2α)·(1−0)^{α+1/2} = −1/2.
        assert!((nu_d(0.5, 1, 0.0).unwrap() + 0.5).abs() < 1e-15);
        for alpha in [0.5, 1.0] {
            for d in 1..=6 {
                assert_eq!(nu_d(alpha, d, 1.0).unwrap(), 0.0);
                assert_eq!(nu_d(alpha, d, -1.0).unwrap(), 0.0);
            }
        }
        // C₁^{(3/2)}(0) = 0 ⇒ ν₂(0) = 0 at α = 1/2.
        assert_eq!(nu_d(0.5, 2, 0.0).unwrap(), 0.0);
        assert!(nu_d(0.5, 0, 0.0).is_err());
        assert!(nu_d(0.0, 1, 0.0).is_err());
    }

    #[test]
    fn nu_closed_form_matches_quadrature() {
        for n in [3usize, 4, 6] {
            let alpha = (n as f64 - 2.0) / 2.0;
            for d in 1..=5 {
                for t0 in [-0.7, -0.2, 0.5, 0.9] {
                    let exact = nu_d(alpha, d, t0).unwrap();
                    let quad = zonal_integral_below(n, d, t0, 256).unwrap();
                    assert!(
                        (exact - quad).abs() < 1e-8,
                        "n={n} d={d} t0={t0}: closed {exact} vs quad {quad}"
                    );
                }
            }
        }
    }

    #[test]
    fn key_lemma_grid_check_passes() {
        for alpha in [0.5, 1.0] {
            let report = check_key_lemma(alpha, 10, 1e-3).unwrap();
            assert!(report.pass, "alpha={alpha}: margin {}", report.min_margin);
            assert!(report.min_margin > 0.0);
            assert!(report.nu1_max <= 0.0);
        }
        assert!(check_key_lemma(0.5, 1, 1e-2).is_err());
    }

    #[test]
    fn density_kernels_have_unit_lambda_zero() {
        let spec = KernelSpec::new(
            3,
            KernelForm::ConditionedGaussian { rho: -0.5, r: 1.0, s: 1.0 },
        )
        .unwrap();
        let lambda0 = kernel_eigenvalue(&spec, 0, 256).unwrap();
        assert!((lambda0 - 1.0).abs() < 1e-10);

        let ind = KernelSpec::new(4, KernelForm::IndicatorBelow { t0: 0.2 }).unwrap();
        assert!((kernel_eigenvalue(&ind, 0, 256).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn indicator_eigenvalues_match_nu_closed_form() {
        let n = 3;
        let alpha = 0.5;
        let t0 = 0.3;
        let spec = KernelSpec::new(n, KernelForm::IndicatorBelow { t0 }).unwrap();
        let den = zonal_integral_below(n, 0, t0, 256).unwrap();
        for d in 1..=6 {
            let lam = kernel_eigenvalue(&spec, d, 256).unwrap();
            let expect = nu_d(alpha, d, t0).unwrap() / den;
            assert!((lam - expect).abs() < 1e-8, "d={d}: {lam} vs {expect}");
        }
    }

    #[test]
    fn conditioned_kernel_eigenvalue_ordering() {
        // Non-increasing kernel (rho < 0): lambda_1 <= 0 dominates.
        let spec = KernelSpec::new(
            3,
            KernelForm::ConditionedGaussian { rho: -0.5, r: 1.0, s: 1.0 },
        )
        .unwrap();
        let l1 = kernel_eigenvalue(&spec, 1, 256).unwrap();
        assert!(l1 < 0.0, "lambda_1 = {l1}");
        for d in 2..=8 {
            let ld = kernel_eigenvalue(&spec, d, 256).unwrap();
            assert!(ld.abs() < -l1, "d={d}: |{ld}| >= {}", -l1);
        }

        // Non-decreasing kernel (rho > 0): lambda_1 >= 0 dominates.
        let pos = KernelSpec::new(
            3,
            KernelForm::ConditionedGaussian { rho: 0.5, r: 1.0, s: 1.0 },
        )
        .unwrap();
        let p1 = kernel_eigenvalue(&pos, 1, 256).unwrap();
        assert!(p1 > 0.0);
        for d in 2..=8 {
            let pd = kernel_eigenvalue(&pos, d, 256).unwrap();
            assert!(pd.abs() < p1, "d={d}: |{pd}| >= {p1}");
        }

        // n=2 Chebyshev analogue still behaves like a density with
        // dominant first eigenvalue.
        let flat = KernelSpec::new(
            2,
            KernelForm::ConditionedGaussian { rho: -0.6, r: 1.2, s: 0.8 },
        )
        .unwrap();
        assert!((kernel_eigenvalue(&flat, 0, 256).unwrap() - 1.0).abs() < 1e-10);
        assert!(kernel_eigenvalue(&flat, 1, 256).unwrap() < 0.0);
    }

    #[test]
    fn tabulated_kernel_interpolates() {
        // Tabulate the conditioned kernel on a fine grid; eigenvalues track
        // the analytic form closely.
        let analytic = KernelSpec::new(
            3,
            KernelForm::ConditionedGaussian { rho: -0.4, r: 1.0, s: 1.0 },
        )
        .unwrap();
        let m = 4001;
        let ts: Vec<f64> = (0..m).map(|i| -1.0 + 2.0 * i as f64 / (m - 1) as f64).collect();
        let values: Vec<f64> = ts.iter().map(|&t| analytic.g(t)).collect();
        let tab = KernelSpec::new(3, KernelForm::Tabulated { ts, values }).unwrap();
        for d in 0..=3 {
            let a = kernel_eigenvalue(&analytic, d, 256).unwrap();
            let b = kernel_eigenvalue(&tab, d, 256).unwrap();
            assert!((a - b).abs() < 1e-6, "d={d}: {a} vs {b}");
        }
        // Bad tabulations are rejected.
        assert!(KernelSpec::new(
            3,
            KernelForm::Tabulated { ts: vec![-1.0, 0.5], values: vec![1.0, -0.2] }
        )
        .is_err());
        assert!(KernelSpec::new(
            3,
            KernelForm::Tabulated { ts: vec![-0.5, 1.0], values: vec![1.0, 1.0] }
        )
        .is_err());
    }

    #[test]
    fn funk_hecke_checks_pass() {
        let density = KernelSpec::new(
            3,
            KernelForm::ConditionedGaussian { rho: -0.5, r: 1.0, s: 1.0 },
        )
        .unwrap();
        for d in 0..=2 {
            let report = funk_hecke_spot_check(&density, d, 400_000, 3).unwrap();
            assert!(
                report.pass,
                "conditioned d={d}: discrepancy {} ci {}",
                report.discrepancy, report.ci95
            );
        }
        let ind = KernelSpec::new(3, KernelForm::IndicatorBelow { t0: 0.1 }).unwrap();
        let report = funk_hecke_spot_check(&ind, 2, 400_000, 9).unwrap();
        assert!(report.pass, "indicator: {} ci {}", report.discrepancy, report.ci95);

        assert!(funk_hecke_spot_check(&ind, 4, 10_000, 0).is_err());
        let big = KernelSpec::new(6, KernelForm::IndicatorBelow { t0: 0.1 }).unwrap();
        assert!(funk_hecke_spot_check(&big, 1, 10_000, 0).is_err());
    }

    #[test]
    fn borell_check_passes_for_candidate_library() {
        let rho = -0.584;
        let report =
            borell_nk_check(3, rho, &default_borell_candidates(3), 200_000, 11).unwrap();
        assert!(report.all_pass, "report: {report:?}");
        // f_opt attains the curve.
        assert!(
            (report.f_opt_stab - report.f_star_value).abs() < 4.0 * report.f_opt_ci95 / 1.96,
            "stab {} vs curve {}",
            report.f_opt_stab,
            report.f_star_value
        );
        assert!((report.f_star_value + 0.5148).abs() < 2e-3);
        // The rotation ties f_opt exactly in expectation (up to roundoff).
        let rotated = &report.candidates[1];
        assert!(rotated.excess.abs() <= 4.0 * rotated.excess_ci95 / 1.96 + 1e-12);
        // The constant map has positive stability, far above the curve.
        let constant = &report.candidates[2];
        assert!(constant.stab > 0.0);

        assert!(borell_nk_check(3, 0.5, &default_borell_candidates(3), 10_000, 0).is_err());
        assert!(borell_nk_check(
            3,
            -0.5,
            &[BorellCandidate::Constant { value: vec![2.0, 0.0, 0.0] }],
            10_000,
            0
        )
        .is_err());
    }

    #[test]
    fn quadrature_handles_all_dimensions() {
        // Odd n gives fractional alpha with an endpoint-singular t-form
        // integrand; the cos-substitution keeps it smooth.
        for n in [2usize, 3, 5, 8] {
            let spec = KernelSpec::new(
                n,
                KernelForm::ConditionedGaussian { rho: -0.3, r: 1.0, s: 1.0 },
            )
            .unwrap();
            let l0 = kernel_eigenvalue(&spec, 0, 256).unwrap();
            assert!((l0 - 1.0).abs() < 1e-10, "n={n}: lambda_0 = {l0}");
        }
    }
}
