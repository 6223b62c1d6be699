//! Projection rounding of SDP vector solutions, Monte Carlo estimates of the
//! rounded inner product, and the clamp-to-ball maps.
//!
//! One trial samples a single shared `k × r` matrix `Z` of independent
//! standard Gaussians and maps every solution row `u ↦ Zu / ‖Zu‖`. With
//! `k = 1` this is halfspace rounding (rows become signs); with `k = 3` the
//! rows are Bloch vectors of a random product state.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::{chunk_rng, map_chunks, mean_ci95, plan_chunks, ExecMode};
use crate::graph::WeightedGraph;
use crate::sdp::{
    evaluate_assignment, solve_vector_program, Objective, SdpSolution, SolveOptions,
    UnitVectorAssignment,
};

/// Minimum sample count for [`expected_inner_product_mc`].
pub const MIN_MC_SAMPLES: u64 = 1_000;

/// Minimum trial count for rounding-ratio reports (normal-approximation CI).
pub const MIN_RATIO_TRIALS: u64 = 30;

/// Norms at or below this threshold count as a zero image and trigger a
/// fresh redraw for the affected row.
const ZERO_IMAGE_TOL: f64 = 1e-300;

/// Draw a `k × r` matrix of independent standard Gaussians, row-major.
fn gaussian_matrix<R: Rng>(rng: &mut R, k: usize, r: usize) -> Vec<f64> {
    (0..k * r).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Project one row through `Z` and normalize; `None` if the image is zero.
fn project_row(z: &[f64], k: usize, row: &[f64]) -> Option<Vec<f64>> {
    let r = row.len();
    let mut image = vec![0.0f64; k];
    for (i, out) in image.iter_mut().enumerate() {
        *out = z[i * r..(i + 1) * r].iter().zip(row).map(|(a, b)| a * b).sum();
    }
    let norm = image.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= ZERO_IMAGE_TOL {
        return None;
    }
    for x in &mut image {
        *x /= norm;
    }
    Some(image)
}

/// Projection rounding with an explicit RNG; returns the rounded assignment
/// and the number of zero-image redraws (almost surely 0).
fn project_round_with(
    f: &UnitVectorAssignment,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (UnitVectorAssignment, u64) {
    let r = f.rank();
    let z = gaussian_matrix(rng, k, r);
    let mut retries = 0u64;
    let rows: Vec<Vec<f64>> = f
        .rows
        .iter()
        .map(|row| loop {
            let attempt = if retries == 0 {
                project_row(&z, k, row)
            } else {
                // A zero image is a measure-zero event; fall back to a fresh
                // matrix for the affected row and count the redraw.
                project_row(&gaussian_matrix(rng, k, r), k, row)
            };
            match attempt {
                Some(image) => break image,
                None => retries += 1,
            }
        })
        .collect();
    let assignment = UnitVectorAssignment::new(f.labels.clone(), rows)
        .expect("projection rounding produces unit rows");
    (assignment, retries)
}

/// Projection rounding: map every row of `f` through one shared random
/// `k × r` Gaussian matrix and normalize. Deterministic given `seed`.
pub fn project_round(f: &UnitVectorAssignment, k: usize, seed: u64) -> Result<UnitVectorAssignment> {
    Ok(project_round_detailed(f, k, seed)?.0)
}

/// [`project_round`] plus the zero-image redraw count.
pub fn project_round_detailed(
    f: &UnitVectorAssignment,
    k: usize,
    seed: u64,
) -> Result<(UnitVectorAssignment, u64)> {
    if k == 0 {
        return Err(Error::Domain("projection rank k must be >= 1".into()));
    }
    let mut rng = chunk_rng(seed, 0, 0);
    Ok(project_round_with(f, k, &mut rng))
}

/// A Monte Carlo mean with its normal-approximation 95% confidence radius.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct McEstimate {
    /// Sample mean.
    pub mean: f64,
    /// `1.96 · stderr`.
    pub ci95: f64,
    /// Number of samples taken.
    pub samples: u64,
    /// Number of sampling chunks (part of the determinism contract).
    pub chunk_count: u64,
}

/// Monte Carlo estimate of `E⟨Zu/‖Zu‖, Zv/‖Zv‖⟩` for unit vectors `u, v`
/// at angle `arccos ρ` and a random `k`-row Gaussian `Z`.
///
/// Converges to the exact curve `F*(k, ρ)`. The endpoints `ρ = ±1` are
/// returned exactly (the rounded vectors coincide or are antipodal).
pub fn expected_inner_product_mc(
    rho: f64,
    k: usize,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::Domain(format!("rho must lie in [-1, 1], got {rho}")));
    }
    if k == 0 {
        return Err(Error::Domain("projection rank k must be >= 1".into()));
    }
    if samples < MIN_MC_SAMPLES {
        return Err(Error::Domain(format!(
            "samples = {samples} too small: need at least {MIN_MC_SAMPLES}"
        )));
    }
    if rho == 1.0 || rho == -1.0 {
        return Ok(McEstimate { mean: rho, ci95: 0.0, samples, chunk_count: 0 });
    }

    // u = e1 and v = rho e1 + sqrt(1-rho^2) e2 span the 2-plane; only the
    // first two columns of Z matter: zu = z1, zv = rho z1 + tail z2.
    let tail = (1.0 - rho * rho).sqrt();
    let (chunk_count, sizes) = plan_chunks(samples);
    let partials = map_chunks(ExecMode::Auto, chunk_count, |c| {
        let mut rng = chunk_rng(seed, 0, c);
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        let mut zu = vec![0.0f64; k];
        let mut zv = vec![0.0f64; k];
        for _ in 0..sizes[c as usize] {
            for i in 0..k {
                let g1: f64 = rng.sample(StandardNormal);
                let g2: f64 = rng.sample(StandardNormal);
                zu[i] = g1;
                zv[i] = rho * g1 + tail * g2;
            }
            let nu = zu.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nv = zv.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nu <= ZERO_IMAGE_TOL || nv <= ZERO_IMAGE_TOL {
                continue;
            }
            let dot: f64 = zu.iter().zip(&zv).map(|(a, b)| a * b).sum::<f64>() / (nu * nv);
            sum += dot;
            sumsq += dot * dot;
        }
        (sum, sumsq)
    });
    let (sum, sumsq) = partials
        .iter()
        .fold((0.0, 0.0), |(s, q), (cs, cq)| (s + cs, q + cq));
    let (mean, ci95) = mean_ci95(sum, sumsq, samples);
    Ok(McEstimate { mean, ci95, samples, chunk_count })
}

/// The objective used to score a rounded assignment. Rounding a
/// Quantum Max-Cut solution produces a random product state, whose energy
/// per edge is the *product* form `1/4 − ⟨u,v⟩/4`; the other objectives
/// score with their own edge form.
fn evaluation_objective(obj: Objective) -> Objective {
    if obj == Objective::QUANTUM_MAX_CUT {
        Objective::PRODUCT
    } else {
        obj
    }
}

/// Empirical rounding performance of a vector solution.
#[derive(Debug, Clone, Serialize)]
pub struct RoundingReport {
    /// Objective the SDP value refers to.
    pub objective: String,
    /// Projection rank.
    pub k: usize,
    /// Number of rounding trials.
    pub trials: u64,
    /// Value of the vector solution being rounded.
    pub sdp_value: f64,
    /// Mean graph value of the rounded assignments.
    pub mean_rounded: f64,
    /// `mean_rounded / sdp_value`.
    pub ratio: f64,
    /// Standard error of `mean_rounded`.
    pub stderr: f64,
    /// `1.96 · stderr`.
    pub ci95: f64,
    /// Total zero-image redraws across all trials (almost surely 0).
    pub retries: u64,
}

/// Round a given vector solution `trials` times and report the mean value
/// and ratio against that solution's own value.
///
/// Trials run in parallel with per-trial derived seeds; aggregation order is
/// fixed by trial index, so results are deterministic in `seed`.
pub fn empirical_rounding_ratio_with_assignment(
    graph: &WeightedGraph,
    objective: Objective,
    assignment: &UnitVectorAssignment,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<RoundingReport> {
    if k == 0 {
        return Err(Error::Domain("projection rank k must be >= 1".into()));
    }
    if trials < MIN_RATIO_TRIALS {
        return Err(Error::Domain(format!(
            "trials = {trials} too small: the normal-approximation CI needs at least {MIN_RATIO_TRIALS}"
        )));
    }
    let sdp_value = evaluate_assignment(graph, objective, assignment)?;
    let eval_obj = evaluation_objective(objective);

    let values = map_chunks(ExecMode::Auto, trials, |t| {
        let mut rng = chunk_rng(seed, 1, t);
        let (rounded, retries) = project_round_with(assignment, k, &mut rng);
        let value = evaluate_assignment(graph, eval_obj, &rounded)
            .expect("rounded assignment covers the same labels");
        (value, retries)
    });
    let sum: f64 = values.iter().map(|(v, _)| v).sum();
    let sumsq: f64 = values.iter().map(|(v, _)| v * v).sum();
    let retries: u64 = values.iter().map(|(_, r)| r).sum();
    let (mean_rounded, ci95) = mean_ci95(sum, sumsq, trials);
    Ok(RoundingReport {
        objective: objective.name().to_string(),
        k,
        trials,
        sdp_value,
        mean_rounded,
        ratio: mean_rounded / sdp_value,
        stderr: ci95 / 1.96,
        ci95,
        retries,
    })
}

/// Solve the vector program for `objective`, then measure projection
/// rounding against the solved value. Returns the report and the solution.
pub fn empirical_rounding_ratio(
    graph: &WeightedGraph,
    objective: Objective,
    k: usize,
    trials: u64,
    seed: u64,
    options: &SolveOptions,
) -> Result<(RoundingReport, SdpSolution)> {
    let solution = solve_vector_program(graph, objective, options)?;
    let report = empirical_rounding_ratio_with_assignment(
        graph,
        objective,
        &solution.assignment,
        k,
        trials,
        seed,
    )?;
    Ok((report, solution))
}

/// `R(v)`: clamp to the unit ball — `v` if `‖v‖ ≤ 1`, else `v/‖v‖`.
/// 1-Lipschitz.
pub fn round_to_ball(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= 1.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / norm).collect()
    }
}

/// `Φ(v) = v − R(v)`: the part of `v` sticking out of the unit ball.
/// 2-Lipschitz.
pub fn phi(v: &[f64]) -> Vec<f64> {
    let r = round_to_ball(v);
    v.iter().zip(&r).map(|(a, b)| a - b).collect()
}

/// `Ψ(v) = min(‖v‖², 1)`: clamped squared norm. 2-Lipschitz.
pub fn psi(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{noisy_hypercube, standard_graph};
    use crate::special::f_star;

    fn unit(v: &[f64]) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect()
    }

    #[test]
    fn k1_rounds_to_signs() {
        let f = UnitVectorAssignment::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                unit(&[1.0, 2.0, -0.5]),
                unit(&[-1.0, -2.0, 0.5]),
                unit(&[0.3, -0.3, 0.9]),
            ],
        )
        .unwrap();
        for seed in 0..20 {
            let rounded = project_round(&f, 1, seed).unwrap();
            for row in &rounded.rows {
                assert_eq!(row.len(), 1);
                assert!(row[0] == 1.0 || row[0] == -1.0, "row = {row:?}");
            }
            // b = -a: halfspace rounding preserves antipodality.
            assert_eq!(rounded.rows[0][0], -rounded.rows[1][0]);
        }
    }

    #[test]
    fn identical_and_antipodal_rows_stay_locked() {
        let u = unit(&[0.2, -0.7, 0.4, 0.5]);
        let minus: Vec<f64> = u.iter().map(|x| -x).collect();
        let f = UnitVectorAssignment::new(
            vec!["minus".into(), "same1".into(), "same2".into()],
            vec![minus, u.clone(), u],
        )
        .unwrap();
        for seed in [1, 7, 42] {
            let rounded = project_round(&f, 3, seed).unwrap();
            for i in 0..3 {
                assert!((rounded.rows[1][i] - rounded.rows[2][i]).abs() < 1e-15);
                assert!((rounded.rows[0][i] + rounded.rows[1][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mc_endpoints_are_exact() {
        let hi = expected_inner_product_mc(1.0, 3, 1_000, 0).unwrap();
        assert_eq!(hi.mean, 1.0);
        assert_eq!(hi.ci95, 0.0);
        let lo = expected_inner_product_mc(-1.0, 7, 1_000, 0).unwrap();
        assert_eq!(lo.mean, -1.0);
    }

    #[test]
    fn mc_matches_curve_at_bov_point() {
        // F*(3, -0.584) = 1 - alpha_BOV (1 - rho) ≈ -0.514.
        let est = expected_inner_product_mc(-0.584, 3, 1_000_000, 7).unwrap();
        let exact = f_star(3, -0.584).unwrap();
        assert!(est.ci95 < 0.002, "ci95 = {}", est.ci95);
        assert!(
            (est.mean - exact).abs() < 4.0 * est.ci95 / 1.96,
            "mc = {} vs exact = {exact}",
            est.mean
        );
        assert!((est.mean + 0.514).abs() < 0.003);
    }

    #[test]
    fn mc_agrees_with_f_star_on_grid() {
        for k in [1usize, 2, 3, 5] {
            for step in -3..=3 {
                let rho = 0.3 * step as f64;
                let est = expected_inner_product_mc(rho, k, 100_000, 11).unwrap();
                let exact = f_star(k, rho).unwrap();
                let four_sigma = 4.0 * est.ci95 / 1.96;
                assert!(
                    (est.mean - exact).abs() <= four_sigma.max(1e-4),
                    "k={k} rho={rho}: mc={} exact={exact} 4s={four_sigma}",
                    est.mean
                );
            }
        }
    }

    #[test]
    fn mc_is_odd_in_rho() {
        let pos = expected_inner_product_mc(0.6, 3, 200_000, 9).unwrap();
        let neg = expected_inner_product_mc(-0.6, 3, 200_000, 10).unwrap();
        assert!((pos.mean + neg.mean).abs() < pos.ci95 + neg.ci95);
    }

    #[test]
    fn mc_rejects_bad_parameters() {
        assert!(expected_inner_product_mc(1.5, 3, 10_000, 0).is_err());
        assert!(expected_inner_product_mc(0.0, 0, 10_000, 0).is_err());
        assert!(expected_inner_product_mc(0.0, 3, 999, 0).is_err());
    }

    #[test]
    fn single_edge_product_ratio_is_exactly_one() {
        // The optimal pair is antipodal; rounding preserves antipodality, so
        // every trial scores 1/4 - (-1)/4 = 1/2 = SDP_Prod exactly.
        let g = standard_graph("single_edge").unwrap();
        let f = UnitVectorAssignment::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 0.0], vec![-1.0, 0.0]],
        )
        .unwrap();
        let report =
            empirical_rounding_ratio_with_assignment(&g, Objective::PRODUCT, &f, 3, 30, 5).unwrap();
        assert_eq!(report.sdp_value, 0.5);
        assert!((report.ratio - 1.0).abs() < 1e-15, "ratio = {}", report.ratio);
        assert_eq!(report.retries, 0);
    }

    #[test]
    fn triangle_qmc_rounding_matches_f_star() {
        // K3 optimum: planar vectors at 120°. Rounded product states score
        // 1/4 - F*(3, -1/2)/4 per edge in expectation.
        let g = standard_graph("complete:3").unwrap();
        let h = 3.0f64.sqrt() / 2.0;
        let f = UnitVectorAssignment::new(
            vec!["v0".into(), "v1".into(), "v2".into()],
            vec![vec![1.0, 0.0], vec![-0.5, h], vec![-0.5, -h]],
        )
        .unwrap();
        let report = empirical_rounding_ratio_with_assignment(
            &g,
            Objective::QUANTUM_MAX_CUT,
            &f,
            3,
            4_000,
            13,
        )
        .unwrap();
        assert!((report.sdp_value - 0.625).abs() < 1e-12);
        let expected = 0.25 - f_star(3, -0.5).unwrap() / 4.0;
        assert!(
            (report.mean_rounded - expected).abs() < 4.0 * report.stderr,
            "mean = {} expected = {expected} stderr = {}",
            report.mean_rounded,
            report.stderr
        );
    }

    #[test]
    fn hypercube_identity_rounding_hits_bov_ratio() {
        // Identity solution f(x) = x/sqrt(n) on the noisy hypercube at
        // rho_BOV has Prod-value 1/4 - rho/4; k=3 rounding lands near
        // alpha_BOV times that.
        let rho = -0.584;
        let g = noisy_hypercube(8, rho, true).unwrap();
        let f = UnitVectorAssignment::hypercube_identity(g.labels()).unwrap();
        let report =
            empirical_rounding_ratio_with_assignment(&g, Objective::PRODUCT, &f, 3, 200, 17)
                .unwrap();
        assert!((report.sdp_value - (0.25 - rho / 4.0)).abs() < 1e-12);
        assert!(
            report.ratio >= 0.956 - 0.02 && report.ratio <= 1.0,
            "ratio = {}",
            report.ratio
        );
    }

    #[test]
    fn ratio_report_rejects_small_trials() {
        let g = standard_graph("single_edge").unwrap();
        let f = UnitVectorAssignment::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0], vec![-1.0]],
        )
        .unwrap();
        assert!(
            empirical_rounding_ratio_with_assignment(&g, Objective::PRODUCT, &f, 3, 29, 0).is_err()
        );
    }

    #[test]
    fn solve_then_round_end_to_end() {
        let g = standard_graph("cycle:4").unwrap();
        let (report, solution) = empirical_rounding_ratio(
            &g,
            Objective::MAX_CUT,
            1,
            64,
            3,
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((solution.value - 1.0).abs() < 1e-8);
        // Halfspace rounding of the bipartite optimum recovers the exact cut
        // in every trial.
        assert!((report.ratio - 1.0).abs() < 1e-6, "ratio = {}", report.ratio);
    }

    #[test]
    fn clamp_maps_match_definitions() {
        assert_eq!(round_to_ball(&[0.3, 0.4]), vec![0.3, 0.4]);
        let r = round_to_ball(&[3.0, 4.0]);
        assert!((r[0] - 0.6).abs() < 1e-15 && (r[1] - 0.8).abs() < 1e-15);
        assert_eq!(round_to_ball(&[0.0, 0.0]), vec![0.0, 0.0]);
        let p = phi(&[3.0, 4.0]);
        assert!((p[0] - 2.4).abs() < 1e-15 && (p[1] - 3.2).abs() < 1e-15);
        assert_eq!(phi(&[0.1, 0.1]), vec![0.0, 0.0]);
        assert_eq!(psi(&[0.6, 0.0]), 0.36);
        assert_eq!(psi(&[3.0, 4.0]), 1.0);
    }

    #[test]
    fn clamp_maps_are_lipschitz_on_random_pairs() {
        use rand::Rng;
        let mut rng = chunk_rng(123, 9, 0);
        for _ in 0..100_000 {
            let dim = rng.gen_range(1..=8);
            let scale = 10.0f64.powf(rng.gen_range(-1.0..1.0));
            let u: Vec<f64> =
                (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            let v: Vec<f64> =
                (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
            let dist =
                u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let d = |a: &[f64], b: &[f64]| {
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            };
            let slack = 1e-12 * (1.0 + dist);
            assert!(d(&round_to_ball(&u), &round_to_ball(&v)) <= dist + slack);
            assert!(d(&phi(&u), &phi(&v)) <= 2.0 * dist + slack);
            assert!((psi(&u) - psi(&v)).abs() <= 2.0 * dist + slack);
        }
    }
}
