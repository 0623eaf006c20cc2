//! Two-stage search: a coarse profiled grid over alpha, then damped Newton
//! refinement with projection into the constrained space.

use rayon::prelude::*;

use super::objective::{omega_from_sums, profile_from_sums};
use super::{
    hessian, objective_r, omega_hat, score, score_hessian_alpha, BoundaryFlags,
    EstimateDiagnostics, EstimateOptions, EstimationResult, NewtonHessian, ObjectiveContext,
    PsiKind, StartStrategy,
};
use crate::error::{Error, Result};
use crate::inference::sigma_matrix;
use crate::model::{ThetaSpace, ThetaVector};
use crate::spectra::periodogram;

/// Outcome of the stage-(i) grid search.
#[derive(Debug, Clone)]
pub struct GridOutcome {
    pub argmin: ThetaVector,
    pub r_value: f64,
    pub degenerate_points: usize,
    pub profile_fallbacks: usize,
    /// Every evaluated grid point as (gamma, delta1, delta2, beta_star, R);
    /// populated only when `keep_surface` was requested.
    pub surface: Vec<(f64, f64, f64, f64, f64)>,
}

/// Grid of delta pairs respecting `-eta1 <= d1 <= d2 - eta2 <= 1/2 - eta2 - eta3`.
fn delta_grid(space: &ThetaSpace, step: f64) -> Vec<(f64, f64)> {
    let mut pairs = Vec::new();
    let d2_lo = -space.eta1 + space.eta2;
    let d2_hi = space.delta2_hi();
    let mut k2 = 0usize;
    loop {
        let d2 = d2_lo + step * k2 as f64;
        if d2 > d2_hi + 1e-12 {
            break;
        }
        let d1_hi = d2 - space.eta2;
        let mut k1 = 0usize;
        loop {
            let d1 = -space.eta1 + step * k1 as f64;
            if d1 > d1_hi + 1e-12 {
                break;
            }
            pairs.push((d1, d2.min(d2_hi)));
            k1 += 1;
        }
        k2 += 1;
    }
    pairs
}

fn gamma_grid(space: &ThetaSpace, points: usize) -> Vec<f64> {
    let (lo, hi) = space.gamma_bounds();
    if points == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect()
}

/// Total order used for the argmin: smallest R, ties broken lexicographically
/// by (gamma, delta1, delta2). Deterministic regardless of evaluation order.
fn better(
    a: &(f64, f64, f64, f64, f64),
    b: &(f64, f64, f64, f64, f64),
) -> std::cmp::Ordering {
    let key = |t: &(f64, f64, f64, f64, f64)| (t.4, t.0, t.1, t.2);
    let (ra, ga, d1a, d2a) = key(a);
    let (rb, gb, d1b, d2b) = key(b);
    ra.partial_cmp(&rb)
        .unwrap_or(std::cmp::Ordering::Equal)
        .then(ga.partial_cmp(&gb).unwrap())
        .then(d1a.partial_cmp(&d1b).unwrap())
        .then(d2a.partial_cmp(&d2b).unwrap())
}

/// Stage (i): evaluate the beta-profiled objective over the alpha grid.
/// `fixed_beta` switches to evaluation at a known beta instead of profiling.
pub(crate) fn grid_stage(
    ctx: &ObjectiveContext,
    space: &ThetaSpace,
    options: &EstimateOptions,
    fixed_beta: Option<f64>,
    keep_surface: bool,
) -> Result<GridOutcome> {
    let deltas = delta_grid(space, options.delta_grid_step);
    let gammas = gamma_grid(space, options.gamma_grid_points);

    struct Cell {
        entries: Vec<(f64, f64, f64, f64, f64)>,
        degenerate: usize,
        fallbacks: usize,
    }

    let eval_pair = |&(d1, d2): &(f64, f64)| -> Cell {
        let sums = ctx.alpha_sums(d1, d2);
        let mut entries = Vec::with_capacity(gammas.len());
        let mut degenerate = 0usize;
        let mut fallbacks = 0usize;
        for &g in &gammas {
            let (beta, det) = match fixed_beta {
                Some(b) => {
                    let om = omega_from_sums(&sums, b, g);
                    (b, om.det())
                }
                None => {
                    let p = profile_from_sums(&sums, g, space);
                    if p.degenerate {
                        fallbacks += 1;
                    }
                    (p.beta_star, p.c0 + p.c1 * p.beta_star + p.c2 * p.beta_star * p.beta_star)
                }
            };
            let r = if det > 0.0 {
                det.ln() - 2.0 * (d1 + d2) * ctx.lbar
            } else {
                degenerate += 1;
                f64::INFINITY
            };
            entries.push((g, d1, d2, beta, r));
        }
        Cell { entries, degenerate, fallbacks }
    };

    let cells: Vec<Cell> = deltas.par_iter().map(eval_pair).collect();

    let mut best: Option<(f64, f64, f64, f64, f64)> = None;
    let mut degenerate_points = 0;
    let mut profile_fallbacks = 0;
    let mut surface = Vec::new();
    for cell in &cells {
        degenerate_points += cell.degenerate;
        profile_fallbacks += cell.fallbacks;
        for e in &cell.entries {
            if keep_surface {
                surface.push(*e);
            }
            match &best {
                None => best = Some(*e),
                Some(b) => {
                    if better(e, b) == std::cmp::Ordering::Less {
                        best = Some(*e);
                    }
                }
            }
        }
    }
    let best = best.ok_or_else(|| Error::EstimationFailed("empty alpha grid".into()))?;
    if !best.4.is_finite() {
        return Err(Error::EstimationFailed(
            "objective degenerate (det <= 0) at every grid point".into(),
        ));
    }
    Ok(GridOutcome {
        argmin: ThetaVector::new(best.3, best.0, best.1, best.2),
        r_value: best.4,
        degenerate_points,
        profile_fallbacks,
        surface,
    })
}

/// Euclidean projection of `(d1, d2)` onto the triangle
/// `{d1 >= -eta1, d2 <= 1/2 - eta3, d1 <= d2 - eta2}`.
fn project_deltas(space: &ThetaSpace, d1: f64, d2: f64) -> (f64, f64) {
    let lo = -space.eta1;
    let hi = space.delta2_hi();
    let gap = space.eta2;
    let inside =
        d1 >= lo - 1e-15 && d2 <= hi + 1e-15 && d1 - d2 <= -gap + 1e-15;
    if inside {
        return (d1.max(lo), d2.min(hi).max(d1 + gap));
    }
    // Vertices of the feasible triangle.
    let va = (lo, lo + gap);
    let vb = (lo, hi);
    let vc = (hi - gap, hi);
    let seg = |p: (f64, f64), a: (f64, f64), b: (f64, f64)| -> (f64, f64) {
        let ab = (b.0 - a.0, b.1 - a.1);
        let len2 = ab.0 * ab.0 + ab.1 * ab.1;
        let t = (((p.0 - a.0) * ab.0 + (p.1 - a.1) * ab.1) / len2).clamp(0.0, 1.0);
        (a.0 + t * ab.0, a.1 + t * ab.1)
    };
    let p = (d1, d2);
    let candidates = [seg(p, va, vb), seg(p, vb, vc), seg(p, va, vc)];
    let dist2 = |q: (f64, f64)| (q.0 - p.0).powi(2) + (q.1 - p.1).powi(2);
    let mut bestq = candidates[0];
    for q in &candidates[1..] {
        if dist2(*q) < dist2(bestq) {
            bestq = *q;
        }
    }
    bestq
}

/// Project a full parameter vector into Theta.
pub(crate) fn project_theta(space: &ThetaSpace, th: &ThetaVector) -> ThetaVector {
    let (glo, ghi) = space.gamma_bounds();
    let (d1, d2) = project_deltas(space, th.delta1, th.delta2);
    ThetaVector::new(
        th.beta.clamp(space.beta_lo, space.beta_hi),
        th.gamma.clamp(glo, ghi),
        d1,
        d2,
    )
}

fn objective_or_inf(ctx: &ObjectiveContext, th: &ThetaVector) -> f64 {
    objective_r(ctx, th).unwrap_or(f64::INFINITY)
}

enum FreeParams {
    All,
    AlphaOnly,
}

/// Damped projected Newton iteration from `start`. Returns
/// `(theta, r, converged, iterations)`.
fn newton(
    ctx: &ObjectiveContext,
    space: &ThetaSpace,
    start: ThetaVector,
    options: &EstimateOptions,
    free: FreeParams,
) -> Result<(ThetaVector, f64, bool, usize)> {
    let mut th = project_theta(space, &start);
    let mut r_cur = objective_or_inf(ctx, &th);
    if !r_cur.is_finite() {
        return Err(Error::EstimationFailed(format!(
            "objective degenerate at the starting point {th:?}"
        )));
    }
    let mut converged = false;
    let mut iters = 0usize;

    for it in 0..options.max_iterations {
        iters = it + 1;
        // Direction from the (possibly surrogate) Newton system.
        let dir = match free {
            FreeParams::All => {
                let s = score(ctx, &th)?;
                let h: [[f64; 4]; 4] = match options.hessian {
                    NewtonHessian::Analytic => hessian(ctx, &th)?,
                    NewtonHessian::Surrogate => surrogate_hessian(ctx, &th)?,
                };
                let flat: Vec<f64> = h.iter().flatten().copied().collect();
                let d = crate::linalg::solve(4, &flat, &s);
                newton_or_gradient(d.map(|v| [-v[0], -v[1], -v[2], -v[3]]), &s)
            }
            FreeParams::AlphaOnly => {
                let (s3, h3) = score_hessian_alpha(ctx, &th)?;
                let flat: Vec<f64> = h3.iter().flatten().copied().collect();
                let d = crate::linalg::solve(3, &flat, &s3);
                let full = d.map(|v| [0.0, -v[0], -v[1], -v[2]]);
                let s_full = [0.0, s3[0], s3[1], s3[2]];
                newton_or_gradient(full, &s_full)
            }
        };

        // Cap the step to keep the quadratic model honest.
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        let dir = if norm > 0.5 {
            let s = 0.5 / norm;
            [dir[0] * s, dir[1] * s, dir[2] * s, dir[3] * s]
        } else {
            dir
        };

        // Backtracking with projection; degenerate trials are +infinity.
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..45 {
            let trial = project_theta(
                space,
                &ThetaVector::new(
                    th.beta + t * dir[0],
                    th.gamma + t * dir[1],
                    th.delta1 + t * dir[2],
                    th.delta2 + t * dir[3],
                ),
            );
            let r_t = objective_or_inf(ctx, &trial);
            if r_t <= r_cur + 1e-14 * (1.0 + r_cur.abs()) {
                accepted = Some((trial, r_t));
                break;
            }
            t *= 0.5;
        }
        let Some((next, r_next)) = accepted else {
            // No descent left in this direction: treat as converged at the
            // current (possibly boundary) point.
            converged = true;
            break;
        };
        let step = [
            next.beta - th.beta,
            next.gamma - th.gamma,
            next.delta1 - th.delta1,
            next.delta2 - th.delta2,
        ];
        let moved = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        th = next;
        r_cur = r_next;
        if moved <= options.newton_tol {
            converged = true;
            break;
        }
    }
    Ok((th, r_cur, converged, iters))
}

fn newton_or_gradient(newton_dir: Option<[f64; 4]>, s: &[f64]) -> [f64; 4] {
    if let Some(d) = newton_dir {
        let descent: f64 = d.iter().zip(s).map(|(a, b)| a * b).sum();
        if descent < 0.0 && d.iter().all(|v| v.is_finite()) {
            return d;
        }
    }
    // Fall back to (scaled) steepest descent.
    let norm = s.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut g = [0.0; 4];
    for k in 0..s.len() {
        g[k] = -s[k] / norm;
    }
    g
}

/// Remark-style surrogate for the Newton matrix:
/// `2 Delta-hat Sigma-hat(theta) Delta-hat` with
/// `Delta-hat = diag{lambda_m^(d1-d2), 1, 1, 1}`.
fn surrogate_hessian(ctx: &ObjectiveContext, th: &ThetaVector) -> Result<[[f64; 4]; 4]> {
    let om = omega_hat(ctx, th);
    let nu = th.nu().clamp(0.0, 0.499);
    let sigma = sigma_matrix(th.gamma, nu, &om)?;
    let lam_m = ctx.lambda_m();
    let d = [lam_m.powf(-th.nu()), 1.0, 1.0, 1.0];
    let mut h = [[0.0; 4]; 4];
    for k in 0..4 {
        for l in 0..4 {
            h[k][l] = 2.0 * d[k] * sigma.m[k][l] * d[l];
        }
    }
    Ok(h)
}

fn finish(
    ctx: &ObjectiveContext,
    space: &ThetaSpace,
    grid_argmin: ThetaVector,
    th: ThetaVector,
    r: f64,
    converged: bool,
    iterations: usize,
    diag: EstimateDiagnostics,
) -> EstimationResult {
    let om = omega_hat(ctx, &th);
    let scale = (om.w11 * om.w22).abs().max(f64::MIN_POSITIVE);
    let mut diag = diag;
    diag.degenerate = !(om.det() > 1e-12 * scale);
    EstimationResult {
        theta_hat: th,
        omega_hat: om,
        r_min: r,
        converged,
        iterations,
        boundary_hit: BoundaryFlags::detect(&th, space, 1e-9),
        grid_stage_argmin: grid_argmin,
        diagnostics: diag,
    }
}

/// Full local Whittle estimation of `(beta, gamma, delta1, delta2)`.
pub fn estimate(
    z: &[[f64; 2]],
    m: usize,
    psi: PsiKind,
    space: &ThetaSpace,
    options: &EstimateOptions,
) -> Result<EstimationResult> {
    if z.len() < 32 {
        return Err(Error::invalid("need n >= 32 observations"));
    }
    let pset = periodogram(z, m)?;
    let ctx = ObjectiveContext::new(&pset, psi);
    estimate_with_context(&ctx, space, options, &pset)
}

pub(crate) fn estimate_with_context(
    ctx: &ObjectiveContext,
    space: &ThetaSpace,
    options: &EstimateOptions,
    pset: &crate::spectra::PeriodogramSet,
) -> Result<EstimationResult> {
    let mut diag = EstimateDiagnostics::default();
    let start = match &options.start {
        StartStrategy::Grid => {
            let g = grid_stage(ctx, space, options, None, false)?;
            diag.degenerate_grid_points = g.degenerate_points;
            diag.profile_fallbacks = g.profile_fallbacks;
            g.argmin
        }
        StartStrategy::Baselines => project_theta(space, &crate::baselines::baseline_start(pset, space)?),
        StartStrategy::Fixed(th) => project_theta(space, th),
    };
    let (th, r, converged, iterations) = newton(ctx, space, start, options, FreeParams::All)?;
    Ok(finish(ctx, space, start, th, r, converged, iterations, diag))
}

/// Estimation of `alpha = (gamma, delta1, delta2)` with beta known.
pub fn estimate_known_beta(
    z: &[[f64; 2]],
    m: usize,
    psi: PsiKind,
    space: &ThetaSpace,
    beta0: f64,
    options: &EstimateOptions,
) -> Result<EstimationResult> {
    if z.len() < 32 {
        return Err(Error::invalid("need n >= 32 observations"));
    }
    let pset = periodogram(z, m)?;
    let ctx = ObjectiveContext::new(&pset, psi);
    let mut diag = EstimateDiagnostics::default();
    let grid = grid_stage(&ctx, space, options, Some(beta0), false)?;
    diag.degenerate_grid_points = grid.degenerate_points;
    let (th, r, converged, iterations) =
        newton(&ctx, space, grid.argmin, options, FreeParams::AlphaOnly)?;
    debug_assert_eq!(th.beta, beta0);
    Ok(finish(&ctx, space, grid.argmin, th, r, converged, iterations, diag))
}

/// The stage-(i) surface export: every grid point as
/// `(gamma, delta1, delta2, beta_star, R)`.
pub fn objective_surface(
    z: &[[f64; 2]],
    m: usize,
    psi: PsiKind,
    space: &ThetaSpace,
    options: &EstimateOptions,
) -> Result<Vec<(f64, f64, f64, f64, f64)>> {
    let pset = periodogram(z, m)?;
    let ctx = ObjectiveContext::new(&pset, psi);
    Ok(grid_stage(&ctx, space, options, None, true)?.surface)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_grid_respects_chain() {
        let space = ThetaSpace::default();
        let pairs = delta_grid(&space, 0.025);
        assert!(!pairs.is_empty());
        for (d1, d2) in &pairs {
            assert!(*d1 >= -space.eta1 - 1e-12);
            assert!(*d1 <= *d2 - space.eta2 + 1e-12);
            assert!(*d2 <= space.delta2_hi() + 1e-12);
        }
        // The flagship truth (0.05, 0.45) has a grid point within one step.
        assert!(pairs
            .iter()
            .any(|(d1, d2)| (d1 - 0.04).abs() < 1e-9 && (d2 - 0.46).abs() < 1e-9));
    }

    #[test]
    fn projection_lands_in_triangle_and_is_idempotent() {
        let space = ThetaSpace::default();
        let cases = [
            (0.3, 0.2),   // violates d1 <= d2 - eta2
            (-0.5, 0.9),  // violates both box edges
            (0.47, 0.50), // beyond the top corner
            (0.1, 0.3),   // already inside
            (-0.02, 0.0),
        ];
        for (d1, d2) in cases {
            let (p1, p2) = project_deltas(&space, d1, d2);
            assert!(p1 >= -space.eta1 - 1e-12);
            assert!(p1 <= p2 - space.eta2 + 1e-9);
            assert!(p2 <= space.delta2_hi() + 1e-12);
            let (q1, q2) = project_deltas(&space, p1, p2);
            assert!((p1 - q1).abs() < 1e-12 && (p2 - q2).abs() < 1e-12);
        }
        // Interior points are fixed points.
        let (p1, p2) = project_deltas(&space, 0.1, 0.3);
        assert_eq!((p1, p2), (0.1, 0.3));
    }

    #[test]
    fn gamma_grid_spans_bounds() {
        let space = ThetaSpace::default();
        let g = gamma_grid(&space, 25);
        assert_eq!(g.len(), 25);
        let (lo, hi) = space.gamma_bounds();
        assert!((g[0] - lo).abs() < 1e-15);
        assert!((g[24] - hi).abs() < 1e-15);
    }
}
