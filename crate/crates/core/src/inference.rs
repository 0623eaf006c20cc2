//! Asymptotic covariance, scaling matrices, Wald tests, misspecification
//! diagnostics and sample-mean inference.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::OmegaMatrix;
use crate::spectra::FourierGrid;
use crate::whittle::EstimationResult;

/// Positive-definiteness audit attached to every Sigma construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SigmaAudit {
    pub positive_definite: bool,
    pub min_eigenvalue: f64,
}

/// The 4x4 limiting curvature matrix of the scaled objective, with the
/// inputs it was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaMatrix {
    pub m: [[f64; 4]; 4],
    pub gamma0: f64,
    pub nu0: f64,
    pub rho: f64,
    pub audit: SigmaAudit,
}

impl SigmaMatrix {
    /// Inverse of the full matrix; refuses near-singular input and names the
    /// direction that is (close to) unidentified.
    pub fn inverse(&self) -> Result<[[f64; 4]; 4]> {
        let flat: Vec<f64> = self.m.iter().flatten().copied().collect();
        let (evals, evecs) = linalg::sym_eigen(4, &flat);
        let max_abs = evals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let (kmin, &vmin) = evals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        if vmin.abs() <= 1e-10 * max_abs.max(1e-300) {
            let dir: Vec<f64> = (0..4).map(|r| evecs[r * 4 + kmin]).collect();
            let names = ["beta", "gamma", "delta1", "delta2"];
            let dominant = (0..4).max_by(|&a, &b| dir[a].abs().partial_cmp(&dir[b].abs()).unwrap()).unwrap();
            return Err(Error::Singular(format!(
                "Sigma is singular along ({:.3}, {:.3}, {:.3}, {:.3}) (mostly {}); \
                 typically delta1 ~ delta2 with gamma ~ 0 leaves beta unidentified",
                dir[0], dir[1], dir[2], dir[3], names[dominant]
            )));
        }
        let inv = linalg::inverse(4, &flat)
            .ok_or_else(|| Error::Singular("Sigma inversion failed".into()))?;
        let mut out = [[0.0; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                out[r][c] = inv[r * 4 + c];
            }
        }
        Ok(out)
    }

    /// Inverse of the lower-right 3x3 block (known-beta inference).
    pub fn alpha_block_inverse(&self) -> Result<[[f64; 3]; 3]> {
        let mut flat = Vec::with_capacity(9);
        for r in 1..4 {
            for c in 1..4 {
                flat.push(self.m[r][c]);
            }
        }
        let inv = linalg::inverse(3, &flat)
            .ok_or_else(|| Error::Singular("alpha block of Sigma is singular".into()))?;
        let mut out = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in 0..3 {
                out[r][c] = inv[r * 3 + c];
            }
        }
        Ok(out)
    }
}

fn build_sigma(gamma0: f64, nu0: f64, omega: &OmegaMatrix, alt: bool) -> Result<SigmaMatrix> {
    if !(0.0..0.5).contains(&nu0) {
        return Err(Error::domain(format!("nu0 = {nu0} outside [0, 1/2)")));
    }
    let rho = omega.rho();
    if !(rho.abs() < 1.0) {
        return Err(Error::domain(format!("|rho| = {} >= 1", rho.abs())));
    }
    let mu = 1.0 / (1.0 - rho * rho);
    let r21 = omega.w22 / omega.w11;
    let r12 = omega.w12 / omega.w11;
    let cg = gamma0.cos();
    let sg = gamma0.sin();
    let a1 = 1.0 / (1.0 - nu0);
    let a2 = a1 * a1;

    let s11 = 2.0 * mu * (1.0 / (1.0 - 2.0 * nu0) - a2 * cg * cg) * r21;
    let s12 = -2.0 * mu * a1 * sg * r12;
    let s13 = 2.0 * mu * nu0 * a2 * cg * r12;
    // The beta/delta2 cross term mirrors the beta/delta1 one; scale
    // equivariance in the data forces the omega12/omega11 ratio here. The
    // alternate tabulation (with omega22/omega11, and 4 + s34 on the memory
    // diagonal) is kept for comparison; it is indefinite once rho^2 > 1/2.
    let s14 = if alt { -2.0 * mu * nu0 * a2 * cg * r21 } else { -s13 };
    let s22 = 2.0 * mu * rho * rho;
    let s34 = -s22;
    let s33 = if alt { 4.0 + s34 } else { 4.0 - s34 };

    let m = [
        [s11, s12, s13, s14],
        [s12, s22, 0.0, 0.0],
        [s13, 0.0, s33, s34],
        [s14, 0.0, s34, s33],
    ];
    let flat: Vec<f64> = m.iter().flatten().copied().collect();
    let (evals, _) = linalg::sym_eigen(4, &flat);
    let audit = SigmaAudit { positive_definite: evals[0] > 0.0, min_eigenvalue: evals[0] };
    Ok(SigmaMatrix { m, gamma0, nu0, rho, audit })
}

/// The limiting curvature matrix Sigma evaluated at `(gamma0, nu0, Omega)`.
///
/// Entries (mu = 1/(1-rho^2), rho = w12/sqrt(w11 w22)):
///
/// ```text
/// s11 = 2 mu {(1-2nu)^-1 - (1-nu)^-2 cos^2 g} w22/w11
/// s12 = -2 mu (1-nu)^-1 sin g  w12/w11
/// s13 = 2 mu nu (1-nu)^-2 cos g  w12/w11 = -s14
/// s22 = -s34 = 2 mu rho^2,  s23 = s24 = 0
/// s33 = s44 = 4 - s34
/// ```
///
/// This form is positive definite for every |rho| < 1 (the audit result is
/// recorded, not assumed) and matches the Monte Carlo curvature oracle; see
/// [`sigma_matrix_alt`] for the alternate tabulation.
pub fn sigma_matrix(gamma0: f64, nu0: f64, omega: &OmegaMatrix) -> Result<SigmaMatrix> {
    build_sigma(gamma0, nu0, omega, false)
}

/// Alternate tabulation of Sigma (`s14` carrying `w22/w11` and
/// `s33 = 4 + s34`). Indefinite in the memory block when `rho^2 > 1/2`;
/// retained for audits and side-by-side comparisons.
pub fn sigma_matrix_alt(gamma0: f64, nu0: f64, omega: &OmegaMatrix) -> Result<SigmaMatrix> {
    build_sigma(gamma0, nu0, omega, true)
}

/// Diagonal scaling `diag{lambda_m^(-nu), 1, 1, 1}` with its inputs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingDelta {
    pub lambda_m: f64,
    pub nu: f64,
}

impl ScalingDelta {
    pub fn new(grid: &FourierGrid, nu: f64) -> Self {
        Self { lambda_m: grid.lambda_m(), nu }
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.lambda_m.powf(-self.nu), 1.0, 1.0, 1.0]
    }

    pub fn inverse_diagonal(&self) -> [f64; 4] {
        [self.lambda_m.powf(self.nu), 1.0, 1.0, 1.0]
    }
}

/// Approximate covariance of theta-hat:
/// `Var(theta-hat) = m^-1 Delta-hat^-1 Sigma-hat^-1 Delta-hat^-1`,
/// with Sigma-hat built by plugging in theta-hat and Omega-hat.
pub fn estimate_covariance(res: &EstimationResult, grid: &FourierGrid) -> Result<[[f64; 4]; 4]> {
    let th = &res.theta_hat;
    let sigma = sigma_matrix(th.gamma, th.nu().clamp(0.0, 0.4999), &res.omega_hat)?;
    let sinv = sigma.inverse()?;
    let dinv = ScalingDelta::new(grid, th.nu()).inverse_diagonal();
    let mut v = [[0.0; 4]; 4];
    let mf = grid.m as f64;
    for r in 0..4 {
        for c in 0..4 {
            v[r][c] = dinv[r] * sinv[r][c] * dinv[c] / mf;
        }
    }
    Ok(v)
}

/// Wald test of `A theta = c`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaldResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub restriction: (Vec<[f64; 4]>, Vec<f64>),
}

/// Upper-tail probability of a chi-square with `df` degrees of freedom,
/// via the regularized incomplete gamma function.
pub fn chi_square_upper(df: usize, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}

fn matrix_rank(rows: &[[f64; 4]]) -> usize {
    let q = rows.len();
    let mut m: Vec<[f64; 4]> = rows.to_vec();
    let mut rank = 0;
    let mut col = 0;
    while rank < q && col < 4 {
        let piv = (rank..q).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap());
        let piv = piv.unwrap();
        if m[piv][col].abs() < 1e-12 {
            col += 1;
            continue;
        }
        m.swap(rank, piv);
        for r in rank + 1..q {
            let f = m[r][col] / m[rank][col];
            for c in col..4 {
                m[r][c] -= f * m[rank][c];
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

/// `W = (A theta - c)' [A Var A']^-1 (A theta - c)`, chi-square(q) under the
/// restriction.
pub fn wald_test(
    res: &EstimationResult,
    grid: &FourierGrid,
    a: &[[f64; 4]],
    c: &[f64],
) -> Result<WaldResult> {
    let q = a.len();
    if q == 0 || q > 4 || c.len() != q {
        return Err(Error::invalid("restriction must have 1..=4 rows with matching c"));
    }
    if matrix_rank(a) < q {
        return Err(Error::invalid("restriction matrix is rank deficient"));
    }
    let v = estimate_covariance(res, grid)?;
    let th = res.theta_hat.as_array();
    // residual r = A theta - c and middle matrix A V A'.
    let mut resid = vec![0.0; q];
    for (i, row) in a.iter().enumerate() {
        resid[i] = row.iter().zip(th.iter()).map(|(x, y)| x * y).sum::<f64>() - c[i];
    }
    let mut mid = vec![0.0; q * q];
    for i in 0..q {
        for j in 0..q {
            let mut s = 0.0;
            for r in 0..4 {
                for cc in 0..4 {
                    s += a[i][r] * v[r][cc] * a[j][cc];
                }
            }
            mid[i * q + j] = s;
        }
    }
    let x = linalg::solve(q, &mid, &resid)
        .ok_or_else(|| Error::Singular("A Var(theta) A' is singular".into()))?;
    let statistic: f64 = resid.iter().zip(&x).map(|(r, y)| r * y).sum();
    if !statistic.is_finite() || statistic < -1e-8 {
        return Err(Error::Singular(format!("Wald statistic {statistic} is not a valid quadratic form")));
    }
    let statistic = statistic.max(0.0);
    Ok(WaldResult {
        statistic,
        df: q,
        p_value: chi_square_upper(q, statistic),
        restriction: (a.to_vec(), c.to_vec()),
    })
}

/// The five named linear restrictions.
pub fn named_hypothesis(name: &str) -> Result<(Vec<[f64; 4]>, Vec<f64>)> {
    let row: [f64; 4] = match name {
        "no-cointegration" => [1.0, 0.0, 0.0, 0.0],
        "zero-phase" => [0.0, 1.0, 0.0, 0.0],
        "purely-nondeterministic" => [0.0, 1.0, PI / 2.0, -PI / 2.0],
        "weak-causality" => [0.0, 1.0, -PI / 2.0, -PI / 2.0],
        "short-memory-error" => [0.0, 0.0, 1.0, 0.0],
        other => {
            return Err(Error::invalid(format!(
                "unknown hypothesis '{other}' (no-cointegration, zero-phase, \
                 purely-nondeterministic, weak-causality, short-memory-error)"
            )))
        }
    };
    Ok((vec![row], vec![0.0]))
}

/// Probability limit of Omega-hat when gamma is (mis)fixed at `gamma_star`:
/// the off-diagonal shrinks by `cos(gamma_star - gamma0)`.
pub fn plim_omega_misspec(gamma_star: f64, gamma0: f64, omega: &OmegaMatrix) -> [[f64; 2]; 2] {
    let c = (gamma_star - gamma0).cos();
    [[omega.w11, omega.w12 * c], [omega.w12 * c, omega.w22]]
}

/// Probability limit of the beta-score at the truth with gamma pinned to
/// `gamma_star`:
///
/// ```text
/// -(2 lambda_m^-nu0 / (1 - nu0)) w12 w22 sin(g* - g0) sin(g*)
///      / (w11 w22 - w12^2 cos^2(g* - g0))
/// ```
///
/// Zero when `g* = g0` or `g* = 0`.
pub fn score_bias_misspec(
    gamma_star: f64,
    gamma0: f64,
    omega: &OmegaMatrix,
    nu0: f64,
    lambda_m: f64,
) -> Result<f64> {
    let tau = gamma_star - gamma0;
    let denom = omega.w11 * omega.w22 - omega.w12 * omega.w12 * tau.cos() * tau.cos();
    if !(denom > 0.0) {
        return Err(Error::domain("degenerate plim denominator"));
    }
    Ok(-(2.0 * lambda_m.powf(-nu0) / (1.0 - nu0)) * omega.w12 * omega.w22 * tau.sin()
        * gamma_star.sin()
        / denom)
}

/// Limiting covariance of the scaled sample mean
/// `diag{n^(1/2-d1), n^(1/2-d2)} (z-bar - E z)`, entry (i, j):
/// `2 pi w_ij cos((i-j) g0) / (Gamma(d_i + d_j + 2) cos(pi (d_i + d_j)/2))`,
/// together with the scaling exponents `(1/2 - d1, 1/2 - d2)`.
pub fn mean_clt_covariance(
    delta0: (f64, f64),
    gamma0: f64,
    omega: &OmegaMatrix,
) -> Result<([[f64; 2]; 2], (f64, f64))> {
    let d = [delta0.0, delta0.1];
    let w = [[omega.w11, omega.w12], [omega.w12, omega.w22]];
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let s = d[i] + d[j];
            if s >= 1.0 {
                return Err(Error::domain(format!("delta_{} + delta_{} = {s} >= 1", i + 1, j + 1)));
            }
            let denom = gamma(s + 2.0) * (PI * s / 2.0).cos();
            if denom == 0.0 {
                return Err(Error::domain("cosine denominator vanishes"));
            }
            let phase = ((i as f64) - (j as f64)) * gamma0;
            out[i][j] = 2.0 * PI * w[i][j] * phase.cos() / denom;
        }
    }
    Ok((out, (0.5 - delta0.0, 0.5 - delta0.1)))
}

/// Theory standard deviations `sqrt(diag(m^-1 Delta^-1 Sigma^-1 Delta^-1))`
/// at a (true or estimated) parameter point.
pub fn theory_sd(sigma: &SigmaMatrix, m: usize, lambda_m: f64) -> Result<[f64; 4]> {
    let sinv = sigma.inverse()?;
    let dinv = [lambda_m.powf(sigma.nu0), 1.0, 1.0, 1.0];
    let mut out = [0.0; 4];
    for k in 0..4 {
        let v = dinv[k] * sinv[k][k] * dinv[k] / m as f64;
        if v < 0.0 {
            return Err(Error::Singular(format!("negative variance for component {k}")));
        }
        out[k] = v.sqrt();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn omega_ratio(r21: f64, r12: f64) -> OmegaMatrix {
        // w11 = 1, w22 = r21, w12 = r12.
        OmegaMatrix::new(1.0, r12, r21).unwrap()
    }

    #[test]
    fn sigma_trivial_cases() {
        // nu = 0, gamma = 0: beta row collapses entirely.
        let om = omega_ratio(4.0, 1.0);
        let s = sigma_matrix(0.0, 0.0, &om).unwrap();
        assert!(s.m[0][0].abs() < 1e-14);
        assert!(s.m[0][1].abs() < 1e-14 && s.m[0][2].abs() < 1e-14 && s.m[0][3].abs() < 1e-14);
        assert!(s.inverse().is_err(), "singular Sigma must refuse inversion");

        // rho = 0 reduces the memory block to the univariate benchmark.
        let om = OmegaMatrix { w11: 1.0, w12: 0.0, w22: 4.0 };
        let s = sigma_matrix(0.3, 0.2, &om).unwrap();
        assert_eq!(s.m[1][1], 0.0);
        assert_eq!(s.m[2][3], 0.0);
        assert_eq!(s.m[2][2], 4.0);
        assert_eq!(s.m[3][3], 4.0);
    }

    #[test]
    fn sigma_symmetry_and_zero_pattern() {
        let om = omega_ratio(4.0, 1.5);
        let s = sigma_matrix(0.2 * PI, 0.4, &om).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(s.m[r][c], s.m[c][r]);
            }
        }
        assert_eq!(s.m[1][2], 0.0);
        assert_eq!(s.m[1][3], 0.0);
        assert_eq!(s.m[0][2], -s.m[0][3]);
        assert!(s.audit.positive_definite, "default form PD at rho = 0.75");
    }

    #[test]
    fn gamma_zero_block_diagonality() {
        // At gamma0 = 0 the (beta, delta) block separates from gamma.
        let om = omega_ratio(4.0, 1.0);
        let s = sigma_matrix(0.0, 0.3, &om).unwrap();
        assert_eq!(s.m[0][1], 0.0);
        assert_eq!(s.m[1][2], 0.0);
        assert_eq!(s.m[1][3], 0.0);
    }

    #[test]
    fn alt_form_goes_indefinite_for_large_rho() {
        let om = omega_ratio(4.0, 2.0 * 0.8); // rho = 0.8
        let alt = sigma_matrix_alt(0.2 * PI, 0.4, &om).unwrap();
        assert!(!alt.audit.positive_definite);
        let std = sigma_matrix(0.2 * PI, 0.4, &om).unwrap();
        assert!(std.audit.positive_definite);
        assert!(std.audit.min_eigenvalue > 0.0);
    }

    #[test]
    fn chi_square_tail_reference_values() {
        // Q(1 df): P(X > 3.841458820694124) = 0.05.
        assert!((chi_square_upper(1, 3.841458820694124) - 0.05).abs() < 1e-10);
        // 2 df: tail is exp(-x/2).
        assert!((chi_square_upper(2, 5.0) - (-2.5f64).exp()).abs() < 1e-12);
        assert_eq!(chi_square_upper(3, 0.0), 1.0);
    }

    #[test]
    fn named_rows_match_identities() {
        let (a, c) = named_hypothesis("purely-nondeterministic").unwrap();
        // theta = (beta, nu0 pi/2, d1, d2) satisfies the restriction.
        let th = [0.7, (0.45 - 0.05) * PI / 2.0, 0.05, 0.45];
        let v: f64 = a[0].iter().zip(&th).map(|(x, y)| x * y).sum::<f64>() - c[0];
        assert!(v.abs() < 1e-15);
        let (a, _) = named_hypothesis("weak-causality").unwrap();
        let th = [0.7, (0.45 + 0.05) * PI / 2.0, 0.05, 0.45];
        let v: f64 = a[0].iter().zip(&th).map(|(x, y)| x * y).sum();
        assert!(v.abs() < 1e-15);
        assert!(named_hypothesis("nonsense").is_err());
    }

    #[test]
    fn misspec_formulas_trivial_zeros() {
        let om = omega_ratio(4.0, 1.5);
        let p = plim_omega_misspec(0.3, 0.3, &om);
        assert_eq!(p[0][1], om.w12);
        let p = plim_omega_misspec(0.3 + PI / 2.0, 0.3, &om);
        assert!(p[0][1].abs() < 1e-16);
        assert_eq!(score_bias_misspec(0.25, 0.25, &om, 0.3, 0.5).unwrap(), 0.0);
        assert_eq!(score_bias_misspec(0.0, 0.25, &om, 0.3, 0.5).unwrap(), 0.0);
        // Nonzero in general.
        assert!(score_bias_misspec(0.4, 0.25, &om, 0.3, 0.5).unwrap().abs() > 0.0);
    }

    #[test]
    fn mean_clt_trivial_cases() {
        let om = omega_ratio(4.0, 1.5);
        let (v, scale) = mean_clt_covariance((0.0, 0.0), 0.7, &om).unwrap();
        // Short memory: 2 pi Omega / (Gamma(2) * 1) regardless of gamma on
        // the diagonal.
        assert!((v[0][0] - 2.0 * PI * om.w11).abs() < 1e-12);
        assert!((v[1][1] - 2.0 * PI * om.w22).abs() < 1e-12);
        assert!((v[0][1] - 2.0 * PI * om.w12 * 0.7f64.cos()).abs() < 1e-12);
        assert_eq!(scale, (0.5, 0.5));
        assert!(mean_clt_covariance((0.5, 0.5), 0.0, &om).is_err());
    }

    #[test]
    fn wald_zero_when_restriction_holds() {
        // Build a synthetic result satisfying beta = 0 exactly.
        use crate::model::ThetaVector;
        use crate::whittle::{BoundaryFlags, EstimateDiagnostics};
        let res = EstimationResult {
            theta_hat: ThetaVector::new(0.0, 0.2, 0.1, 0.4),
            omega_hat: OmegaMatrix::new(1.0, 0.5, 4.0).unwrap(),
            r_min: 0.0,
            converged: true,
            iterations: 3,
            boundary_hit: BoundaryFlags::default(),
            grid_stage_argmin: ThetaVector::new(0.0, 0.2, 0.1, 0.4),
            diagnostics: EstimateDiagnostics::default(),
        };
        let grid = FourierGrid::new(512, 64).unwrap();
        let (a, c) = named_hypothesis("no-cointegration").unwrap();
        let w = wald_test(&res, &grid, &a, &c).unwrap();
        assert!(w.statistic.abs() < 1e-20);
        assert!((w.p_value - 1.0).abs() < 1e-12);

        // Row scaling leaves W unchanged.
        let a2 = vec![[5.0, 0.0, 0.0, 0.0]];
        let c2 = vec![0.0];
        let w2 = wald_test(&res, &grid, &a2, &c2).unwrap();
        assert!((w.statistic - w2.statistic).abs() < 1e-18);

        // Rank-deficient restrictions are rejected.
        let bad = vec![[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]];
        assert!(wald_test(&res, &grid, &bad, &[0.0, 0.0]).is_err());
    }
}
