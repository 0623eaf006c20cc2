//! Analytic first and second derivatives of the objective.
//!
//! Per frequency the quadratic form is `A_j = F_j K_j F_j^H` with
//! `F_j = Psi_j B` and `K_j = I_z(lambda_j)/(2 pi)`. Each derivative of
//! `F_j` in `(beta, gamma, delta1, delta2)` is a sparse 2x2 matrix, so
//! `dOmega/dtheta_k = mean Re{G + G^H}` with `G = dF K F^H`, and similarly
//! for second derivatives. The finite-difference oracle in the test suite
//! is the referee for every sign convention here.

use num_complex::Complex64;

use super::ObjectiveContext;
use crate::error::{Error, Result};
use crate::model::ThetaVector;

type C = Complex64;
type Mat2 = [[C; 2]; 2];

const ZERO: C = C::new(0.0, 0.0);

fn zero2() -> Mat2 {
    [[ZERO, ZERO], [ZERO, ZERO]]
}

fn mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = zero2();
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

fn adjoint(a: &Mat2) -> Mat2 {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// Re(X) + Re(X)': the real symmetric contribution of X + X^H.
fn sym2(x: &Mat2) -> [[f64; 2]; 2] {
    [
        [2.0 * x[0][0].re, x[0][1].re + x[1][0].re],
        [x[0][1].re + x[1][0].re, 2.0 * x[1][1].re],
    ]
}

#[derive(Debug, Clone)]
pub(crate) struct Derivatives {
    pub omega: [[f64; 2]; 2],
    pub d1: [[[f64; 2]; 2]; 4],
    pub d2: [[[[f64; 2]; 2]; 4]; 4],
}

/// Accumulate Omega-hat and its first (and optionally second) derivative
/// matrices at `theta`.
pub(crate) fn omega_derivatives(
    ctx: &ObjectiveContext,
    theta: &ThetaVector,
    with_second: bool,
) -> Derivatives {
    let ThetaVector { beta, gamma, delta1, delta2 } = *theta;
    let mut omega = [[0.0; 2]; 2];
    let mut d1 = [[[0.0; 2]; 2]; 4];
    let mut d2 = [[[[0.0; 2]; 2]; 4]; 4];
    let i = C::new(0.0, 1.0);

    for j in 0..ctx.m {
        let l = C::new(ctx.log_abs[j], ctx.log_arg[j]);
        let p1 = (delta1 * l).exp();
        let p2 = (delta2 * l).exp() * C::from_polar(1.0, -gamma);
        let k: Mat2 = [
            [C::new(ctx.j11[j], 0.0), ctx.j12[j]],
            [ctx.j12[j].conj(), C::new(ctx.j22[j], 0.0)],
        ];

        let f: Mat2 = [[p1, -beta * p1], [ZERO, p2]];
        let fh = adjoint(&f);
        let kfh = mul(&k, &fh);

        // A_j = F K F^H contributes Re to Omega.
        let a = mul(&f, &kfh);
        omega[0][0] += a[0][0].re;
        omega[0][1] += a[0][1].re;
        omega[1][0] += a[1][0].re;
        omega[1][1] += a[1][1].re;

        // First derivatives of F.
        let df: [Mat2; 4] = [
            [[ZERO, -p1], [ZERO, ZERO]],                    // beta
            [[ZERO, ZERO], [ZERO, -i * p2]],                // gamma
            [[l * p1, -beta * l * p1], [ZERO, ZERO]],       // delta1
            [[ZERO, ZERO], [ZERO, l * p2]],                 // delta2
        ];
        for kk in 0..4 {
            let g = mul(&df[kk], &kfh);
            let s = sym2(&g);
            for r in 0..2 {
                for c in 0..2 {
                    d1[kk][r][c] += s[r][c];
                }
            }
        }

        if with_second {
            // Nonzero second derivatives of F.
            let mut dff: [[Option<Mat2>; 4]; 4] = Default::default();
            dff[0][2] = Some([[ZERO, -l * p1], [ZERO, ZERO]]); // beta, delta1
            dff[1][1] = Some([[ZERO, ZERO], [ZERO, -p2]]); // gamma, gamma
            dff[1][3] = Some([[ZERO, ZERO], [ZERO, -i * l * p2]]); // gamma, delta2
            dff[2][2] = Some([[l * l * p1, -beta * l * l * p1], [ZERO, ZERO]]); // d1, d1
            dff[3][3] = Some([[ZERO, ZERO], [ZERO, l * l * p2]]); // d2, d2

            for kk in 0..4 {
                for ll in kk..4 {
                    let mut acc = [[0.0; 2]; 2];
                    if let Some(fkl) = &dff[kk][ll] {
                        let t1 = mul(fkl, &kfh);
                        let s = sym2(&t1);
                        for r in 0..2 {
                            for c in 0..2 {
                                acc[r][c] += s[r][c];
                            }
                        }
                    }
                    let t2 = mul(&df[kk], &mul(&k, &adjoint(&df[ll])));
                    let s = sym2(&t2);
                    for r in 0..2 {
                        for c in 0..2 {
                            acc[r][c] += s[r][c];
                        }
                    }
                    for r in 0..2 {
                        for c in 0..2 {
                            d2[kk][ll][r][c] += acc[r][c];
                            if ll != kk {
                                d2[ll][kk][r][c] += acc[r][c];
                            }
                        }
                    }
                }
            }
        }
    }

    let inv = 1.0 / ctx.m as f64;
    for v in omega.iter_mut().flatten() {
        *v *= inv;
    }
    for mat in d1.iter_mut() {
        for v in mat.iter_mut().flatten() {
            *v *= inv;
        }
    }
    if with_second {
        for row in d2.iter_mut() {
            for mat in row.iter_mut() {
                for v in mat.iter_mut().flatten() {
                    *v *= inv;
                }
            }
        }
    }
    Derivatives { omega, d1, d2 }
}

fn inv2(a: &[[f64; 2]; 2]) -> Result<[[f64; 2]; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if !(det > 0.0) || !det.is_finite() {
        return Err(Error::Singular(format!("Omega-hat has det {det}")));
    }
    Ok([[a[1][1] / det, -a[0][1] / det], [-a[1][0] / det, a[0][0] / det]])
}

fn tr_prod(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

/// Analytic gradient of the objective:
/// `s_k = tr{Omega^-1 dOmega/dtheta_k} - 1(k is a memory) 2 mean log|psi_j|`.
pub fn score(ctx: &ObjectiveContext, theta: &ThetaVector) -> Result<[f64; 4]> {
    let d = omega_derivatives(ctx, theta, false);
    let oinv = inv2(&d.omega)?;
    let mut s = [0.0; 4];
    for k in 0..4 {
        s[k] = tr_prod(&oinv, &d.d1[k]);
        if k >= 2 {
            s[k] -= 2.0 * ctx.lbar;
        }
    }
    Ok(s)
}

/// Analytic Hessian of the objective; symmetric by construction.
pub fn hessian(ctx: &ObjectiveContext, theta: &ThetaVector) -> Result<[[f64; 4]; 4]> {
    let d = omega_derivatives(ctx, theta, true);
    let oinv = inv2(&d.omega)?;
    let mut h = [[0.0; 4]; 4];
    let prods: Vec<[[f64; 2]; 2]> = (0..4).map(|k| mul2(&oinv, &d.d1[k])).collect();
    for k in 0..4 {
        for l in k..4 {
            let t1 = tr_prod(&oinv, &d.d2[k][l]);
            let t2 = {
                let pk = &prods[k];
                let pl = &prods[l];
                pk[0][0] * pl[0][0]
                    + pk[0][1] * pl[1][0]
                    + pk[1][0] * pl[0][1]
                    + pk[1][1] * pl[1][1]
            };
            h[k][l] = t1 - t2;
            h[l][k] = h[k][l];
        }
    }
    Ok(h)
}

/// Score and Hessian restricted to `alpha = (gamma, delta1, delta2)`,
/// used when beta is known and held fixed.
pub fn score_hessian_alpha(
    ctx: &ObjectiveContext,
    theta: &ThetaVector,
) -> Result<([f64; 3], [[f64; 3]; 3])> {
    let s = score(ctx, theta)?;
    let h = hessian(ctx, theta)?;
    let mut s3 = [0.0; 3];
    let mut h3 = [[0.0; 3]; 3];
    for k in 0..3 {
        s3[k] = s[k + 1];
        for l in 0..3 {
            h3[k][l] = h[k + 1][l + 1];
        }
    }
    Ok((s3, h3))
}

/// Central finite differences of the objective, used by tests and as the
/// documented referee of the analytic formulas.
pub fn fd_score(ctx: &ObjectiveContext, theta: &ThetaVector, h: f64) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    let base = theta.as_array();
    for k in 0..4 {
        let mut up = base;
        let mut dn = base;
        up[k] += h;
        dn[k] -= h;
        let fu = super::objective_r(ctx, &ThetaVector::from_array(up))?;
        let fd = super::objective_r(ctx, &ThetaVector::from_array(dn))?;
        out[k] = (fu - fd) / (2.0 * h);
    }
    Ok(out)
}

/// Central finite differences of the analytic score (a Hessian oracle).
pub fn fd_hessian(ctx: &ObjectiveContext, theta: &ThetaVector, h: f64) -> Result<[[f64; 4]; 4]> {
    let mut out = [[0.0; 4]; 4];
    let base = theta.as_array();
    for l in 0..4 {
        let mut up = base;
        let mut dn = base;
        up[l] += h;
        dn[l] -= h;
        let su = score(ctx, &ThetaVector::from_array(up))?;
        let sd = score(ctx, &ThetaVector::from_array(dn))?;
        for k in 0..4 {
            out[k][l] = (su[k] - sd[k]) / (2.0 * h);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{simulate_u, DgpSpec, FarimaSpec};
    use crate::spectra::periodogram;
    use crate::whittle::PsiKind;

    fn context(seed: u64, psi: PsiKind) -> ObjectiveContext {
        let spec = DgpSpec::Farima(FarimaSpec::paper((0.1, 0.35), 0.6).unwrap());
        let u = simulate_u(&spec, 256, seed).unwrap();
        let z = crate::simulate::assemble_system(&u, 0.8);
        ObjectiveContext::new(&periodogram(&z, 40).unwrap(), psi)
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn score_matches_finite_differences_both_psi() {
        for (seed, psi) in [(1u64, PsiKind::Abs), (2, PsiKind::Nu), (3, PsiKind::Abs), (4, PsiKind::Nu)] {
            let ctx = context(seed, psi);
            let theta = ThetaVector::new(0.7, 0.3, 0.08, 0.3);
            let s = score(&ctx, &theta).unwrap();
            let f = fd_score(&ctx, &theta, 1e-6).unwrap();
            for k in 0..4 {
                assert!(
                    rel_err(s[k], f[k]) < 1e-5,
                    "psi {psi:?} component {k}: analytic {} vs fd {}",
                    s[k],
                    f[k]
                );
            }
        }
    }

    #[test]
    fn hessian_matches_fd_and_is_symmetric() {
        for (seed, psi) in [(5u64, PsiKind::Abs), (6, PsiKind::Nu)] {
            let ctx = context(seed, psi);
            let theta = ThetaVector::new(-0.4, -0.5, 0.0, 0.25);
            let h = hessian(&ctx, &theta).unwrap();
            for k in 0..4 {
                for l in 0..4 {
                    assert_eq!(h[k][l], h[l][k], "exact symmetry");
                }
            }
            let f = fd_hessian(&ctx, &theta, 1e-5).unwrap();
            for k in 0..4 {
                for l in 0..4 {
                    assert!(
                        rel_err(h[k][l], f[k][l]) < 1e-4,
                        "psi {psi:?} entry ({k},{l}): {} vs {}",
                        h[k][l],
                        f[k][l]
                    );
                }
            }
        }
    }

    #[test]
    fn omega_from_derivs_agrees_with_objective_path() {
        let ctx = context(9, PsiKind::Abs);
        let theta = ThetaVector::new(0.3, -0.2, 0.05, 0.4);
        let d = omega_derivatives(&ctx, &theta, false);
        let om = super::super::omega_hat(&ctx, &theta);
        assert!((d.omega[0][0] - om.w11).abs() < 1e-12);
        assert!((d.omega[0][1] - om.w12).abs() < 1e-12);
        assert!((d.omega[1][1] - om.w22).abs() < 1e-12);
        assert!((d.omega[0][1] - d.omega[1][0]).abs() < 1e-12);
    }
}
