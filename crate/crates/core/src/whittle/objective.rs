//! The concentrated objective `R(theta)` and its closed-form beta profile.
//!
//! With `Psi_j = diag{psi_j^d1, psi_j^d2 e^{-i gamma}}` and
//! `B = [[1, -beta], [0, 1]]`, the minimized-over-Omega objective is
//! `R(theta) = log det Omega-hat(theta) - 2 (d1 + d2) mean_j log|psi_j|`,
//! where `Omega-hat(theta) = Re{ mean_j Psi_j B (I_j / 2 pi) B' conj(Psi_j) }`.

use num_complex::Complex64;

use super::ObjectiveContext;
use crate::error::{Error, Result};
use crate::model::{OmegaMatrix, ThetaSpace, ThetaVector};

/// Frequency averages entering the objective for a fixed `(delta1, delta2)`;
/// beta and gamma act on them in closed form. All are already divided by m
/// and the periodogram scale 2 pi.
#[derive(Debug, Clone, Copy)]
pub struct AlphaSums {
    /// mean w1_j I11_j, w1_j = |psi_j^d1|^2
    pub sa: f64,
    /// mean w1_j 2 Re I12_j
    pub sb: f64,
    /// mean w1_j I22_j
    pub sc: f64,
    /// mean w2_j I22_j, w2_j = |psi_j^d2|^2
    pub sd: f64,
    /// mean q_j I12_j, q_j = psi_j^d1 conj(psi_j^d2)
    pub t12: Complex64,
    /// mean q_j I22_j
    pub t22: Complex64,
}

impl ObjectiveContext {
    /// Accumulate the six weighted periodogram averages for one delta pair.
    pub fn alpha_sums(&self, delta1: f64, delta2: f64) -> AlphaSums {
        let mut sa = 0.0;
        let mut sb = 0.0;
        let mut sc = 0.0;
        let mut sd = 0.0;
        let mut t12 = Complex64::new(0.0, 0.0);
        let mut t22 = Complex64::new(0.0, 0.0);
        for j in 0..self.m {
            let a = self.log_abs[j];
            let w1 = (2.0 * delta1 * a).exp();
            let w2 = (2.0 * delta2 * a).exp();
            let q = Complex64::from_polar((w1 * w2).sqrt(), (delta1 - delta2) * self.log_arg[j]);
            sa += w1 * self.j11[j];
            sb += w1 * 2.0 * self.j12[j].re;
            sc += w1 * self.j22[j];
            sd += w2 * self.j22[j];
            t12 += q * self.j12[j];
            t22 += q * self.j22[j];
        }
        let inv = 1.0 / self.m as f64;
        AlphaSums {
            sa: sa * inv,
            sb: sb * inv,
            sc: sc * inv,
            sd: sd * inv,
            t12: t12 * inv,
            t22: t22 * inv,
        }
    }
}

/// Assemble Omega-hat(theta) from the averages.
pub(crate) fn omega_from_sums(s: &AlphaSums, beta: f64, gamma: f64) -> OmegaMatrix {
    let rot = Complex64::from_polar(1.0, gamma);
    let w11 = s.sa - beta * s.sb + beta * beta * s.sc;
    let w12 = (rot * (s.t12 - beta * s.t22)).re;
    OmegaMatrix { w11, w12, w22: s.sd }
}

/// `Omega-hat(theta)`: symmetric, positive semidefinite (possibly singular
/// for degenerate data).
pub fn omega_hat(ctx: &ObjectiveContext, theta: &ThetaVector) -> OmegaMatrix {
    let s = ctx.alpha_sums(theta.delta1, theta.delta2);
    omega_from_sums(&s, theta.beta, theta.gamma)
}

/// The concentrated objective. Errors with [`Error::Degenerate`] when
/// `det Omega-hat(theta) <= 0`, which the optimizer treats as +infinity.
pub fn objective_r(ctx: &ObjectiveContext, theta: &ThetaVector) -> Result<f64> {
    let om = omega_hat(ctx, theta);
    let det = om.det();
    if !(det > 0.0) {
        return Err(Error::Degenerate(format!("det Omega-hat = {det} <= 0 at theta = {theta:?}")));
    }
    Ok(det.ln() - 2.0 * (theta.delta1 + theta.delta2) * ctx.lbar)
}

/// Outcome of profiling beta out of the objective at a fixed alpha.
#[derive(Debug, Clone, Copy)]
pub struct ProfileResult {
    pub beta_star: f64,
    /// det Omega-hat(beta) = c0 + c1 beta + c2 beta^2.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// c2 <= 0: the quadratic is degenerate and a golden-section search
    /// over the beta interval produced `beta_star`.
    pub degenerate: bool,
}

pub(crate) fn profile_from_sums(s: &AlphaSums, gamma: f64, space: &ThetaSpace) -> ProfileResult {
    let rot = Complex64::from_polar(1.0, gamma);
    let u = (rot * s.t12).re;
    let v = (rot * s.t22).re;
    let c0 = s.sa * s.sd - u * u;
    let c1 = -s.sb * s.sd + 2.0 * u * v;
    let c2 = s.sc * s.sd - v * v;
    if c2 > 0.0 {
        let beta_star = (-c1 / (2.0 * c2)).clamp(space.beta_lo, space.beta_hi);
        ProfileResult { beta_star, c0, c1, c2, degenerate: false }
    } else {
        let det = |b: f64| c0 + c1 * b + c2 * b * b;
        let beta_star = super::golden_min(det, space.beta_lo, space.beta_hi, 1e-12);
        // A concave quadratic attains its minimum at an endpoint; snap there.
        let beta_star = if det(space.beta_lo) <= det(space.beta_hi).min(det(beta_star)) {
            space.beta_lo
        } else if det(space.beta_hi) <= det(beta_star) {
            space.beta_hi
        } else {
            beta_star
        };
        ProfileResult { beta_star, c0, c1, c2, degenerate: true }
    }
}

/// Closed-form beta profile at fixed `alpha = (gamma, delta1, delta2)`:
/// expands `det Omega-hat(theta) = c0 + c1 beta + c2 beta^2` and returns the
/// minimizer clipped to the beta interval of `space`.
pub fn profile_beta(
    ctx: &ObjectiveContext,
    alpha: (f64, f64, f64),
    space: &ThetaSpace,
) -> ProfileResult {
    let (gamma, delta1, delta2) = alpha;
    let s = ctx.alpha_sums(delta1, delta2);
    profile_from_sums(&s, gamma, space)
}
