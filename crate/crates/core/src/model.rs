//! Parameter types, the constrained parameter space, and the phase algebra
//! connecting cross-covariance tails, MA-coefficient tails and the pair
//! `(gamma0, omega12)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::simulate::FarimaSpec;

/// The four estimated parameters: cointegrating coefficient, phase (radians),
/// memory of the cointegrating error, memory of the observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaVector {
    pub beta: f64,
    pub gamma: f64,
    pub delta1: f64,
    pub delta2: f64,
}

impl ThetaVector {
    pub fn new(beta: f64, gamma: f64, delta1: f64, delta2: f64) -> Self {
        Self { beta, gamma, delta1, delta2 }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.beta, self.gamma, self.delta1, self.delta2]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    /// Memory gap `nu = delta2 - delta1`.
    pub fn nu(&self) -> f64 {
        self.delta2 - self.delta1
    }

    /// Check membership in the constrained box of `space`.
    pub fn validate(&self, space: &ThetaSpace) -> Result<()> {
        if !(self.gamma > -PI && self.gamma <= PI) {
            return Err(Error::invalid(format!("gamma {} outside (-pi, pi]", self.gamma)));
        }
        let t = 1e-12;
        if self.beta < space.beta_lo - t || self.beta > space.beta_hi + t {
            return Err(Error::invalid(format!("beta {} outside [{}, {}]", self.beta, space.beta_lo, space.beta_hi)));
        }
        let (glo, ghi) = space.gamma_bounds();
        if self.gamma < glo - t || self.gamma > ghi + t {
            return Err(Error::invalid(format!("gamma {} outside [{glo}, {ghi}]", self.gamma)));
        }
        if self.delta1 < -space.eta1 - t
            || self.delta1 > self.delta2 - space.eta2 + t
            || self.delta2 > 0.5 - space.eta3 + t
        {
            return Err(Error::invalid(format!(
                "(delta1, delta2) = ({}, {}) violates -{} <= d1 <= d2 - {} <= {}",
                self.delta1,
                self.delta2,
                space.eta1,
                space.eta2,
                0.5 - space.eta2 - space.eta3
            )));
        }
        Ok(())
    }
}

/// The compact parameter space Theta, built from the four eta margins and a
/// beta interval. The delta constraint chain is
/// `-eta1 <= delta1 <= delta2 - eta2 <= 1/2 - eta2 - eta3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpace {
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
    pub eta4: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

impl ThetaSpace {
    pub fn new(eta1: f64, eta2: f64, eta3: f64, eta4: f64, beta_lo: f64, beta_hi: f64) -> Result<Self> {
        if !(eta1 > 0.0 && eta1 < eta2.min(eta3)) {
            return Err(Error::invalid("require 0 < eta1 < min(eta2, eta3)"));
        }
        if !(eta2 + eta3 < 0.5) {
            return Err(Error::invalid("require eta2 + eta3 < 1/2"));
        }
        if !(eta4 > 0.0 && eta4 < eta3 - eta1) {
            return Err(Error::invalid("require eta4 in (0, eta3 - eta1)"));
        }
        if !(beta_lo < beta_hi) {
            return Err(Error::invalid("require beta_lo < beta_hi"));
        }
        Ok(Self { eta1, eta2, eta3, eta4, beta_lo, beta_hi })
    }

    /// `[eta4 - pi/2, pi/2 - eta4]`.
    pub fn gamma_bounds(&self) -> (f64, f64) {
        (self.eta4 - PI / 2.0, PI / 2.0 - self.eta4)
    }

    /// Upper bound for delta2: `1/2 - eta3`.
    pub fn delta2_hi(&self) -> f64 {
        0.5 - self.eta3
    }
}

impl Default for ThetaSpace {
    /// The margins used throughout the experiments:
    /// eta1 = 0.01, eta2 = eta3 = 0.02, eta4 = 0.005, beta in [-3, 3].
    fn default() -> Self {
        Self::new(0.01, 0.02, 0.02, 0.005, -3.0, 3.0).unwrap()
    }
}

/// Symmetric 2x2 long-run coefficient matrix Omega.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaMatrix {
    pub w11: f64,
    pub w12: f64,
    pub w22: f64,
}

impl OmegaMatrix {
    pub fn new(w11: f64, w12: f64, w22: f64) -> Result<Self> {
        let m = Self { w11, w12, w22 };
        if !(w11 > 0.0 && w22 > 0.0 && m.det() > 0.0) {
            return Err(Error::invalid(format!(
                "Omega = [[{w11}, {w12}], [{w12}, {w22}]] is not positive definite"
            )));
        }
        Ok(m)
    }

    pub fn det(&self) -> f64 {
        self.w11 * self.w22 - self.w12 * self.w12
    }

    /// Coherence at zero: `rho = w12 / sqrt(w11 w22)`.
    pub fn rho(&self) -> f64 {
        self.w12 / (self.w11 * self.w22).sqrt()
    }

    /// Assumption A6 requires `0 < |rho| < 1`.
    pub fn validate_a6(&self) -> Result<()> {
        let r = self.rho();
        if r == 0.0 {
            return Err(Error::invalid("A6 violated: omega12 = 0 (phase unidentified)"));
        }
        if !(r.abs() < 1.0) {
            return Err(Error::invalid("A6 violated: |rho| >= 1"));
        }
        Ok(())
    }
}

/// One-sided cross-covariance tail weights. `kappa_plus` weights the tail of
/// `cov(u1_t, u2_{t+j})` as `j -> +inf`, `kappa_minus` the `j -> -inf` tail;
/// both decay like `|j|^(chi0 - 1)` with `chi0 = delta01 + delta02`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseKappa {
    pub kappa_plus: f64,
    pub kappa_minus: f64,
    pub chi0: f64,
}

impl PhaseKappa {
    pub fn new(kappa_plus: f64, kappa_minus: f64, chi0: f64) -> Result<Self> {
        if kappa_plus == 0.0 && kappa_minus == 0.0 {
            return Err(Error::invalid("(kappa_plus, kappa_minus) = (0, 0)"));
        }
        if !(chi0 > 0.0 && chi0 < 1.0) {
            return Err(Error::invalid(format!("chi0 = {chi0} outside (0, 1)")));
        }
        Ok(Self { kappa_plus, kappa_minus, chi0 })
    }
}

/// Tail weights of the rows of a (possibly bilateral) MA representation:
/// row k of `C_j` behaves like `xi_plus_k |j|^(delta0k - 1)` as `j -> +inf`
/// and `xi_minus_k |j|^(delta0k - 1)` as `j -> -inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaTailSpec {
    pub xi_plus_1: Vec<f64>,
    pub xi_minus_1: Vec<f64>,
    pub xi_plus_2: Vec<f64>,
    pub xi_minus_2: Vec<f64>,
    pub delta0: (f64, f64),
}

impl MaTailSpec {
    pub fn new(
        xi_plus_1: Vec<f64>,
        xi_minus_1: Vec<f64>,
        xi_plus_2: Vec<f64>,
        xi_minus_2: Vec<f64>,
        delta0: (f64, f64),
    ) -> Result<Self> {
        let p = xi_plus_1.len();
        if p < 2 {
            return Err(Error::invalid("innovation dimension p must be >= 2"));
        }
        if xi_minus_1.len() != p || xi_plus_2.len() != p || xi_minus_2.len() != p {
            return Err(Error::invalid("xi vectors must share a common length p"));
        }
        // Beta-function arguments must be positive, so both memories are
        // required strictly positive here; delta01 = 0 is reachable only
        // through the fractional ARMA generator.
        if !(delta0.0 > 0.0 && delta0.1 > 0.0) {
            return Err(Error::invalid("MA tail spec requires delta01 > 0 and delta02 > 0"));
        }
        if !(delta0.0 + delta0.1 < 1.0) {
            return Err(Error::invalid("require chi0 = delta01 + delta02 < 1"));
        }
        Ok(Self { xi_plus_1, xi_minus_1, xi_plus_2, xi_minus_2, delta0 })
    }

    pub fn chi0(&self) -> f64 {
        self.delta0.0 + self.delta0.1
    }
}

/// Row `row` of the local spectral factor
/// `Phi(lambda; alpha) = diag{|lambda|^d1, |lambda|^d2 e^(-i sign(lambda) gamma)}`.
pub fn phi_entry(lambda: f64, alpha: (f64, f64, f64), row: u8) -> Result<Complex64> {
    let (gamma_, d1, d2) = alpha;
    if lambda == 0.0 {
        return Err(Error::domain("phi_entry undefined at lambda = 0"));
    }
    let a = lambda.abs();
    match row {
        1 => Ok(Complex64::new(a.powf(d1), 0.0)),
        2 => {
            let phase = -lambda.signum() * gamma_;
            Ok(Complex64::from_polar(a.powf(d2), phase))
        }
        _ => Err(Error::invalid("row must be 1 or 2")),
    }
}

/// Map cross-covariance tail weights to `(gamma0, omega12)`:
/// `gamma0 = arctan{((k+ - k-)/(k+ + k-)) tan(pi chi0 / 2)}` and
/// `omega12 = (k+ + k-) Gamma(chi0) cos(pi chi0 / 2) / (2 pi cos gamma0)`.
///
/// When `k+ + k- = 0` the arctan argument degenerates; the continuity limit
/// `gamma0 = sign(k+ - k-) pi/2` is returned (outside the estimation space,
/// relevant only for data-generating designs).
pub fn gamma_from_kappas(pk: &PhaseKappa) -> Result<(f64, f64)> {
    let PhaseKappa { kappa_plus: kp, kappa_minus: km, chi0 } = *pk;
    let half = PI * chi0 / 2.0;
    let sum = kp + km;
    if sum == 0.0 {
        let gamma0 = (kp - km).signum() * PI / 2.0;
        let omega12 = (kp - km).abs() * gamma(chi0) * half.sin() / (2.0 * PI);
        return Ok((gamma0, omega12));
    }
    let gamma0 = (((kp - km) / sum) * half.tan()).atan();
    let omega12 = sum * gamma(chi0) * half.cos() / (2.0 * PI * gamma0.cos());
    Ok((gamma0, omega12))
}

/// Invert [`gamma_from_kappas`]:
/// `kappa_pm = 2 pi omega12 sin(pi chi0/2 +- gamma0) / (Gamma(chi0) sin(pi chi0))`.
///
/// Matching real and imaginary parts of
/// `2 pi omega12 e^{-i gamma0} = Gamma(chi0)(k+ e^{-i pi chi0/2} + k- e^{i pi chi0/2})`
/// gives `k+ + k- = 2 pi w cos g / (G cos h)` and
/// `k+ - k- = 2 pi w sin g / (G sin h)`, hence the closed form above; it
/// reduces to `omega12 = kappa Gamma(chi0)/(2 pi)` in the one-sided cases.
pub fn kappas_from_phase(omega12: f64, chi0: f64, gamma0: f64) -> Result<PhaseKappa> {
    if !(chi0 > 0.0 && chi0 < 1.0) {
        return Err(Error::domain(format!("chi0 = {chi0} outside (0, 1)")));
    }
    if !(gamma0 > -PI / 2.0 && gamma0 < PI / 2.0) {
        return Err(Error::domain(format!("gamma0 = {gamma0} outside (-pi/2, pi/2)")));
    }
    let half = PI * chi0 / 2.0;
    let scale = 2.0 * PI * omega12 / (gamma(chi0) * (PI * chi0).sin());
    let kp = scale * (half + gamma0).sin();
    let km = scale * (half - gamma0).sin();
    PhaseKappa::new(kp, km, chi0)
}

/// Cross-covariance tail weights implied by the MA-coefficient tails.
///
/// With `B` the Beta function and `chi0 = delta01 + delta02`,
///
/// ```text
/// kappa+ = xi+1'xi+2 B(1-chi0, d01) + xi-1'xi+2 B(d02, d01) + xi-1'xi-2 B(1-chi0, d02)
/// kappa- = xi+1'xi+2 B(1-chi0, d02) + xi+1'xi-2 B(d01, d02) + xi-1'xi-2 B(1-chi0, d01)
/// ```
///
/// oriented so that a purely backward representation (`xi- = 0`) yields
/// `gamma0 = +nu0 pi/2` through [`gamma_from_kappas`], consistent with the
/// fractional ARMA case, and a purely forward one yields `-nu0 pi/2`.
pub fn kappas_from_ma_tails(spec: &MaTailSpec) -> Result<PhaseKappa> {
    let (d1, d2) = spec.delta0;
    let chi0 = spec.chi0();
    for (name, v) in [("1 - chi0", 1.0 - chi0), ("delta01", d1), ("delta02", d2)] {
        if v <= 0.0 {
            return Err(Error::domain(format!("Beta argument {name} = {v} <= 0")));
        }
    }
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let pp = dot(&spec.xi_plus_1, &spec.xi_plus_2);
    let pm = dot(&spec.xi_plus_1, &spec.xi_minus_2);
    let mp = dot(&spec.xi_minus_1, &spec.xi_plus_2);
    let mm = dot(&spec.xi_minus_1, &spec.xi_minus_2);
    let kp = pp * beta(1.0 - chi0, d1) + mp * beta(d2, d1) + mm * beta(1.0 - chi0, d2);
    let km = pp * beta(1.0 - chi0, d2) + pm * beta(d1, d2) + mm * beta(1.0 - chi0, d1);
    PhaseKappa::new(kp, km, chi0)
}

/// True `(gamma0, Omega0)` of the fractional ARMA generator:
/// `gamma0 = (d02 - d01) pi/2` and `Omega0 = R / (2 pi a(1)^2)` where
/// `a(L) = 1 - ar L` is the common AR polynomial and `R` the innovation
/// covariance.
pub fn implied_farima_params(spec: &FarimaSpec) -> Result<(f64, OmegaMatrix)> {
    let a1 = 1.0 - spec.ar_coeff;
    if a1 == 0.0 {
        return Err(Error::invalid("AR polynomial has a unit root: a(1) = 0"));
    }
    let gamma0 = (spec.delta0.1 - spec.delta0.0) * PI / 2.0;
    let r = spec.innovation_cov();
    let s = 1.0 / (2.0 * PI * a1 * a1);
    let omega0 = OmegaMatrix::new(r[0][0] * s, r[0][1] * s, r[1][1] * s)?;
    Ok((gamma0, omega0))
}

/// Coefficients of `(1 - L)^(-delta)` up to lag `J`:
/// `c_0 = 1`, `c_j = c_{j-1} (j - 1 + delta) / j`.
pub fn frac_ma_coeffs(delta: f64, j_max: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(j_max + 1);
    c.push(1.0);
    for j in 1..=j_max {
        let jf = j as f64;
        let prev = c[j - 1];
        c.push(prev * (jf - 1.0 + delta) / jf);
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phi_entry_examples() {
        // All exponents zero.
        let v = phi_entry(0.5, (0.0, 0.0, 0.0), 2).unwrap();
        assert!(close(v.re, 1.0, 1e-15) && close(v.im, 0.0, 1e-15));
        // Modulus-1 rotation by -pi/4.
        let v = phi_entry(0.5, (PI / 4.0, 0.0, 0.0), 2).unwrap();
        assert!(close(v.re, (PI / 4.0).cos(), 1e-15));
        assert!(close(v.im, -(PI / 4.0).sin(), 1e-15));
        // Negative lambda flips the sign of the phase.
        let v = phi_entry(-0.5, (PI / 4.0, 0.0, 0.3), 2).unwrap();
        let want = Complex64::from_polar(0.5f64.powf(0.3), PI / 4.0);
        assert!(close(v.re, want.re, 1e-15) && close(v.im, want.im, 1e-15));
        // Row 1 is the plain power.
        let v = phi_entry(0.25, (1.0, 0.4, 0.0), 1).unwrap();
        assert!(close(v.re, 0.25f64.powf(0.4), 1e-15) && v.im == 0.0);
        assert!(phi_entry(0.0, (0.0, 0.0, 0.0), 1).is_err());
    }

    #[test]
    fn gamma_from_kappas_examples() {
        // Symmetric tails: zero phase, exactly.
        for chi in [0.1, 0.3, 0.5, 0.9] {
            for k in [0.3, 1.0, 7.0] {
                let (g, _) = gamma_from_kappas(&PhaseKappa::new(k, k, chi).unwrap()).unwrap();
                assert_eq!(g, 0.0);
            }
        }
        // kappa- = 0 is equivalent to gamma0 = pi chi0 / 2.
        let (g, w) = gamma_from_kappas(&PhaseKappa::new(1.0, 0.0, 0.5).unwrap()).unwrap();
        assert!(close(g, PI / 4.0, 1e-14));
        assert!(close(w, gamma(0.5) / (2.0 * PI), 1e-14));
        assert!(close(gamma(0.5), PI.sqrt(), 1e-13), "Gamma(1/2) = sqrt(pi)");
        // kappa+ = 0 mirrors it.
        let (g, _) = gamma_from_kappas(&PhaseKappa::new(0.0, 1.0, 0.3).unwrap()).unwrap();
        assert!(close(g, -0.15 * PI, 1e-14));
    }

    #[test]
    fn antisymmetric_kappas_hit_the_limit_branch() {
        let (g, w) = gamma_from_kappas(&PhaseKappa::new(1.0, -1.0, 0.4).unwrap()).unwrap();
        assert_eq!(g, PI / 2.0);
        let want = 2.0 * gamma(0.4) * (PI * 0.2).sin() / (2.0 * PI);
        assert!(close(w, want, 1e-14));
        let (g, _) = gamma_from_kappas(&PhaseKappa::new(-2.0, 2.0, 0.4).unwrap()).unwrap();
        assert_eq!(g, -PI / 2.0);
    }

    #[test]
    fn kappas_from_phase_examples() {
        // Symmetry at gamma0 = 0.
        let pk = kappas_from_phase(0.7, 0.5, 0.0).unwrap();
        assert_eq!(pk.kappa_plus, pk.kappa_minus);
        let scale = 2.0 * PI * 0.7 / (gamma(0.5) * (PI * 0.5).sin());
        assert!(close(pk.kappa_plus, scale * (PI / 4.0).sin(), 1e-14));
        // Direct evaluation of the closed form at the half-memory point,
        // where sin(pi chi0) = 1.
        let pk = kappas_from_phase(3.0 / PI, 0.5, 0.0).unwrap();
        assert!(close(pk.kappa_plus, 2.0 * 3.0 * (PI / 4.0).sin() / gamma(0.5), 1e-14));
        assert!(close(pk.kappa_plus, 2.39366, 1e-5));
        // One-sided consistency: at gamma0 = pi chi0/2 the backward weight
        // satisfies omega12 = kappa+ Gamma(chi0) / (2 pi) and kappa- = 0.
        for chi in [0.2, 0.5, 0.8] {
            let w = 1.3;
            let pk = kappas_from_phase(w, chi, PI * chi / 2.0 - 1e-13).unwrap();
            assert!(pk.kappa_minus.abs() < 1e-10);
            assert!(close(pk.kappa_plus * gamma(chi) / (2.0 * PI), w, 1e-10));
        }
    }

    #[test]
    fn kappa_gamma_roundtrip_grid() {
        // Algebraic inverse check on a 20x20 grid, to 1e-12.
        for i in 0..20 {
            for j in 0..20 {
                let gamma0 = -PI / 2.0 + (i as f64 + 0.5) / 20.0 * PI;
                let chi0 = 0.05 + (j as f64) / 19.0 * 0.90;
                let w = 0.8;
                let pk = kappas_from_phase(w, chi0, gamma0).unwrap();
                let (g, ww) = gamma_from_kappas(&pk).unwrap();
                assert!(close(g, gamma0, 1e-12), "gamma {gamma0} chi {chi0}: got {g}");
                assert!(close(ww, w, 1e-12), "omega at {gamma0} {chi0}: got {ww}");
            }
        }
    }

    #[test]
    fn ma_tails_one_sided_gives_fractional_phase() {
        // Backward one-sided: gamma0 = +nu0 pi/2; forward: the negative.
        for &(d1, d2) in &[(0.05, 0.45), (0.1, 0.2), (0.2, 0.3), (0.3, 0.45), (0.05, 0.1)] {
            let nu = d2 - d1;
            let spec = MaTailSpec::new(
                vec![1.0, 0.5],
                vec![0.0, 0.0],
                vec![0.3, 1.1],
                vec![0.0, 0.0],
                (d1, d2),
            )
            .unwrap();
            let (g, _) = gamma_from_kappas(&kappas_from_ma_tails(&spec).unwrap()).unwrap();
            assert!(close(g, nu * PI / 2.0, 1e-10), "backward ({d1},{d2}): {g}");

            let spec = MaTailSpec::new(
                vec![0.0, 0.0],
                vec![1.0, 0.5],
                vec![0.0, 0.0],
                vec![0.3, 1.1],
                (d1, d2),
            )
            .unwrap();
            let (g, _) = gamma_from_kappas(&kappas_from_ma_tails(&spec).unwrap()).unwrap();
            assert!(close(g, -nu * PI / 2.0, 1e-10), "forward ({d1},{d2}): {g}");
        }
    }

    #[test]
    fn ma_tails_symmetric_swap_balances() {
        // Equal memories and xi+ = xi- elementwise give kappa+ = kappa-.
        let spec = MaTailSpec::new(
            vec![0.7, 0.2],
            vec![0.7, 0.2],
            vec![0.4, 1.0],
            vec![0.4, 1.0],
            (0.2, 0.2),
        )
        .unwrap();
        let pk = kappas_from_ma_tails(&spec).unwrap();
        assert!(close(pk.kappa_plus, pk.kappa_minus, 1e-12));
    }

    #[test]
    fn ma_tails_mixed_sides_give_chi_phase() {
        // u1 backward only against u2 forward only: gamma0 = -chi0 pi/2.
        let spec = MaTailSpec::new(
            vec![1.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            (0.15, 0.25),
        )
        .unwrap();
        let pk = kappas_from_ma_tails(&spec).unwrap();
        assert_eq!(pk.kappa_plus, 0.0);
        let (g, _) = gamma_from_kappas(&pk).unwrap();
        assert!(close(g, -0.40 * PI / 2.0, 1e-12));
    }

    #[test]
    fn ma_tail_domain_errors() {
        assert!(MaTailSpec::new(vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0], (0.0, 0.3)).is_err());
        assert!(MaTailSpec::new(vec![1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 0.0], (0.6, 0.45)).is_err());
        assert!(MaTailSpec::new(vec![1.0], vec![0.0], vec![1.0], vec![0.0], (0.1, 0.3)).is_err());
    }

    #[test]
    fn implied_farima_matches_paper_values() {
        let spec = FarimaSpec::paper((0.05, 0.45), 0.75).unwrap();
        let (g, om) = implied_farima_params(&spec).unwrap();
        assert!(close(g, 0.2 * PI, 1e-15));
        assert!(close(om.w12, 3.0 / PI, 1e-12), "omega12 = 4 rho / pi");
        assert!(close(om.w11, 2.0 / PI, 1e-12));
        assert!(close(om.w22, 8.0 / PI, 1e-12));
        assert!(close(om.rho(), 0.75, 1e-12));

        // No AR part: Omega0 = R / (2 pi).
        let mut spec = FarimaSpec::paper((0.1, 0.3), 0.5).unwrap();
        spec.ar_coeff = 0.0;
        let (_, om) = implied_farima_params(&spec).unwrap();
        assert!(close(om.w11, 1.0 / (2.0 * PI), 1e-12));
        assert!(close(om.w22, 4.0 / (2.0 * PI), 1e-12));
    }

    #[test]
    fn frac_coeffs_basics() {
        let c = frac_ma_coeffs(0.0, 5);
        assert_eq!(c, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let c = frac_ma_coeffs(0.45, 3);
        assert!(close(c[1], 0.45, 1e-15));
        assert!(close(c[2], 0.45 * 1.45 / 2.0, 1e-15));
    }

    #[test]
    fn frac_coeffs_stirling_tail() {
        // c_j ~ j^(delta-1) / Gamma(delta) as j grows; within 1% at j = 1e4.
        for delta in [0.05, 0.2, 0.45, -0.3] {
            let j = 10_000usize;
            let c = frac_ma_coeffs(delta, j);
            let asym = (j as f64).powf(delta - 1.0) / gamma(delta);
            assert!(
                (c[j] / asym - 1.0).abs() < 0.01,
                "delta {delta}: ratio {}",
                c[j] / asym
            );
        }
    }

    #[test]
    fn theta_space_default_and_bounds() {
        let s = ThetaSpace::default();
        assert_eq!(s.eta1, 0.01);
        let (lo, hi) = s.gamma_bounds();
        assert!(close(lo, 0.005 - PI / 2.0, 1e-15) && close(hi, PI / 2.0 - 0.005, 1e-15));
        let th = ThetaVector::new(1.0, 0.2 * PI, 0.05, 0.45);
        th.validate(&s).unwrap();
        assert!(ThetaVector::new(4.0, 0.0, 0.0, 0.3).validate(&s).is_err());
        assert!(ThetaVector::new(0.0, 0.0, 0.3, 0.3).validate(&s).is_err());
        assert!(ThetaVector::new(0.0, 0.0, -0.02, 0.3).validate(&s).is_err());
        assert!(ThetaVector::new(0.0, 0.0, 0.0, 0.49).validate(&s).is_err());
        assert!(ThetaVector::new(0.0, 2.0, 0.0, 0.3).validate(&s).is_err());
    }

    proptest! {
        #[test]
        fn theta_space_rejects_bad_etas(
            e1 in 0.0f64..0.2,
            e2 in 0.0f64..0.4,
            e3 in 0.0f64..0.4,
            e4 in 0.0f64..0.2,
        ) {
            let ok = e1 > 0.0 && e1 < e2.min(e3) && e2 + e3 < 0.5 && e4 > 0.0 && e4 < e3 - e1;
            prop_assert_eq!(ThetaSpace::new(e1, e2, e3, e4, -3.0, 3.0).is_ok(), ok);
        }

        #[test]
        fn roundtrip_phase_property(g in -1.45f64..1.45, chi in 0.06f64..0.94, w in 0.05f64..3.0) {
            let pk = kappas_from_phase(w, chi, g).unwrap();
            let (g2, w2) = gamma_from_kappas(&pk).unwrap();
            prop_assert!((g - g2).abs() < 1e-12);
            prop_assert!((w - w2).abs() < 1e-12);
        }
    }
}
