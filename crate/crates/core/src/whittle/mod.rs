//! The local Whittle objective, its closed-form beta profile, analytic
//! derivatives, and the constrained two-stage optimizer.

mod derivs;
mod objective;
mod optimize;

pub use derivs::{fd_hessian, fd_score, hessian, score, score_hessian_alpha};
pub use objective::{objective_r, omega_hat, profile_beta, AlphaSums, ProfileResult};
pub use optimize::{estimate, estimate_known_beta, objective_surface, GridOutcome};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{OmegaMatrix, ThetaSpace, ThetaVector};
use crate::spectra::PeriodogramSet;

/// Choice of the working weight function psi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PsiKind {
    /// `psi(lambda) = |lambda|`.
    #[default]
    Abs,
    /// `psi(lambda) = (1 - e^{i lambda}) e^{i sign(lambda) pi/2}`,
    /// equal to `2 sin(lambda/2) e^{i lambda/2}` on `(0, pi]`.
    Nu,
}

impl PsiKind {
    /// Principal-branch logarithm of `psi(lambda)` for `lambda` in `(0, pi]`.
    pub fn log_psi(&self, lambda: f64) -> Complex64 {
        match self {
            PsiKind::Abs => Complex64::new(lambda.ln(), 0.0),
            PsiKind::Nu => Complex64::new((2.0 * (lambda / 2.0).sin()).ln(), lambda / 2.0),
        }
    }

    /// `psi(lambda)` itself.
    pub fn psi(&self, lambda: f64) -> Complex64 {
        match self {
            PsiKind::Abs => Complex64::new(lambda, 0.0),
            PsiKind::Nu => Complex64::from_polar(2.0 * (lambda / 2.0).sin(), lambda / 2.0),
        }
    }
}

impl std::fmt::Display for PsiKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsiKind::Abs => write!(f, "abs"),
            PsiKind::Nu => write!(f, "nu"),
        }
    }
}

impl std::str::FromStr for PsiKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "abs" => Ok(PsiKind::Abs),
            "nu" => Ok(PsiKind::Nu),
            other => Err(Error::invalid(format!("unknown psi kind '{other}' (abs|nu)"))),
        }
    }
}

/// Everything the objective needs, precomputed once per (series, m, psi):
/// spectrally normalized periodogram entries `I(lambda_j)/(2 pi)` and the
/// per-frequency values of `log psi(lambda_j)`.
#[derive(Debug, Clone)]
pub struct ObjectiveContext {
    pub psi: PsiKind,
    pub n: usize,
    pub m: usize,
    pub lambdas: Vec<f64>,
    /// Re and Im of the principal `log psi(lambda_j)`.
    pub log_abs: Vec<f64>,
    pub log_arg: Vec<f64>,
    /// Mean of `log|psi(lambda_j)|` over the band.
    pub lbar: f64,
    // Periodogram entries divided by 2 pi, so that Omega-hat is on the
    // spectral-density scale of the local model.
    pub(crate) j11: Vec<f64>,
    pub(crate) j22: Vec<f64>,
    pub(crate) j12: Vec<Complex64>,
}

impl ObjectiveContext {
    pub fn new(pset: &PeriodogramSet, psi: PsiKind) -> Self {
        let m = pset.grid.m;
        let mut log_abs = Vec::with_capacity(m);
        let mut log_arg = Vec::with_capacity(m);
        for &lam in &pset.grid.lambdas {
            let l = psi.log_psi(lam);
            log_abs.push(l.re);
            log_arg.push(l.im);
        }
        let lbar = log_abs.iter().sum::<f64>() / m as f64;
        let s = 0.5 / std::f64::consts::PI;
        ObjectiveContext {
            psi,
            n: pset.grid.n,
            m,
            lambdas: pset.grid.lambdas.clone(),
            log_abs,
            log_arg,
            lbar,
            j11: pset.i11.iter().map(|v| v * s).collect(),
            j22: pset.i22.iter().map(|v| v * s).collect(),
            j12: pset.i12.iter().map(|v| v * s).collect(),
        }
    }

    pub fn lambda_m(&self) -> f64 {
        self.lambdas[self.m - 1]
    }
}

/// Per-coordinate boundary contact of the final estimate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryFlags {
    pub beta: bool,
    pub gamma: bool,
    pub delta1: bool,
    pub delta2: bool,
}

impl BoundaryFlags {
    pub fn any(&self) -> bool {
        self.beta || self.gamma || self.delta1 || self.delta2
    }

    /// Which bounds theta touches, within `tol`.
    pub fn detect(theta: &ThetaVector, space: &ThetaSpace, tol: f64) -> Self {
        let (glo, ghi) = space.gamma_bounds();
        let chain = (theta.delta1 - (theta.delta2 - space.eta2)).abs() <= tol;
        BoundaryFlags {
            beta: (theta.beta - space.beta_lo).abs() <= tol || (theta.beta - space.beta_hi).abs() <= tol,
            gamma: (theta.gamma - glo).abs() <= tol || (theta.gamma - ghi).abs() <= tol,
            delta1: (theta.delta1 + space.eta1).abs() <= tol || chain,
            delta2: (theta.delta2 - space.delta2_hi()).abs() <= tol || chain,
        }
    }
}

/// Optimizer diagnostics carried alongside the estimate.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EstimateDiagnostics {
    /// Omega-hat at the optimum is numerically singular (relative det below
    /// 1e-12), e.g. under exact collinearity.
    pub degenerate: bool,
    /// Grid points where det Omega-hat <= 0 (objective reported +inf).
    pub degenerate_grid_points: usize,
    /// Grid points where the profile quadratic had c2 <= 0 and the
    /// golden-section fallback was used.
    pub profile_fallbacks: usize,
}

/// Result of a full estimation run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationResult {
    pub theta_hat: ThetaVector,
    pub omega_hat: OmegaMatrix,
    pub r_min: f64,
    pub converged: bool,
    pub iterations: usize,
    pub boundary_hit: BoundaryFlags,
    pub grid_stage_argmin: ThetaVector,
    pub diagnostics: EstimateDiagnostics,
}

/// Hessian used in the Newton stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NewtonHessian {
    /// The analytic second-derivative matrix of R.
    #[default]
    Analytic,
    /// The plug-in surrogate `2 Delta-hat Sigma-hat Delta-hat`.
    Surrogate,
}

/// Starting point for the Newton stage.
#[derive(Debug, Clone, PartialEq)]
pub enum StartStrategy {
    /// Coarse profiled grid over alpha (the default).
    Grid,
    /// Closed-form baselines (narrow-band LS beta, simple gamma, univariate
    /// local Whittle memories), projected into the parameter space.
    Baselines,
    /// A caller-supplied starting point.
    Fixed(ThetaVector),
}

/// Tuning knobs of [`estimate`]. Defaults follow the documented design:
/// 25 gamma grid points, delta step 0.025, Newton tolerance 1e-8, at most
/// 100 iterations, analytic Hessian.
#[derive(Debug, Clone)]
pub struct EstimateOptions {
    pub gamma_grid_points: usize,
    pub delta_grid_step: f64,
    pub newton_tol: f64,
    pub max_iterations: usize,
    pub hessian: NewtonHessian,
    pub start: StartStrategy,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        Self {
            gamma_grid_points: 25,
            delta_grid_step: 0.025,
            newton_tol: 1e-8,
            max_iterations: 100,
            hessian: NewtonHessian::Analytic,
            start: StartStrategy::Grid,
        }
    }
}

/// Default bandwidth `floor(n^(2/3))`.
pub fn default_bandwidth(n: usize) -> usize {
    let x = (n as f64).cbrt();
    (x * x + 1e-9).floor() as usize
}

/// The three bandwidth presets: round(n^(2/3)/2), round(n^(2/3)), round(2 n^(2/3)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthPreset {
    Half,
    One,
    Two,
}

pub fn bandwidth_preset(n: usize, preset: BandwidthPreset) -> usize {
    let x = (n as f64).cbrt();
    let base = x * x;
    let v = match preset {
        BandwidthPreset::Half => base / 2.0,
        BandwidthPreset::One => base,
        BandwidthPreset::Two => 2.0 * base,
    };
    v.round() as usize
}

/// Golden-section minimization of a unimodal scalar function on [lo, hi].
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_invariants() {
        for lam in [0.01, 0.5, 1.0, 2.0, std::f64::consts::PI] {
            let nu = PsiKind::Nu.psi(lam);
            assert!((nu.norm() - 2.0 * (lam / 2.0).sin().abs()).abs() < 1e-14);
            // psi(-lambda) = conj(psi(lambda)) for the nu form.
            let neg = (Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -lam))
                * Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_2);
            assert!((neg - nu.conj()).norm() < 1e-14);
            // log_psi is the principal log of psi.
            let l = PsiKind::Nu.log_psi(lam);
            assert!((l.re - nu.norm().ln()).abs() < 1e-14);
            assert!((l.im - nu.arg()).abs() < 1e-14);
        }
    }

    #[test]
    fn bandwidth_rules_match_published_values() {
        assert_eq!(default_bandwidth(512), 64);
        assert_eq!(default_bandwidth(2048), 161);
        assert_eq!(default_bandwidth(8192), 406);
        for (n, want) in [(128, 13), (512, 32), (2048, 81)] {
            assert_eq!(bandwidth_preset(n, BandwidthPreset::Half), want);
        }
        for (n, want) in [(128, 25), (512, 64), (2048, 161)] {
            assert_eq!(bandwidth_preset(n, BandwidthPreset::One), want);
        }
        for (n, want) in [(128, 51), (512, 128), (2048, 323)] {
            assert_eq!(bandwidth_preset(n, BandwidthPreset::Two), want);
        }
    }

    #[test]
    fn golden_section_finds_quadratic_minimum() {
        // Accuracy near a quadratic minimum is plateau-limited at sqrt(eps).
        let x = golden_min(|x| (x - 1.3) * (x - 1.3) + 2.0, -3.0, 3.0, 1e-10);
        assert!((x - 1.3).abs() < 2e-7);
    }
}
