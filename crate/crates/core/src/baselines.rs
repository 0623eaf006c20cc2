//! Simple closed-form estimators: narrow-band least squares for beta, the
//! arctan phase estimate, and univariate local Whittle for a memory
//! parameter. Used for comparison and as Newton starting values.

use crate::error::{Error, Result};
use crate::model::{ThetaSpace, ThetaVector};
use crate::spectra::PeriodogramSet;
use crate::whittle::golden_min;

/// Narrow-band least squares:
/// `beta-tilde = Re{sum_j I_yx(lambda_j)} / sum_j I_x(lambda_j)`.
pub fn nbls_beta(pset: &PeriodogramSet) -> Result<f64> {
    let num: f64 = pset.i12.iter().map(|v| v.re).sum();
    let den: f64 = pset.i22.iter().sum();
    if !(den > 0.0) {
        return Err(Error::Degenerate("sum of I_x ordinates is zero (constant x?)".into()));
    }
    Ok(num / den)
}

/// Simple phase estimate from the beta-corrected cross-periodogram
/// `s(lambda) = I_yx(lambda) - beta-tilde I_x(lambda)`:
/// `gamma-tilde = arctan[Im{sum s} / Re{sum s}]` in `(-pi/2, pi/2)`.
pub fn simple_gamma(pset: &PeriodogramSet, beta_tilde: f64) -> Result<f64> {
    let mut re = 0.0;
    let mut im = 0.0;
    for (idx, v) in pset.i12.iter().enumerate() {
        re += v.re - beta_tilde * pset.i22[idx];
        im += v.im;
    }
    if re == 0.0 {
        return Err(Error::Degenerate(
            "Re{sum s(lambda_j)} = 0: phase orientation undefined".into(),
        ));
    }
    Ok((im / re).atan())
}

/// Univariate local Whittle memory estimate on a scalar series:
/// argmin over `delta_range` of
/// `log{mean_j lambda_j^(2 delta) I(lambda_j)} - 2 delta mean_j log lambda_j`,
/// by coarse grid plus golden-section refinement.
pub fn univariate_lw(series: &[f64], m: usize, delta_range: (f64, f64)) -> Result<f64> {
    let n = series.len();
    if m < 1 || 2 * m > n {
        return Err(Error::invalid(format!("bandwidth m = {m} outside [1, n/2]")));
    }
    if delta_range.0 >= delta_range.1 {
        return Err(Error::invalid("empty delta range"));
    }
    // Scalar periodogram at the first m Fourier frequencies.
    let z: Vec<[f64; 2]> = series.iter().map(|&v| [v, 0.0]).collect();
    let pset = crate::spectra::periodogram(&z, m)?;
    let i: Vec<f64> = pset.i11.clone();
    if i.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Degenerate("zero periodogram (constant series?)".into()));
    }
    let loglam: Vec<f64> = pset.grid.lambdas.iter().map(|l| l.ln()).collect();
    let lbar = loglam.iter().sum::<f64>() / m as f64;
    let objective = |d: f64| -> f64 {
        let g: f64 = i
            .iter()
            .zip(&loglam)
            .map(|(v, l)| (2.0 * d * l).exp() * v)
            .sum::<f64>()
            / m as f64;
        g.ln() - 2.0 * d * lbar
    };
    // Coarse bracket, then golden section inside the bracketing cell.
    let grid_n = 50usize;
    let step = (delta_range.1 - delta_range.0) / grid_n as f64;
    let mut best_k = 0usize;
    let mut best_v = f64::INFINITY;
    for k in 0..=grid_n {
        let v = objective(delta_range.0 + step * k as f64);
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    let lo = delta_range.0 + step * best_k.saturating_sub(1) as f64;
    let hi = (delta_range.0 + step * (best_k + 1) as f64).min(delta_range.1);
    Ok(golden_min(objective, lo, hi, 1e-8))
}

/// Default search range for [`univariate_lw`].
pub const LW_DELTA_RANGE: (f64, f64) = (-0.48, 0.49);

/// Baseline starting point for the Newton stage: narrow-band beta, simple
/// gamma, univariate memories of `y - beta x` and `x`. The caller projects
/// it into the parameter space.
pub fn baseline_start(pset: &PeriodogramSet, _space: &ThetaSpace) -> Result<ThetaVector> {
    let beta = nbls_beta(pset)?;
    let gamma = simple_gamma(pset, beta)?;
    // Memories need the raw series, which the periodogram no longer holds;
    // recover them from univariate objectives on the two diagonal entries.
    let d2 = univariate_lw_from_ordinates(&pset.i22, &pset.grid.lambdas)?;
    let resid: Vec<f64> = pset
        .i11
        .iter()
        .zip(pset.i12.iter())
        .zip(pset.i22.iter())
        .map(|((i11, i12), i22)| i11 - 2.0 * beta * i12.re + beta * beta * i22)
        .collect();
    let d1 = univariate_lw_from_ordinates(&resid, &pset.grid.lambdas)?;
    Ok(ThetaVector::new(beta, gamma, d1, d2))
}

/// Local Whittle memory from precomputed periodogram ordinates.
fn univariate_lw_from_ordinates(i: &[f64], lambdas: &[f64]) -> Result<f64> {
    let m = i.len();
    if i.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Degenerate("zero periodogram".into()));
    }
    let loglam: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let lbar = loglam.iter().sum::<f64>() / m as f64;
    let objective = |d: f64| -> f64 {
        let g: f64 =
            i.iter().zip(&loglam).map(|(v, l)| (2.0 * d * l).exp() * v).sum::<f64>() / m as f64;
        g.ln() - 2.0 * d * lbar
    };
    let (lo, hi) = LW_DELTA_RANGE;
    let grid_n = 50usize;
    let step = (hi - lo) / grid_n as f64;
    let mut best_k = 0usize;
    let mut best_v = f64::INFINITY;
    for k in 0..=grid_n {
        let v = objective(lo + step * k as f64);
        if v < best_v {
            best_v = v;
            best_k = k;
        }
    }
    Ok(golden_min(
        objective,
        lo + step * best_k.saturating_sub(1) as f64,
        (lo + step * (best_k + 1) as f64).min(hi),
        1e-8,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{assemble_system, simulate_u, DgpSpec, FarimaSpec};
    use crate::spectra::periodogram;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn nbls_exact_collinearity() {
        let x = noise(256, 1);
        let z: Vec<[f64; 2]> = x.iter().map(|&v| [2.5 * v, v]).collect();
        let pset = periodogram(&z, 64).unwrap();
        let b = nbls_beta(&pset).unwrap();
        assert!((b - 2.5).abs() < 1e-10, "I_yx = beta I_x exactly: got {b}");
    }

    #[test]
    fn nbls_shift_invariance_and_equivariance() {
        let x = noise(128, 2);
        let y = noise(128, 3);
        let z: Vec<[f64; 2]> = y.iter().zip(&x).map(|(&a, &b)| [a, b]).collect();
        let p0 = periodogram(&z, 32).unwrap();
        let b0 = nbls_beta(&p0).unwrap();
        // Adding constants to either column changes nothing.
        let zs: Vec<[f64; 2]> = z.iter().map(|&[a, b]| [a + 100.0, b - 7.0]).collect();
        let b1 = nbls_beta(&periodogram(&zs, 32).unwrap()).unwrap();
        assert!((b0 - b1).abs() < 1e-8);
        // Scaling y scales beta.
        let zc: Vec<[f64; 2]> = z.iter().map(|&[a, b]| [3.0 * a, b]).collect();
        let b3 = nbls_beta(&periodogram(&zc, 32).unwrap()).unwrap();
        assert!((b3 - 3.0 * b0).abs() < 1e-10);
    }

    #[test]
    fn simple_gamma_zero_for_real_cross_spectrum() {
        // Synthetic ordinates with a purely real cross entry: after any beta
        // correction the summed imaginary part is zero, so gamma-tilde = 0.
        use crate::spectra::FourierGrid;
        use num_complex::Complex64;
        let m = 16;
        let grid = FourierGrid::new(64, m).unwrap();
        let pset = crate::spectra::PeriodogramSet {
            grid,
            i11: (0..m).map(|j| 1.0 + j as f64).collect(),
            i22: (0..m).map(|j| 2.0 + (j as f64).sin().abs()).collect(),
            i12: (0..m).map(|j| Complex64::new(0.4 + 0.1 * j as f64, 0.0)).collect(),
        };
        let g = simple_gamma(&pset, 0.17).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn simple_gamma_undefined_when_real_part_vanishes() {
        use crate::spectra::FourierGrid;
        use num_complex::Complex64;
        let m = 8;
        let grid = FourierGrid::new(32, m).unwrap();
        let i22: Vec<f64> = (0..m).map(|j| 1.0 + j as f64).collect();
        let pset = crate::spectra::PeriodogramSet {
            grid,
            i11: vec![1.0; m],
            i12: i22.iter().map(|v| Complex64::new(0.5 * v, 0.3)).collect(),
            i22,
        };
        // With beta-tilde = 0.5 the corrected real part cancels exactly.
        assert!(simple_gamma(&pset, 0.5).is_err());
        assert!(simple_gamma(&pset, 0.25).is_ok());
    }

    #[test]
    fn simple_gamma_scale_invariance() {
        let u = simulate_u(&DgpSpec::Farima(FarimaSpec::paper((0.05, 0.45), 0.75).unwrap()), 512, 5).unwrap();
        let z = assemble_system(&u, 1.0);
        let pset = periodogram(&z, 64).unwrap();
        let b = nbls_beta(&pset).unwrap();
        let g0 = simple_gamma(&pset, b).unwrap();
        let zc: Vec<[f64; 2]> = z.iter().map(|&[a, c]| [5.0 * a, 5.0 * c]).collect();
        let pc = periodogram(&zc, 64).unwrap();
        let bc = nbls_beta(&pc).unwrap();
        let gc = simple_gamma(&pc, bc).unwrap();
        assert!((b - bc).abs() < 1e-10);
        assert!((g0 - gc).abs() < 1e-10);
    }

    #[test]
    fn univariate_lw_white_noise_and_scaling() {
        let x = noise(2048, 6);
        let m = 161;
        let d = univariate_lw(&x, m, LW_DELTA_RANGE).unwrap();
        let band = 3.0 * (0.25 / m as f64).sqrt();
        assert!(d.abs() < band, "white noise memory {d} outside 3 SE band {band}");
        let xs: Vec<f64> = x.iter().map(|v| 42.0 * v).collect();
        let ds = univariate_lw(&xs, m, LW_DELTA_RANGE).unwrap();
        assert!((d - ds).abs() < 1e-7, "scale invariance: {d} vs {ds}");
    }

    #[test]
    fn univariate_lw_degenerate_series() {
        let x = vec![1.0; 64];
        assert!(univariate_lw(&x, 16, LW_DELTA_RANGE).is_err());
    }
}
