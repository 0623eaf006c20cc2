//! Generation of bivariate series `z = (y, x)` from the cointegrated system
//! `B0 z_t = u_t`, with `u_t` drawn from either a one-sided fractional ARMA
//! or a bilateral power-law moving average realizing a prescribed phase.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{frac_ma_coeffs, MaTailSpec};

/// Fractional ARMA recipe:
/// `diag{(1-L)^d01, (1-L)^d02} (1 - ar L) u_t = F eps_t` with `F F' = R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarimaSpec {
    /// Memory parameters, each in `[0, 1/2)`.
    pub delta0: (f64, f64),
    /// Common AR(1) coefficient (0.5 in the reference design).
    pub ar_coeff: f64,
    /// A square root `F` of the innovation covariance: `R = F F'`.
    pub innov_cov_factor: [[f64; 2]; 2],
    /// MA truncation lag; `None` means `n + 10000` at generation time.
    pub truncation: Option<usize>,
    /// Leading values discarded; `None` means equal to the truncation lag.
    pub burn_in: Option<usize>,
}

impl FarimaSpec {
    pub fn new(
        delta0: (f64, f64),
        ar_coeff: f64,
        innov_cov_factor: [[f64; 2]; 2],
    ) -> Result<Self> {
        if !(delta0.0 >= 0.0 && delta0.0 < 0.5 && delta0.1 >= 0.0 && delta0.1 < 0.5) {
            return Err(Error::invalid("each memory must lie in [0, 1/2)"));
        }
        if !(ar_coeff.abs() < 1.0) {
            return Err(Error::invalid("|ar_coeff| must be < 1"));
        }
        let f = innov_cov_factor;
        let det = f[0][0] * f[1][1] - f[0][1] * f[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::invalid("innovation covariance factor is singular"));
        }
        Ok(Self { delta0, ar_coeff, innov_cov_factor, truncation: None, burn_in: None })
    }

    /// The reference Monte Carlo design: AR coefficient 0.5 and innovation
    /// covariance `R` with diagonal (1, 4) and off-diagonal `2 rho`.
    pub fn paper(delta0: (f64, f64), rho: f64) -> Result<Self> {
        let l = crate::linalg::cholesky2(1.0, 2.0 * rho, 4.0)
            .ok_or_else(|| Error::invalid(format!("|rho| = {} too large: R not PD", rho.abs())))?;
        Self::new(delta0, 0.5, l)
    }

    /// `R = F F'`.
    pub fn innovation_cov(&self) -> [[f64; 2]; 2] {
        let f = self.innov_cov_factor;
        let r11 = f[0][0] * f[0][0] + f[0][1] * f[0][1];
        let r12 = f[0][0] * f[1][0] + f[0][1] * f[1][1];
        let r22 = f[1][0] * f[1][0] + f[1][1] * f[1][1];
        [[r11, r12], [r12, r22]]
    }
}

/// Bilateral moving average `u_t = sum_{|j| <= J} C_j eps_{t-j}` with
/// `E eps_t eps_t' = I_p`; row k of `C_j` is `xi_{+k} |j|^(d0k - 1)` for
/// `j > 0` and `xi_{-k} |j|^(d0k - 1)` for `j < 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilateralSpec {
    pub tails: MaTailSpec,
    /// Two-sided truncation lag (default 5000).
    pub truncation: usize,
    /// The `j = 0` coefficient rows; the power law is undefined there.
    pub c0_row_1: Vec<f64>,
    pub c0_row_2: Vec<f64>,
}

impl BilateralSpec {
    /// Defaults: truncation 5000 and `C_0` rows equal to the xi+ rows.
    pub fn new(tails: MaTailSpec) -> Self {
        let c0_row_1 = tails.xi_plus_1.clone();
        let c0_row_2 = tails.xi_plus_2.clone();
        Self { tails, truncation: 5000, c0_row_1, c0_row_2 }
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.tails.xi_plus_1.len();
        if self.truncation < 1 {
            return Err(Error::invalid("bilateral truncation must be >= 1"));
        }
        if self.c0_row_1.len() != p || self.c0_row_2.len() != p {
            return Err(Error::invalid("C0 rows must have length p"));
        }
        Ok(())
    }
}

/// Either generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DgpSpec {
    Farima(FarimaSpec),
    Bilateral(BilateralSpec),
}

/// A full system recipe: innovation process, cointegrating coefficient and
/// seed. `mean` is an optional level shift of `u` (zero in all experiments;
/// the estimators are invariant to it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub dgp: DgpSpec,
    pub beta0: f64,
    pub seed: u64,
    pub mean: [f64; 2],
}

impl SystemSpec {
    pub fn new(dgp: DgpSpec, beta0: f64, seed: u64) -> Self {
        Self { dgp, beta0, seed, mean: [0.0, 0.0] }
    }

    /// Simulate `u`, apply the mean offset, and assemble `z`.
    pub fn generate(&self, n: usize) -> Result<Vec<[f64; 2]>> {
        let mut u = simulate_u(&self.dgp, n, self.seed)?;
        if self.mean != [0.0, 0.0] {
            for row in &mut u {
                row[0] += self.mean[0];
                row[1] += self.mean[1];
            }
        }
        Ok(assemble_system(&u, self.beta0))
    }
}

/// SplitMix64 finalizer; `mix(seed, k)` derives the k-th replication seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Replication-seed derivation used by the Monte Carlo harness.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03))
}

/// Draw `n` observations of the bivariate innovation process.
pub fn simulate_u(spec: &DgpSpec, n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    if n < 16 {
        return Err(Error::invalid("n must be >= 16"));
    }
    match spec {
        DgpSpec::Farima(s) => simulate_farima(s, n, seed),
        DgpSpec::Bilateral(s) => simulate_bilateral(s, n, seed),
    }
}

/// `x_t = u2_t`, `y_t = u1_t + beta0 x_t` (the inverse of `B0`).
pub fn assemble_system(u: &[[f64; 2]], beta0: f64) -> Vec<[f64; 2]> {
    u.iter().map(|&[u1, u2]| [u1 + beta0 * u2, u2]).collect()
}

fn simulate_farima(spec: &FarimaSpec, n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    let j_max = spec.truncation.unwrap_or(n + 10_000);
    if j_max < n {
        return Err(Error::invalid(format!("truncation {j_max} below sample size {n}")));
    }
    let burn = spec.burn_in.unwrap_or(j_max);
    let total = burn + n;

    // Kernel per component: (1-L)^(-d) convolved with the AR(1) inverse,
    // via the recursion k_j = c_j + ar k_{j-1}.
    let kernel = |d: f64| -> Vec<f64> {
        let mut k = frac_ma_coeffs(d, j_max);
        if spec.ar_coeff != 0.0 {
            for j in 1..=j_max {
                k[j] += spec.ar_coeff * k[j - 1];
            }
        }
        k
    };
    let k1 = kernel(spec.delta0.0);
    let k2 = kernel(spec.delta0.1);

    // eta_t = F eps_t, generated in a fixed order for reproducibility.
    let f = spec.innov_cov_factor;
    let len = total + j_max;
    let mut e1 = Vec::with_capacity(len);
    let mut e2 = Vec::with_capacity(len);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..len {
        let a: f64 = StandardNormal.sample(&mut rng);
        let b: f64 = StandardNormal.sample(&mut rng);
        e1.push(f[0][0] * a + f[0][1] * b);
        e2.push(f[1][0] * a + f[1][1] * b);
    }

    let (u1, u2) = convolve_lagged2((&k1, &e1), (&k2, &e2), total);
    Ok((burn..total).map(|t| [u1[t], u2[t]]).collect())
}

fn simulate_bilateral(spec: &BilateralSpec, n: usize, seed: u64) -> Result<Vec<[f64; 2]>> {
    spec.validate()?;
    let tails = &spec.tails;
    let p = tails.xi_plus_1.len();
    let j_max = spec.truncation;
    let (d1, d2) = tails.delta0;

    // eps: p unit-variance streams of length n + 2J, drawn t-major.
    let len = n + 2 * j_max;
    let mut eps: Vec<Vec<f64>> = vec![Vec::with_capacity(len); p];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..len {
        for stream in eps.iter_mut() {
            stream.push(StandardNormal.sample(&mut rng));
        }
    }

    // Kernel for (row k, stream l), index s corresponds to lag j = s - J.
    let kernel = |d: f64, xp: f64, xm: f64, c0: f64| -> Vec<f64> {
        let mut k = vec![0.0; 2 * j_max + 1];
        for (s, ks) in k.iter_mut().enumerate() {
            let j = s as i64 - j_max as i64;
            *ks = match j.cmp(&0) {
                std::cmp::Ordering::Greater => xp * (j as f64).powf(d - 1.0),
                std::cmp::Ordering::Equal => c0,
                std::cmp::Ordering::Less => xm * ((-j) as f64).powf(d - 1.0),
            };
        }
        k
    };

    let mut u1 = vec![0.0; n];
    let mut u2 = vec![0.0; n];
    for l in 0..p {
        let ka = kernel(d1, tails.xi_plus_1[l], tails.xi_minus_1[l], spec.c0_row_1[l]);
        let kb = kernel(d2, tails.xi_plus_2[l], tails.xi_minus_2[l], spec.c0_row_2[l]);
        let (ca, cb) = convolve_lagged2((&ka, &eps[l]), (&kb, &eps[l]), n);
        for t in 0..n {
            u1[t] += ca[t];
            u2[t] += cb[t];
        }
    }
    Ok((0..n).map(|t| [u1[t], u2[t]]).collect())
}

/// Two lagged convolutions sharing one FFT pass:
/// `out[i] = sum_j kernel[j] signal[i + kernel.len() - 1 - j]`, `i < n_out`.
/// Both pairs are packed into a single complex transform.
fn convolve_lagged2(
    a: (&[f64], &[f64]),
    b: (&[f64], &[f64]),
    n_out: usize,
) -> (Vec<f64>, Vec<f64>) {
    let full = |k: &[f64], s: &[f64]| k.len() + s.len() - 1;
    let need = full(a.0, a.1).max(full(b.0, b.1));
    let size = need.next_power_of_two();

    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    let ifft = planner.plan_fft_inverse(size);

    let pack = |x: &[f64], y: &[f64]| -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); size];
        for (i, v) in x.iter().enumerate() {
            buf[i].re = *v;
        }
        for (i, v) in y.iter().enumerate() {
            buf[i].im = *v;
        }
        buf
    };
    // Unpack the transforms of the two real sequences from one complex FFT.
    let unpack = |buf: &[Complex64], i: usize| -> (Complex64, Complex64) {
        let j = if i == 0 { 0 } else { size - i };
        let fi = buf[i];
        let fj = buf[j].conj();
        let x = 0.5 * (fi + fj);
        let y = Complex64::new(0.0, -0.5) * (fi - fj);
        (x, y)
    };

    let mut kbuf = pack(a.0, b.0);
    let mut sbuf = pack(a.1, b.1);
    fft.process(&mut kbuf);
    fft.process(&mut sbuf);

    let mut prod = vec![Complex64::new(0.0, 0.0); size];
    for i in 0..size {
        let (ka, kb) = unpack(&kbuf, i);
        let (sa, sb) = unpack(&sbuf, i);
        // Pack the two real convolutions as re + i im of one spectrum.
        prod[i] = ka * sa + Complex64::new(0.0, 1.0) * (kb * sb);
    }
    ifft.process(&mut prod);

    let scale = 1.0 / size as f64;
    let off_a = a.0.len() - 1;
    let off_b = b.0.len() - 1;
    let out_a: Vec<f64> = (0..n_out).map(|i| prod[off_a + i].re * scale).collect();
    let out_b: Vec<f64> = (0..n_out).map(|i| prod[off_b + i].im * scale).collect();
    (out_a, out_b)
}
