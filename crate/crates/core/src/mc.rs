//! Monte Carlo replication harness: simulate, estimate, test, aggregate.
//! Deterministic given the configuration seed, independent of worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{
    estimate_covariance, named_hypothesis, sigma_matrix, theory_sd, wald_test,
};
use crate::model::{implied_farima_params, ThetaSpace, ThetaVector};
use crate::simulate::{mix_seed, DgpSpec, SystemSpec};
use crate::spectra::FourierGrid;
use crate::whittle::{
    bandwidth_preset, estimate, BandwidthPreset, BoundaryFlags, EstimateOptions, PsiKind,
};

/// Bandwidth rule per sample size.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum MRule {
    Preset(BandwidthPreset),
    /// One bandwidth per entry of `n_list`.
    Explicit(Vec<usize>),
}

/// Replication plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McConfig {
    pub dgp: DgpSpec,
    pub beta0: f64,
    pub n_list: Vec<usize>,
    pub m_rule: MRule,
    pub reps: usize,
    pub seed: u64,
    pub hypotheses: Vec<String>,
    pub level: f64,
    pub psi: PsiKind,
    pub space: ThetaSpace,
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.reps < 1 {
            return Err(Error::invalid("reps must be >= 1"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid("level must lie in (0, 1)"));
        }
        if self.n_list.is_empty() {
            return Err(Error::invalid("n_list must not be empty"));
        }
        if let MRule::Explicit(ms) = &self.m_rule {
            if ms.len() != self.n_list.len() {
                return Err(Error::invalid("explicit m list must match n_list length"));
            }
        }
        for name in &self.hypotheses {
            named_hypothesis(name)?;
        }
        Ok(())
    }

    pub fn bandwidth_for(&self, idx: usize) -> usize {
        match &self.m_rule {
            MRule::Preset(p) => bandwidth_preset(self.n_list[idx], *p),
            MRule::Explicit(ms) => ms[idx],
        }
    }

    /// True parameter vector of the design (gamma0 from the generator).
    pub fn theta0(&self) -> Result<ThetaVector> {
        match &self.dgp {
            DgpSpec::Farima(f) => {
                let (g0, _) = implied_farima_params(f)?;
                Ok(ThetaVector::new(self.beta0, g0, f.delta0.0, f.delta0.1))
            }
            DgpSpec::Bilateral(b) => {
                let pk = crate::model::kappas_from_ma_tails(&b.tails)?;
                let (g0, _) = crate::model::gamma_from_kappas(&pk)?;
                Ok(ThetaVector::new(self.beta0, g0, b.tails.delta0.0, b.tails.delta0.1))
            }
        }
    }
}

/// One hypothesis test inside a replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub reject: bool,
}

/// Everything recorded for a single replication (one JSON line).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    pub theta_hat: Option<ThetaVector>,
    pub se: Option<[f64; 4]>,
    pub converged: bool,
    pub boundary: BoundaryFlags,
    pub tests: Vec<TestOutcome>,
    pub error: Option<String>,
}

/// Rejection summary for one hypothesis in one cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisSummary {
    pub name: String,
    pub rejections: usize,
    /// Replications where the test could be computed.
    pub valid: usize,
    pub frequency: f64,
    pub binomial_se: f64,
}

/// Aggregates for one (n, m) cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellResult {
    pub n: usize,
    pub m: usize,
    pub theta0: ThetaVector,
    pub reps: usize,
    pub failures: usize,
    pub rejection: Vec<HypothesisSummary>,
    pub bias: [f64; 4],
    pub empirical_sd: [f64; 4],
    /// From Sigma^-1 at the truth; absent for generators without a known
    /// Omega0.
    pub theory_sd: Option<[f64; 4]>,
    /// Coverage of 95% Wald intervals, per parameter.
    pub coverage95: [f64; 4],
    pub coverage_valid: usize,
    pub boundary_counts: [usize; 4],
}

/// Full harness output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct McResult {
    pub config: McConfig,
    pub cells: Vec<CellResult>,
    /// Per-cell replication records, aligned with `cells`.
    pub records: Vec<Vec<RepRecord>>,
}

fn run_one_rep(
    config: &McConfig,
    n: usize,
    m: usize,
    rep: usize,
    options: &EstimateOptions,
) -> RepRecord {
    let seed = mix_seed(config.seed, rep as u64);
    let system = SystemSpec::new(config.dgp.clone(), config.beta0, seed);
    let mut record = RepRecord {
        rep,
        seed,
        theta_hat: None,
        se: None,
        converged: false,
        boundary: BoundaryFlags::default(),
        tests: Vec::new(),
        error: None,
    };
    let z = match system.generate(n) {
        Ok(z) => z,
        Err(e) => {
            record.error = Some(format!("simulate: {e}"));
            return record;
        }
    };
    let res = match estimate(&z, m, config.psi, &config.space, options) {
        Ok(r) => r,
        Err(e) => {
            record.error = Some(format!("estimate: {e}"));
            return record;
        }
    };
    record.theta_hat = Some(res.theta_hat);
    record.converged = res.converged;
    record.boundary = res.boundary_hit;
    let grid = match FourierGrid::new(n, m) {
        Ok(g) => g,
        Err(e) => {
            record.error = Some(format!("grid: {e}"));
            return record;
        }
    };
    match estimate_covariance(&res, &grid) {
        Ok(v) => {
            let mut se = [0.0; 4];
            let mut ok = true;
            for k in 0..4 {
                if v[k][k] >= 0.0 {
                    se[k] = v[k][k].sqrt();
                } else {
                    ok = false;
                }
            }
            if ok {
                record.se = Some(se);
            } else {
                record.error = Some("covariance: negative diagonal".into());
            }
        }
        Err(e) => {
            record.error = Some(format!("covariance: {e}"));
        }
    }
    for name in &config.hypotheses {
        let (a, c) = named_hypothesis(name).expect("validated");
        match wald_test(&res, &grid, &a, &c) {
            Ok(w) => record.tests.push(TestOutcome {
                name: name.clone(),
                statistic: w.statistic,
                p_value: w.p_value,
                reject: w.p_value < config.level,
            }),
            Err(e) => {
                if record.error.is_none() {
                    record.error = Some(format!("wald {name}: {e}"));
                }
            }
        }
    }
    record
}

fn aggregate_cell(
    config: &McConfig,
    n: usize,
    m: usize,
    theta0: ThetaVector,
    records: &[RepRecord],
) -> CellResult {
    let reps = records.len();
    let failures = records.iter().filter(|r| r.theta_hat.is_none()).count();

    let mut rejection = Vec::new();
    for name in &config.hypotheses {
        let mut valid = 0usize;
        let mut rej = 0usize;
        for r in records {
            if let Some(t) = r.tests.iter().find(|t| &t.name == name) {
                valid += 1;
                if t.reject {
                    rej += 1;
                }
            }
        }
        let freq = if valid > 0 { rej as f64 / valid as f64 } else { f64::NAN };
        let se = if valid > 0 { (freq * (1.0 - freq) / valid as f64).sqrt() } else { f64::NAN };
        rejection.push(HypothesisSummary {
            name: name.clone(),
            rejections: rej,
            valid,
            frequency: freq,
            binomial_se: se,
        });
    }

    let truth = theta0.as_array();
    let mut sum = [0.0; 4];
    let mut sumsq = [0.0; 4];
    let mut count = 0usize;
    let mut cover = [0usize; 4];
    let mut cover_valid = 0usize;
    let mut boundary_counts = [0usize; 4];
    const Z975: f64 = 1.959963984540054;
    for r in records {
        if let Some(th) = &r.theta_hat {
            let v = th.as_array();
            for k in 0..4 {
                sum[k] += v[k];
                sumsq[k] += v[k] * v[k];
            }
            count += 1;
            let b = [r.boundary.beta, r.boundary.gamma, r.boundary.delta1, r.boundary.delta2];
            for k in 0..4 {
                if b[k] {
                    boundary_counts[k] += 1;
                }
            }
            if let Some(se) = &r.se {
                cover_valid += 1;
                for k in 0..4 {
                    if (v[k] - truth[k]).abs() <= Z975 * se[k] {
                        cover[k] += 1;
                    }
                }
            }
        }
    }
    let mut bias = [f64::NAN; 4];
    let mut emp_sd = [f64::NAN; 4];
    if count > 0 {
        for k in 0..4 {
            let mean = sum[k] / count as f64;
            bias[k] = mean - truth[k];
            let var = (sumsq[k] - count as f64 * mean * mean) / (count.max(2) - 1) as f64;
            emp_sd[k] = var.max(0.0).sqrt();
        }
    }
    let mut coverage95 = [f64::NAN; 4];
    if cover_valid > 0 {
        for k in 0..4 {
            coverage95[k] = cover[k] as f64 / cover_valid as f64;
        }
    }

    // Theory SD from Sigma at the truth (fractional ARMA designs only).
    let theory = match &config.dgp {
        DgpSpec::Farima(f) => implied_farima_params(f).ok().and_then(|(g0, om)| {
            let grid = FourierGrid::new(n, m).ok()?;
            let sig = sigma_matrix(g0, f.delta0.1 - f.delta0.0, &om).ok()?;
            theory_sd(&sig, m, grid.lambda_m()).ok()
        }),
        DgpSpec::Bilateral(_) => None,
    };

    CellResult {
        n,
        m,
        theta0,
        reps,
        failures,
        rejection,
        bias,
        empirical_sd: emp_sd,
        theory_sd: theory,
        coverage95,
        coverage_valid: cover_valid,
        boundary_counts,
    }
}

/// Run the full replication plan. Per-replication seeds are
/// `mix_seed(config.seed, rep)`, so results are bit-identical for any
/// worker count.
pub fn run(config: &McConfig) -> Result<McResult> {
    run_with_options(config, &EstimateOptions::default())
}

pub fn run_with_options(config: &McConfig, options: &EstimateOptions) -> Result<McResult> {
    config.validate()?;
    let theta0 = config.theta0()?;

    let execute = || -> Vec<Vec<RepRecord>> {
        config
            .n_list
            .iter()
            .enumerate()
            .map(|(idx, &n)| {
                let m = config.bandwidth_for(idx);
                (0..config.reps)
                    .into_par_iter()
                    .map(|rep| run_one_rep(config, n, m, rep, options))
                    .collect()
            })
            .collect()
    };

    let records: Vec<Vec<RepRecord>> = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::EstimationFailed(format!("thread pool: {e}")))?
            .install(execute),
        None => execute(),
    };

    let mut cells = Vec::new();
    for (idx, recs) in records.iter().enumerate() {
        let n = config.n_list[idx];
        let m = config.bandwidth_for(idx);
        let cell = aggregate_cell(config, n, m, theta0, recs);
        if cell.failures * 20 > cell.reps {
            return Err(Error::EstimationFailed(format!(
                "cell (n = {n}, m = {m}): {} of {} replications failed",
                cell.failures, cell.reps
            )));
        }
        cells.push(cell);
    }
    Ok(McResult { config: config.clone(), cells, records })
}

/// Render the rejection-frequency table plus a bias/SD/coverage appendix.
pub fn summarize(result: &McResult) -> String {
    let mut out = String::new();
    let hyps = &result.config.hypotheses;
    out.push_str("rejection frequencies (%)\n");
    out.push_str(&format!("{:>6} {:>6} {:>6}", "n", "m", "reps"));
    for h in hyps {
        out.push_str(&format!(" {:>24}", h));
    }
    out.push('\n');
    for cell in &result.cells {
        out.push_str(&format!("{:>6} {:>6} {:>6}", cell.n, cell.m, cell.reps));
        for h in hyps {
            let s = cell.rejection.iter().find(|r| &r.name == h).unwrap();
            out.push_str(&format!(
                " {:>14.1} ({:>4}/{:<4})",
                100.0 * s.frequency,
                s.rejections,
                s.valid
            ));
        }
        out.push('\n');
    }
    out.push('\n');
    out.push_str("bias / SD / coverage\n");
    let names = ["beta", "gamma", "delta1", "delta2"];
    for cell in &result.cells {
        out.push_str(&format!(
            "n = {}, m = {}: failures = {}, boundary hits = {:?}\n",
            cell.n, cell.m, cell.failures, cell.boundary_counts
        ));
        for k in 0..4 {
            let theory = match &cell.theory_sd {
                Some(t) => format!("{:>10.5}", t[k]),
                None => format!("{:>10}", "-"),
            };
            out.push_str(&format!(
                "  {:<7} bias {:>9.5}  sd {:>9.5}  theory-sd {}  cover95 {:>5.1}%\n",
                names[k],
                cell.bias[k],
                cell.empirical_sd[k],
                theory,
                100.0 * cell.coverage95[k]
            ));
        }
    }
    out
}

/// CSV export of the summary table (one row per cell and hypothesis).
pub fn summary_csv(result: &McResult) -> String {
    let mut out = String::from("n,m,reps,failures,hypothesis,rejections,valid,frequency,binomial_se\n");
    for cell in &result.cells {
        for s in &cell.rejection {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                cell.n,
                cell.m,
                cell.reps,
                cell.failures,
                s.name,
                s.rejections,
                s.valid,
                s.frequency,
                s.binomial_se
            ));
        }
        if cell.rejection.is_empty() {
            out.push_str(&format!(
                "{},{},{},{},,,,,\n",
                cell.n, cell.m, cell.reps, cell.failures
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::FarimaSpec;

    fn tiny_config() -> McConfig {
        McConfig {
            dgp: DgpSpec::Farima(FarimaSpec::paper((0.05, 0.45), 0.75).unwrap()),
            beta0: 1.0,
            n_list: vec![64],
            m_rule: MRule::Explicit(vec![16]),
            reps: 2,
            seed: 99,
            hypotheses: vec!["no-cointegration".into(), "zero-phase".into()],
            level: 0.05,
            psi: PsiKind::Abs,
            space: ThetaSpace::default(),
            threads: Some(1),
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let mut cfg = tiny_config();
        cfg.reps = 4;
        cfg.threads = Some(1);
        let a = run(&cfg).unwrap();
        cfg.threads = Some(4);
        let b = run(&cfg).unwrap();
        let ja = serde_json::to_string(&a.cells).unwrap();
        let jb = serde_json::to_string(&b.cells).unwrap();
        assert_eq!(ja, jb, "summaries must be bit-identical across thread counts");
    }

    #[test]
    fn single_rep_equals_direct_run() {
        let mut cfg = tiny_config();
        cfg.reps = 1;
        cfg.hypotheses = vec!["no-cointegration".into()];
        let out = run(&cfg).unwrap();
        let rec = &out.records[0][0];

        let seed = mix_seed(cfg.seed, 0);
        let z = SystemSpec::new(cfg.dgp.clone(), cfg.beta0, seed).generate(64).unwrap();
        let res = estimate(&z, 16, cfg.psi, &cfg.space, &EstimateOptions::default()).unwrap();
        assert_eq!(rec.theta_hat.unwrap(), res.theta_hat);
        let grid = FourierGrid::new(64, 16).unwrap();
        let (a, c) = named_hypothesis("no-cointegration").unwrap();
        let w = wald_test(&res, &grid, &a, &c).unwrap();
        assert_eq!(rec.tests[0].statistic, w.statistic);
        // Degenerate aggregation: frequency is 0 or 1 over one replication.
        let s = &out.cells[0].rejection[0];
        assert_eq!(s.valid, 1);
        assert_eq!(s.frequency, if rec.tests[0].reject { 1.0 } else { 0.0 });
    }

    #[test]
    fn counts_partition_reps() {
        let out = run(&tiny_config()).unwrap();
        for cell in &out.cells {
            for s in &cell.rejection {
                assert!(s.valid + cell.failures <= cell.reps + cell.failures);
                assert!(s.valid <= cell.reps);
                assert!(s.rejections <= s.valid);
            }
            assert_eq!(cell.reps, 2);
        }
    }

    #[test]
    fn summarize_without_hypotheses_has_bias_block_only() {
        let mut cfg = tiny_config();
        cfg.hypotheses.clear();
        let out = run(&cfg).unwrap();
        let text = summarize(&out);
        assert!(text.contains("bias / SD / coverage"));
        assert!(text.contains("delta2"));
        assert!(!text.contains("zero-phase"));
    }

    #[test]
    fn golden_summary_shape() {
        let out = run(&tiny_config()).unwrap();
        let text = summarize(&out);
        // Fixed header shape for downstream parsing.
        assert!(text.starts_with("rejection frequencies (%)\n"));
        assert!(text.contains("no-cointegration"));
        let csv = summary_csv(&out);
        assert!(csv.starts_with("n,m,reps,failures,hypothesis,"));
        assert_eq!(csv.lines().count(), 1 + 2);
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny_config();
        cfg.reps = 0;
        assert!(run(&cfg).is_err());
        let mut cfg = tiny_config();
        cfg.hypotheses = vec!["bogus".into()];
        assert!(run(&cfg).is_err());
        let mut cfg = tiny_config();
        cfg.m_rule = MRule::Explicit(vec![16, 32]);
        assert!(run(&cfg).is_err());
    }
}
