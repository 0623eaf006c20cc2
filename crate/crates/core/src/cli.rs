//! Command-line interface: simulate, estimate, wald, mc, surface.
//!
//! Exit codes: 0 success, 1 usage/input error, 2 numerical failure (with a
//! machine-readable JSON envelope on stderr).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::inference::{estimate_covariance, named_hypothesis, wald_test};
use crate::io::{
    self, read_series_path, EstimationRecord, NamedTestRecord, WaldRecord, SCHEMA_VERSION,
};
use crate::mc::{summarize, summary_csv, McConfig, MRule};
use crate::model::ThetaSpace;
use crate::simulate::{DgpSpec, FarimaSpec, SystemSpec};
use crate::spectra::{periodogram, FourierGrid};
use crate::whittle::{self, default_bandwidth, BandwidthPreset, EstimateOptions, PsiKind};

#[derive(Parser, Debug)]
#[command(
    name = "lwcoint",
    version,
    about = "Local Whittle estimation for bivariate long-memory systems",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Simulate a fractional ARMA system and write it as y,x CSV.
    Simulate(SimulateArgs),
    /// Estimate (beta, gamma, delta1, delta2) from a y,x CSV.
    Estimate(EstimateArgs),
    /// Wald tests of named hypotheses, from a stored result or raw series.
    Wald(WaldArgs),
    /// Monte Carlo replication study.
    Mc(McArgs),
    /// Export the profiled objective surface over the alpha grid.
    Surface(SurfaceArgs),
}

#[derive(Args, Debug)]
struct CommonSpace {
    /// Lower margin for delta1.
    #[arg(long, default_value_t = 0.01)]
    eta1: f64,
    /// Minimum memory gap delta2 - delta1.
    #[arg(long, default_value_t = 0.02)]
    eta2: f64,
    /// Upper margin: delta2 <= 1/2 - eta3.
    #[arg(long, default_value_t = 0.02)]
    eta3: f64,
    /// Phase margin: |gamma| <= pi/2 - eta4.
    #[arg(long, default_value_t = 0.005)]
    eta4: f64,
    #[arg(long, default_value_t = -3.0)]
    beta_lo: f64,
    #[arg(long, default_value_t = 3.0)]
    beta_hi: f64,
}

impl CommonSpace {
    fn space(&self) -> Result<ThetaSpace> {
        ThetaSpace::new(self.eta1, self.eta2, self.eta3, self.eta4, self.beta_lo, self.beta_hi)
    }
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Optional key=value defaults file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    delta1: f64,
    #[arg(long)]
    delta2: f64,
    /// Innovation correlation shape parameter of the reference design.
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 0.5)]
    ar: f64,
    #[arg(long)]
    seed: u64,
    /// Optional level shifts (estimators are invariant to them).
    #[arg(long, default_value_t = 0.0)]
    mean_y: f64,
    #[arg(long, default_value_t = 0.0)]
    mean_x: f64,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input y,x CSV.
    #[arg(long)]
    input: PathBuf,
    /// Bandwidth; floor(n^(2/3)) when omitted.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "abs")]
    psi: PsiKind,
    /// Estimate alpha only, with beta fixed at this value.
    #[arg(long)]
    known_beta: Option<f64>,
    /// Comma-separated hypothesis names to test after estimation.
    #[arg(long, value_delimiter = ',')]
    tests: Vec<String>,
    #[command(flatten)]
    space: CommonSpace,
    /// Output JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also export the periodogram table used for estimation.
    #[arg(long)]
    periodogram_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct WaldArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stored estimation record (JSON produced by `estimate`).
    #[arg(long, conflicts_with = "input")]
    result: Option<PathBuf>,
    /// Raw series; estimated first when given.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "abs")]
    psi: PsiKind,
    /// Hypothesis names (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',', required = true)]
    hypothesis: Vec<String>,
    #[command(flatten)]
    space: CommonSpace,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named preset; `table1-row` wires the reference design and the three
    /// standard hypotheses.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    delta1: f64,
    #[arg(long)]
    delta2: f64,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    beta0: f64,
    #[arg(long, default_value_t = 0.5)]
    ar: f64,
    /// Sample sizes (comma separated).
    #[arg(long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    /// Explicit bandwidths, one per n.
    #[arg(long, value_delimiter = ',')]
    m: Vec<usize>,
    /// Bandwidth preset: half | one | two (times n^(2/3)).
    #[arg(long, conflicts_with = "m")]
    m_preset: Option<String>,
    #[arg(long, default_value_t = 1000)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',')]
    hypotheses: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, default_value = "abs")]
    psi: PsiKind,
    /// Worker cap for the replication pool.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    space: CommonSpace,
    /// Summary JSON path; stdout summary table is always printed.
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// JSON-lines file with one record per replication.
    #[arg(long)]
    records_out: Option<PathBuf>,
    /// CSV export of the rejection table.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value = "abs")]
    psi: PsiKind,
    #[command(flatten)]
    space: CommonSpace,
    #[arg(long)]
    out: PathBuf,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match splice_config(argv) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.cmd) {
        Ok(()) => 0,
        Err(e) => {
            let (kind, code) = classify(&e);
            if code == 2 {
                let env = io::ErrorEnvelope {
                    schema_version: SCHEMA_VERSION,
                    error: io::ErrorBody { kind, message: e.to_string() },
                };
                eprintln!("{}", serde_json::to_string(&env).unwrap());
            } else {
                eprintln!("error: {e}");
            }
            code
        }
    }
}

fn classify(e: &Error) -> (&'static str, i32) {
    match e {
        Error::InvalidInput(_) => ("invalid-input", 1),
        Error::Io(_) => ("io", 1),
        Error::Csv { .. } => ("csv", 1),
        Error::Json(_) => ("json", 1),
        Error::Domain(_) => ("domain", 2),
        Error::Degenerate(_) => ("degenerate", 2),
        Error::Singular(_) => ("singular", 2),
        Error::EstimationFailed(_) => ("estimation-failed", 2),
    }
}

/// Replace `--config FILE` by the file's key=value pairs, inserted right
/// after the subcommand so explicit flags override them.
fn splice_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut out: Vec<OsString> = Vec::with_capacity(argv.len());
    let mut config: Option<PathBuf> = None;
    let mut iter = argv.into_iter();
    if let Some(prog) = iter.next() {
        out.push(prog);
    }
    while let Some(tok) = iter.next() {
        let s = tok.to_string_lossy().to_string();
        if s == "--config" {
            let path = iter
                .next()
                .ok_or_else(|| Error::invalid("--config requires a file path"))?;
            config = Some(PathBuf::from(path));
        } else if let Some(rest) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(rest));
        } else {
            out.push(tok);
        }
    }
    let Some(path) = config else { return Ok(out) };
    if out.len() < 2 {
        return Err(Error::invalid("--config requires a subcommand"));
    }
    let text = std::fs::read_to_string(&path)?;
    let mut inject: Vec<OsString> = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::invalid(format!(
                "{}:{}: expected key=value, found '{line}'",
                path.display(),
                ln + 1
            )));
        };
        inject.push(format!("--{}", k.trim()).into());
        inject.push(v.trim().to_string().into());
    }
    // program, subcommand, <config pairs>, explicit flags...
    let mut spliced = Vec::with_capacity(out.len() + inject.len());
    spliced.push(out[0].clone());
    spliced.push(out[1].clone());
    spliced.extend(inject);
    spliced.extend(out.into_iter().skip(2));
    Ok(spliced)
}

fn dispatch(cmd: Cmd) -> Result<()> {
    match cmd {
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Estimate(a) => cmd_estimate(a),
        Cmd::Wald(a) => cmd_wald(a),
        Cmd::Mc(a) => cmd_mc(a),
        Cmd::Surface(a) => cmd_surface(a),
    }
}

fn write_out(path: &Option<PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p)?;
            f.write_all(content.as_bytes())?;
            if !content.ends_with('\n') {
                f.write_all(b"\n")?;
            }
            Ok(())
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let mut spec = FarimaSpec::paper((a.delta1, a.delta2), a.rho)?;
    spec.ar_coeff = a.ar;
    if a.ar.abs() >= 1.0 {
        return Err(Error::invalid("|ar| must be < 1"));
    }
    let mut system = SystemSpec::new(DgpSpec::Farima(spec), a.beta0, a.seed);
    system.mean = [a.mean_y, a.mean_x];
    let z = system.generate(a.n)?;
    let mut buf = Vec::new();
    io::write_series_csv(&mut buf, &z)?;
    match &a.out {
        Some(p) => std::fs::write(p, buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn estimate_record(
    z: &[[f64; 2]],
    m: usize,
    psi: PsiKind,
    space: &ThetaSpace,
    known_beta: Option<f64>,
    tests: &[String],
) -> Result<EstimationRecord> {
    let n = z.len();
    let options = EstimateOptions::default();
    let res = match known_beta {
        Some(b) => whittle::estimate_known_beta(z, m, psi, space, b, &options)?,
        None => whittle::estimate(z, m, psi, space, &options)?,
    };
    let grid = FourierGrid::new(n, m)?;
    let se = estimate_covariance(&res, &grid).ok().and_then(|v| {
        let mut out = [0.0; 4];
        for k in 0..4 {
            if v[k][k] < 0.0 {
                return None;
            }
            out[k] = v[k][k].sqrt();
        }
        Some(out)
    });
    let mut record = EstimationRecord::from_result(&res, n, m, psi, se);
    for name in tests {
        let (am, c) = named_hypothesis(name)?;
        let w = wald_test(&res, &grid, &am, &c)?;
        record.tests.push(NamedTestRecord {
            name: name.clone(),
            statistic: w.statistic,
            df: w.df,
            p_value: w.p_value,
        });
    }
    Ok(record)
}

fn cmd_estimate(a: EstimateArgs) -> Result<()> {
    let z = read_series_path(&a.input)?;
    let m = a.m.unwrap_or_else(|| default_bandwidth(z.len()));
    let space = a.space.space()?;
    if let Some(p) = &a.periodogram_out {
        let pset = periodogram(&z, m)?;
        let mut buf = Vec::new();
        io::write_periodogram_csv(&mut buf, &pset)?;
        std::fs::write(p, buf)?;
    }
    let record = estimate_record(&z, m, a.psi, &space, a.known_beta, &a.tests)?;
    write_out(&a.out, &serde_json::to_string_pretty(&record)?)
}

fn cmd_wald(a: WaldArgs) -> Result<()> {
    let (res, grid) = match (&a.result, &a.input) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)?;
            let record: EstimationRecord = serde_json::from_str(&text)?;
            let grid = FourierGrid::new(record.n, record.m)?;
            (record.to_result(), grid)
        }
        (None, Some(path)) => {
            let z = read_series_path(path)?;
            let m = a.m.unwrap_or_else(|| default_bandwidth(z.len()));
            let space = a.space.space()?;
            let res = whittle::estimate(&z, m, a.psi, &space, &EstimateOptions::default())?;
            let grid = FourierGrid::new(z.len(), m)?;
            (res, grid)
        }
        _ => return Err(Error::invalid("provide exactly one of --result or --input")),
    };
    let mut records = Vec::new();
    for name in &a.hypothesis {
        let (am, c) = named_hypothesis(name)?;
        let w = wald_test(&res, &grid, &am, &c)?;
        records.push(WaldRecord::new(name, &w));
    }
    write_out(&a.out, &serde_json::to_string_pretty(&records)?)
}

fn cmd_mc(a: McArgs) -> Result<()> {
    let mut hypotheses = a.hypotheses.clone();
    match a.preset.as_deref() {
        Some("table1-row") => {
            if hypotheses.is_empty() {
                hypotheses = vec![
                    "no-cointegration".into(),
                    "purely-nondeterministic".into(),
                    "short-memory-error".into(),
                ];
            }
        }
        Some(other) => return Err(Error::invalid(format!("unknown preset '{other}'"))),
        None => {}
    }
    let m_rule = if !a.m.is_empty() {
        MRule::Explicit(a.m.clone())
    } else {
        let preset = match a.m_preset.as_deref() {
            None | Some("one") => BandwidthPreset::One,
            Some("half") => BandwidthPreset::Half,
            Some("two") => BandwidthPreset::Two,
            Some(other) => return Err(Error::invalid(format!("unknown m preset '{other}'"))),
        };
        MRule::Preset(preset)
    };
    let mut spec = FarimaSpec::paper((a.delta1, a.delta2), a.rho)?;
    spec.ar_coeff = a.ar;
    let config = McConfig {
        dgp: DgpSpec::Farima(spec),
        beta0: a.beta0,
        n_list: a.n.clone(),
        m_rule,
        reps: a.reps,
        seed: a.seed,
        hypotheses,
        level: a.level,
        psi: a.psi,
        space: a.space.space()?,
        threads: a.threads,
    };
    let result = crate::mc::run(&config)?;
    println!("{}", summarize(&result));
    if let Some(p) = &a.summary_out {
        #[derive(serde::Serialize)]
        struct Summary<'a> {
            schema_version: u32,
            config: &'a McConfig,
            cells: &'a [crate::mc::CellResult],
        }
        let s = Summary { schema_version: SCHEMA_VERSION, config: &result.config, cells: &result.cells };
        std::fs::write(p, serde_json::to_string_pretty(&s)?)?;
    }
    if let Some(p) = &a.records_out {
        let mut f = std::fs::File::create(p)?;
        for (cell_idx, recs) in result.records.iter().enumerate() {
            for r in recs {
                #[derive(serde::Serialize)]
                struct Line<'a> {
                    n: usize,
                    m: usize,
                    #[serde(flatten)]
                    rec: &'a crate::mc::RepRecord,
                }
                let line = Line {
                    n: result.cells[cell_idx].n,
                    m: result.cells[cell_idx].m,
                    rec: r,
                };
                writeln!(f, "{}", serde_json::to_string(&line)?)?;
            }
        }
    }
    if let Some(p) = &a.csv_out {
        std::fs::write(p, summary_csv(&result))?;
    }
    Ok(())
}

fn cmd_surface(a: SurfaceArgs) -> Result<()> {
    let z = read_series_path(&a.input)?;
    let m = a.m.unwrap_or_else(|| default_bandwidth(z.len()));
    let space = a.space.space()?;
    let rows = whittle::objective_surface(&z, m, a.psi, &space, &EstimateOptions::default())?;
    let mut buf = Vec::new();
    io::write_surface_csv(&mut buf, &rows)?;
    std::fs::write(&a.out, buf)?;
    Ok(())
}
