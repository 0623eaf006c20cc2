//! CSV and JSON interchange: series files, estimation records, periodogram
//! and objective-surface tables.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::WaldResult;
use crate::model::{OmegaMatrix, ThetaVector};
use crate::spectra::PeriodogramSet;
use crate::whittle::{BoundaryFlags, EstimateDiagnostics, EstimationResult, PsiKind};

pub const SCHEMA_VERSION: u32 = 1;

/// Write a bivariate series as `y,x` CSV with round-trip precision.
pub fn write_series_csv<W: Write>(mut w: W, z: &[[f64; 2]]) -> Result<()> {
    writeln!(w, "y,x")?;
    for row in z {
        writeln!(w, "{},{}", row[0], row[1])?;
    }
    Ok(())
}

/// Read a `y,x` CSV. Errors carry 1-based line numbers.
pub fn read_series_csv<R: Read>(r: R) -> Result<Vec<[f64; 2]>> {
    let reader = BufReader::new(r);
    let mut out = Vec::new();
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, Ok(h))) => h,
        Some((_, Err(e))) => return Err(Error::Io(e)),
        None => return Err(Error::Csv { line: 1, message: "empty file".into() }),
    };
    if header.trim() != "y,x" {
        return Err(Error::Csv { line: 1, message: format!("expected header 'y,x', found '{}'", header.trim()) });
    }
    for (idx, line) in lines {
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut parts = trimmed.split(',');
        let (a, b, rest) = (parts.next(), parts.next(), parts.next());
        if b.is_none() || rest.is_some() {
            return Err(Error::Csv {
                line: idx + 1,
                message: format!("expected two comma-separated values, found '{trimmed}'"),
            });
        }
        let parse = |s: &str| -> std::result::Result<f64, String> {
            s.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", s.trim()))
        };
        let y = parse(a.unwrap()).map_err(|m| Error::Csv { line: idx + 1, message: m })?;
        let x = parse(b.unwrap()).map_err(|m| Error::Csv { line: idx + 1, message: m })?;
        out.push([y, x]);
    }
    if out.is_empty() {
        return Err(Error::Csv { line: 1, message: "no data rows".into() });
    }
    Ok(out)
}

pub fn read_series_path(path: &Path) -> Result<Vec<[f64; 2]>> {
    read_series_csv(std::fs::File::open(path)?)
}

/// Serialized estimation output (`schema_version` 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub schema_version: u32,
    pub n: usize,
    pub m: usize,
    pub psi: PsiKind,
    pub theta_hat: ThetaVector,
    pub omega_hat: OmegaMatrix,
    pub r_min: f64,
    pub converged: bool,
    pub iterations: usize,
    pub boundary_hit: BoundaryFlags,
    pub grid_stage_argmin: ThetaVector,
    pub diagnostics: EstimateDiagnostics,
    /// Standard errors of (beta, gamma, delta1, delta2); absent when the
    /// plug-in covariance is singular.
    pub se: Option<[f64; 4]>,
    #[serde(default)]
    pub tests: Vec<NamedTestRecord>,
    #[serde(default)]
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedTestRecord {
    pub name: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl EstimationRecord {
    pub fn from_result(
        res: &EstimationResult,
        n: usize,
        m: usize,
        psi: PsiKind,
        se: Option<[f64; 4]>,
    ) -> Self {
        let mut flags = Vec::new();
        if res.diagnostics.degenerate {
            flags.push("degenerate-omega".to_string());
        }
        if !res.converged {
            flags.push("not-converged".to_string());
        }
        if res.boundary_hit.any() {
            flags.push("boundary".to_string());
        }
        EstimationRecord {
            schema_version: SCHEMA_VERSION,
            n,
            m,
            psi,
            theta_hat: res.theta_hat,
            omega_hat: res.omega_hat,
            r_min: res.r_min,
            converged: res.converged,
            iterations: res.iterations,
            boundary_hit: res.boundary_hit,
            grid_stage_argmin: res.grid_stage_argmin,
            diagnostics: res.diagnostics.clone(),
            se,
            tests: Vec::new(),
            flags,
        }
    }

    /// Rebuild the in-memory result (for follow-up tests on a stored record).
    pub fn to_result(&self) -> EstimationResult {
        EstimationResult {
            theta_hat: self.theta_hat,
            omega_hat: self.omega_hat,
            r_min: self.r_min,
            converged: self.converged,
            iterations: self.iterations,
            boundary_hit: self.boundary_hit,
            grid_stage_argmin: self.grid_stage_argmin,
            diagnostics: self.diagnostics.clone(),
        }
    }
}

/// Wald test record for JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WaldRecord {
    pub schema_version: u32,
    pub name: String,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl WaldRecord {
    pub fn new(name: &str, w: &WaldResult) -> Self {
        WaldRecord {
            schema_version: SCHEMA_VERSION,
            name: name.to_string(),
            statistic: w.statistic,
            df: w.df,
            p_value: w.p_value,
        }
    }
}

/// Periodogram table: `j,lambda,i11,re_i12,im_i12,i22`.
pub fn write_periodogram_csv<W: Write>(mut w: W, pset: &PeriodogramSet) -> Result<()> {
    writeln!(w, "j,lambda,i11,re_i12,im_i12,i22")?;
    for idx in 0..pset.grid.m {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            idx + 1,
            pset.grid.lambdas[idx],
            pset.i11[idx],
            pset.i12[idx].re,
            pset.i12[idx].im,
            pset.i22[idx]
        )?;
    }
    Ok(())
}

/// Objective-surface table: `gamma,delta1,delta2,beta_star,r`.
pub fn write_surface_csv<W: Write>(mut w: W, rows: &[(f64, f64, f64, f64, f64)]) -> Result<()> {
    writeln!(w, "gamma,delta1,delta2,beta_star,r")?;
    for (g, d1, d2, b, r) in rows {
        writeln!(w, "{g},{d1},{d2},{b},{r}")?;
    }
    Ok(())
}

/// Machine-readable error envelope printed on stderr by the CLI.
#[derive(Debug, Serialize)]
pub struct ErrorEnvelope<'a> {
    pub schema_version: u32,
    pub error: ErrorBody<'a>,
}

#[derive(Debug, Serialize)]
pub struct ErrorBody<'a> {
    pub kind: &'a str,
    pub message: String,
}
