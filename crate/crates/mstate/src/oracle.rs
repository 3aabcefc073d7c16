//! Independent Monte Carlo oracle for conditional means.
//!
//! The oracle never touches rates, surfaces or solvers: it averages a
//! path-wise functional over the paths of a conditioning cell and reports
//! the sample standard error. Valuation operators are then compared against
//! it within `k·SE` plus an explicit discretization allowance supplied by
//! the caller.

use crate::error::{Error, Result};
use crate::estimate::{Cell, ConditioningScheme};
use crate::grid::TimeGrid;
use crate::simulate::Path;

/// A Monte Carlo estimate of a conditional mean.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OracleEstimate {
    pub mean: f64,
    /// Standard error `s/√n` (infinite below two observations).
    pub se: f64,
    pub n: usize,
}

/// Average a path functional over the paths of one conditioning cell.
pub fn mc_conditional_mean(
    paths: &[Path],
    scheme: &ConditioningScheme,
    cell: Cell,
    grid: &TimeGrid,
    state_label: &str,
    mut f: impl FnMut(usize, &Path) -> Result<f64>,
) -> Result<OracleEstimate> {
    let mut n = 0usize;
    let mut mean = 0.0f64;
    let mut m2 = 0.0f64;
    for (idx, path) in paths.iter().enumerate() {
        if scheme.cell_of(path, grid) != cell {
            continue;
        }
        let x = f(idx, path)?;
        n += 1;
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    if n == 0 {
        return Err(Error::EmptyCell { label: cell.label(state_label) });
    }
    let se = if n >= 2 {
        (m2 / (n as f64 - 1.0) / n as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(OracleEstimate { mean, se, n })
}

/// Outcome of comparing a pipeline value against an oracle estimate.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Comparison {
    pub value: f64,
    pub oracle_mean: f64,
    pub oracle_se: f64,
    /// `(value − mean)/SE`; zero when the SE is zero and the values agree.
    pub z: f64,
    /// `k·SE + allowance`.
    pub bound: f64,
    pub pass: bool,
}

/// Compare a value against the oracle within `k_sigma` standard errors plus
/// a deterministic allowance (e.g. a discretization budget `c·h`).
pub fn compare(value: f64, oracle: &OracleEstimate, k_sigma: f64, allowance: f64) -> Comparison {
    let diff = value - oracle.mean;
    let bound = k_sigma * oracle.se + allowance;
    let z = if oracle.se > 0.0 {
        diff / oracle.se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY * diff.signum()
    };
    Comparison {
        value,
        oracle_mean: oracle.mean,
        oracle_se: oracle.se,
        z,
        bound,
        pass: diff.abs() <= bound,
    }
}
