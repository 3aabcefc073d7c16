//! End-to-end pipeline: simulate → estimate → solve → value → check.
//!
//! The stages are cumulative and deterministic: every stage reruns the
//! previous ones from the configured seed, so `solve` and a later `value`
//! see bit-identical ensembles without any intermediate state on disk.
//! Artifacts are written per stage:
//!
//! * `simulate` — `run.json` (resolved run metadata), and `paths.csv` when
//!   path dumping is requested;
//! * `estimate` — per conditioning cell under `cells/<label>/`: `cell.json`,
//!   empirical occupation fractions `p1.csv`, jump-count increments
//!   `q1.csv`, one-dimensional rates `rates1.csv`, and (surface dumping
//!   only, the files are large) one dense matrix file per two-dimensional
//!   rate block (`rates2_<i>_<j>_<k>_<l>.csv`);
//! * `solve` — `solver.json` with residuals against the estimated surfaces,
//!   the solved `solved_p1.csv`, and under surface dumping one dense matrix
//!   file per solved joint plane (`p2_<i>_<k>.csv`, rows and columns are
//!   grid indices);
//! * `value` — `report.csv`, one row per cell and payment specification;
//! * `check` — `checks.json` with Monte Carlo oracle comparisons per
//!   valuation, and `report.csv` rewritten with its oracle and z-score
//!   columns filled.
//!
//! Every float is written through its shortest round-trip decimal form, and
//! all map iterations are over ordered containers, so artifact bytes are a
//! pure function of the configuration.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::Serialize;

use crate::cashflow::CashflowSpec1D;
use crate::config::Resolved;
use crate::error::{Error, Result};
use crate::estimate::{
    estimate_moment_surfaces, transition_rates, Cell, Depth, MomentSurfaces, RateSystem,
};
use crate::kolmogorov::{residual_and_consistency, solve, Residuals, SolvedProbabilities};
use crate::oracle::{compare, mc_conditional_mean, Comparison};
use crate::reserve::{
    conditional_variance, expected_past_1d, free_policy_prospective, free_policy_retrospective,
    ValuationReport,
};
use crate::simulate::{
    path_payout_free_policy, path_payout_future, path_payout_past, simulate_ensemble, Path,
    PayoutSide,
};

/// Residual tolerance for declaring the solved surfaces consistent with the
/// estimated ones. The solver reproduces the estimates up to floating-point
/// roundoff, so anything beyond this signals a rate or solver defect.
const SOLVER_TOL: f64 = 1e-8;

/// Pipeline stages, ordered; running a stage runs everything before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Simulate,
    Estimate,
    Solve,
    Value,
    Check,
}

/// Execution and output options shared by all stages.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Directory all artifacts are written under (created if missing).
    pub out_dir: PathBuf,
    /// Worker threads for simulation. Results are independent of this
    /// because every path seeds its own generator.
    pub threads: usize,
    /// Force single-threaded execution, removing scheduling nondeterminism
    /// entirely (values are unchanged; this pins even the work order).
    pub strict_determinism: bool,
    /// Also write the large two-dimensional surface files.
    pub dump_surfaces: bool,
    /// Also write the simulated paths in run-length form.
    pub dump_paths: bool,
}

impl PipelineOptions {
    /// Default options writing into `out_dir`, single-threaded.
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        Self {
            out_dir: out_dir.into(),
            threads: 1,
            strict_determinism: false,
            dump_surfaces: false,
            dump_paths: false,
        }
    }
}

/// Oracle comparisons for one payment specification in one cell.
#[derive(Debug, Clone, Serialize)]
pub struct ValuationChecks {
    pub spec: String,
    pub v_plus: Comparison,
    pub v_minus: Comparison,
    /// Absent for free-policy rows, whose second moment is not computed.
    pub s_plus: Option<Comparison>,
    pub pass: bool,
}

/// All checks of one conditioning cell.
#[derive(Debug, Clone, Serialize)]
pub struct CellChecks {
    pub label: String,
    pub n_cell: usize,
    pub residuals: Residuals,
    /// Solved surfaces reproduce the estimated ones and conserve mass.
    pub solver_consistent: bool,
    pub valuations: Vec<ValuationChecks>,
    pub pass: bool,
}

/// The full `checks.json` payload.
#[derive(Debug, Clone, Serialize)]
pub struct ChecksReport {
    pub model: String,
    pub n_paths: usize,
    pub k_sigma: f64,
    pub cells: Vec<CellChecks>,
    pub all_pass: bool,
}

/// What a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutcome {
    pub n_paths: usize,
    /// Labels of the conditioning cells processed, in order.
    pub cells: Vec<String>,
    /// Valuation rows (stages `value` and later).
    pub reports: Vec<ValuationReport>,
    /// Check results (stage `check`), `None` earlier.
    pub checks: Option<ChecksReport>,
    /// Files written, in creation order.
    pub files: Vec<PathBuf>,
}

/// Run the pipeline up to `stage` and write that prefix's artifacts.
pub fn run(resolved: &Resolved, stage: Stage, opts: &PipelineOptions) -> Result<PipelineOutcome> {
    fs::create_dir_all(&opts.out_dir)?;
    let threads = if opts.strict_determinism { 1 } else { opts.threads.max(1) };

    let mut files = Vec::new();
    let paths = simulate_ensemble(
        &resolved.model,
        &resolved.grid,
        resolved.n_paths,
        resolved.seed,
        threads,
    )?;
    files.push(write_run_json(&opts.out_dir, resolved)?);
    if opts.dump_paths {
        files.push(write_paths_csv(&opts.out_dir, &paths, resolved)?);
    }

    let mut outcome = PipelineOutcome {
        n_paths: paths.len(),
        cells: Vec::new(),
        reports: Vec::new(),
        checks: None,
        files,
    };
    if stage < Stage::Estimate {
        return Ok(outcome);
    }

    let mut cell_checks = Vec::new();
    for (cell, _count) in selected_cells(resolved, &paths)? {
        let label = cell.label(resolved.space.label(cell.state));
        let (rows, checks) =
            process_cell(resolved, &paths, cell, &label, stage, opts, &mut outcome.files)?;
        outcome.cells.push(label);
        outcome.reports.extend(rows);
        if let Some(c) = checks {
            cell_checks.push(c);
        }
    }

    if stage >= Stage::Check {
        let all_pass = cell_checks.iter().all(|c| c.pass);
        let report = ChecksReport {
            model: resolved.name.clone(),
            n_paths: paths.len(),
            k_sigma: resolved.k_sigma,
            cells: cell_checks,
            all_pass,
        };
        outcome.files.push(write_report_csv(
            &opts.out_dir,
            resolved,
            &outcome.reports,
            Some(&report.cells),
        )?);
        outcome.files.push(write_checks_json(&opts.out_dir, &report)?);
        outcome.checks = Some(report);
    } else if stage >= Stage::Value {
        outcome
            .files
            .push(write_report_csv(&opts.out_dir, resolved, &outcome.reports, None)?);
    }
    Ok(outcome)
}

/// The conditioning cells to process: all observed cells, or the requested
/// labels resolved against them (a requested label nobody occupies is an
/// empty cell, and an error).
fn selected_cells(resolved: &Resolved, paths: &[Path]) -> Result<Vec<(Cell, usize)>> {
    let observed = resolved.scheme.observed_cells(paths, &resolved.grid);
    match &resolved.requested_labels {
        None => Ok(observed),
        Some(wanted) => wanted
            .iter()
            .map(|want| {
                observed
                    .iter()
                    .find(|(c, _)| c.label(resolved.space.label(c.state)) == *want)
                    .copied()
                    .ok_or_else(|| Error::EmptyCell { label: want.clone() })
            })
            .collect(),
    }
}

/// Estimate, solve, value and check one conditioning cell, writing its
/// artifacts. Surfaces are dropped when the cell is done, so memory peaks
/// at one cell regardless of how many the run covers.
fn process_cell(
    resolved: &Resolved,
    paths: &[Path],
    cell: Cell,
    label: &str,
    stage: Stage,
    opts: &PipelineOptions,
    files: &mut Vec<PathBuf>,
) -> Result<(Vec<ValuationReport>, Option<CellChecks>)> {
    let n = resolved.space.len();
    let grid = &resolved.grid;
    let state_label = resolved.space.label(cell.state);

    let surfaces = estimate_moment_surfaces(
        paths,
        &resolved.scheme,
        cell,
        grid,
        state_label,
        n,
        Depth::Joint,
    )?;
    let rates = transition_rates(&surfaces)?;

    let cell_dir = opts.out_dir.join("cells").join(label);
    fs::create_dir_all(&cell_dir)?;
    files.push(write_cell_json(&cell_dir, resolved, &surfaces, label)?);
    files.push(write_p1_csv(&cell_dir, "p1.csv", resolved, |i, m| {
        surfaces.p1(i, m)
    })?);
    files.push(write_jump_counts_csv(&cell_dir, resolved, &surfaces)?);
    files.push(write_rates1_csv(&cell_dir, resolved, &rates)?);
    if opts.dump_surfaces {
        write_rates2_blocks(&cell_dir, resolved, &rates, files)?;
    }
    if stage < Stage::Solve {
        return Ok((Vec::new(), None));
    }

    let mut initial = vec![0.0; n];
    initial[cell.state] = 1.0;
    let solved = solve(&rates, &initial, true)?;
    let residuals = residual_and_consistency(&solved, &surfaces)?;
    let solver_consistent = residuals_within(&residuals, SOLVER_TOL);
    files.push(write_solver_json(&cell_dir, &residuals, solver_consistent)?);
    files.push(write_p1_csv(&cell_dir, "solved_p1.csv", resolved, |i, m| {
        solved.p1(i, m)
    })?);
    if opts.dump_surfaces {
        write_p2_blocks(&cell_dir, resolved, &solved, files)?;
    }
    if stage < Stage::Value {
        return Ok((Vec::new(), None));
    }

    let n_cell = surfaces.n_cell();
    let mut rows = Vec::new();
    for (name, spec) in &resolved.specs {
        let v_minus = expected_past_1d(spec, &solved, &rates, &resolved.discount)?;
        let dec = conditional_variance(spec, &solved, &rates, &resolved.discount)?;
        rows.push(ValuationReport {
            label: label.to_string(),
            spec: name.clone(),
            n_cell,
            v_plus: dec.v_plus,
            v_minus,
            s_plus: Some(dec.s_plus),
            variance: Some(dec.variance),
        });
    }
    if let Some(fp) = &resolved.free_policy {
        let v_plus =
            free_policy_prospective(fp, &resolved.space, &solved, &rates, &resolved.discount)?;
        let v_minus =
            free_policy_retrospective(fp, &resolved.space, &solved, &rates, &resolved.discount)?;
        rows.push(ValuationReport {
            label: label.to_string(),
            spec: "free_policy".into(),
            n_cell,
            v_plus,
            v_minus,
            s_plus: None,
            variance: None,
        });
    }
    if stage < Stage::Check {
        return Ok((rows, None));
    }

    let checks = check_cell(resolved, paths, cell, label, &rows, &residuals, solver_consistent)?;
    Ok((rows, Some(checks)))
}

/// Compare every valuation of a cell against the Monte Carlo oracle over the
/// same ensemble. At the estimated rates the valuation operators reproduce
/// the empirical conditional means exactly, so no discretization allowance
/// is needed: the `k·SE` band alone is the bound.
fn check_cell(
    resolved: &Resolved,
    paths: &[Path],
    cell: Cell,
    label: &str,
    rows: &[ValuationReport],
    residuals: &Residuals,
    solver_consistent: bool,
) -> Result<CellChecks> {
    let grid = &resolved.grid;
    let conv = grid.conventions();
    let state_label = resolved.space.label(cell.state);
    let k = resolved.k_sigma;

    let mut valuations = Vec::new();
    for row in rows {
        let (v_plus, v_minus, s_plus) = if row.spec == "free_policy" {
            let fp = resolved
                .free_policy
                .as_ref()
                .expect("free-policy row implies a free-policy specification");
            let o_vp =
                mc_conditional_mean(paths, &resolved.scheme, cell, grid, state_label, |i, p| {
                    path_payout_free_policy(
                        i,
                        p,
                        fp,
                        &resolved.space,
                        &resolved.discount,
                        grid,
                        PayoutSide::Future,
                    )
                })?;
            let o_vm =
                mc_conditional_mean(paths, &resolved.scheme, cell, grid, state_label, |i, p| {
                    path_payout_free_policy(
                        i,
                        p,
                        fp,
                        &resolved.space,
                        &resolved.discount,
                        grid,
                        PayoutSide::Past,
                    )
                })?;
            (
                compare(row.v_plus, &o_vp, k, 0.0),
                compare(row.v_minus, &o_vm, k, 0.0),
                None,
            )
        } else {
            let spec = spec_by_name(resolved, &row.spec)?;
            let o_vp =
                mc_conditional_mean(paths, &resolved.scheme, cell, grid, state_label, |_, p| {
                    Ok(path_payout_future(p, spec, &resolved.discount, &conv))
                })?;
            let o_vm =
                mc_conditional_mean(paths, &resolved.scheme, cell, grid, state_label, |_, p| {
                    Ok(path_payout_past(p, spec, &resolved.discount, &conv))
                })?;
            let o_sp =
                mc_conditional_mean(paths, &resolved.scheme, cell, grid, state_label, |_, p| {
                    let y = path_payout_future(p, spec, &resolved.discount, &conv);
                    Ok(y * y)
                })?;
            let s_plus = row
                .s_plus
                .map(|s| compare(s, &o_sp, k, 0.0))
                .expect("plain specifications carry a second moment");
            (
                compare(row.v_plus, &o_vp, k, 0.0),
                compare(row.v_minus, &o_vm, k, 0.0),
                Some(s_plus),
            )
        };
        let pass = v_plus.pass && v_minus.pass && s_plus.map_or(true, |c| c.pass);
        valuations.push(ValuationChecks {
            spec: row.spec.clone(),
            v_plus,
            v_minus,
            s_plus,
            pass,
        });
    }

    let pass = solver_consistent && valuations.iter().all(|v| v.pass);
    Ok(CellChecks {
        label: label.to_string(),
        n_cell: rows.first().map_or(0, |r| r.n_cell),
        residuals: *residuals,
        solver_consistent,
        valuations,
        pass,
    })
}

fn spec_by_name<'a>(resolved: &'a Resolved, name: &str) -> Result<&'a CashflowSpec1D> {
    resolved
        .specs
        .iter()
        .find(|(n, _)| n == name)
        .map(|(_, s)| s)
        .ok_or_else(|| Error::InvalidConfig {
            field: "cashflows".into(),
            message: format!("no payment specification named `{name}`"),
        })
}

fn residuals_within(r: &Residuals, tol: f64) -> bool {
    r.sup_p1 <= tol
        && r.conservation_p1 <= tol
        && r.sup_p2.map_or(true, |v| v <= tol)
        && r.conservation_p2.map_or(true, |v| v <= tol)
}

// ---------------------------------------------------------------------------
// Artifact writers. All numbers go through `Display`, which prints the
// shortest decimal that round-trips, so identical runs write identical bytes.
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunMeta<'a> {
    name: &'a str,
    states: &'a [String],
    n_paths: usize,
    seed: u64,
    t_max: f64,
    step: f64,
    pivot_time: f64,
    pivot_index: usize,
}

fn write_run_json(dir: &FsPath, resolved: &Resolved) -> Result<PathBuf> {
    let meta = RunMeta {
        name: &resolved.name,
        states: resolved.space.labels(),
        n_paths: resolved.n_paths,
        seed: resolved.seed,
        t_max: resolved.grid.t_max(),
        step: resolved.grid.step(),
        pivot_time: resolved.grid.pivot_time(),
        pivot_index: resolved.grid.pivot_index(),
    };
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&meta)?)?;
    Ok(path)
}

/// Run-length path dump: one row per sojourn segment, carrying the grid
/// time, the occupied state and the jump (the `ΔN` pair) that opened the
/// segment — empty for the initial segment.
fn write_paths_csv(dir: &FsPath, paths: &[Path], resolved: &Resolved) -> Result<PathBuf> {
    let path = dir.join("paths.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["path", "index", "time", "state", "from", "to"])?;
    for (k, p) in paths.iter().enumerate() {
        let mut prev: Option<usize> = None;
        for &(start, state) in p.segments() {
            let state = state as usize;
            let (from, to) = match prev {
                None => (String::new(), String::new()),
                Some(q) => (
                    resolved.space.label(q).to_string(),
                    resolved.space.label(state).to_string(),
                ),
            };
            w.write_record([
                k.to_string(),
                start.to_string(),
                resolved.grid.time(start as usize).to_string(),
                resolved.space.label(state).to_string(),
                from,
                to,
            ])?;
            prev = Some(state);
        }
    }
    w.flush()?;
    Ok(path)
}

#[derive(Serialize)]
struct CellMeta<'a> {
    label: &'a str,
    state: &'a str,
    bucket: Option<usize>,
    n_cell: usize,
    n_paths: usize,
    pivot_time: f64,
}

fn write_cell_json(
    dir: &FsPath,
    resolved: &Resolved,
    surfaces: &MomentSurfaces,
    label: &str,
) -> Result<PathBuf> {
    let cell = surfaces.cell();
    let meta = CellMeta {
        label,
        state: resolved.space.label(cell.state),
        bucket: cell.bucket,
        n_cell: surfaces.n_cell(),
        n_paths: resolved.n_paths,
        pivot_time: resolved.grid.pivot_time(),
    };
    let path = dir.join("cell.json");
    fs::write(&path, serde_json::to_string_pretty(&meta)?)?;
    Ok(path)
}

/// One row per grid point: `index,time,<one column per state>`.
fn write_p1_csv(
    dir: &FsPath,
    file: &str,
    resolved: &Resolved,
    value: impl Fn(usize, usize) -> f64,
) -> Result<PathBuf> {
    let path = dir.join(file);
    let mut w = csv::Writer::from_path(&path)?;
    let mut header = vec!["index".to_string(), "time".to_string()];
    header.extend(resolved.space.labels().iter().cloned());
    w.write_record(&header)?;
    let n = resolved.space.len();
    for m in 0..resolved.grid.len() {
        let mut rec = vec![m.to_string(), resolved.grid.time(m).to_string()];
        rec.extend((0..n).map(|i| value(i, m).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

/// Sparse jump-count increments, diagonal completion included.
fn write_jump_counts_csv(
    dir: &FsPath,
    resolved: &Resolved,
    surfaces: &MomentSurfaces,
) -> Result<PathBuf> {
    let path = dir.join("q1.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["from", "to", "index", "time", "count"])?;
    let n = resolved.space.len();
    for i in 0..n {
        for j in 0..n {
            for m in 0..resolved.grid.len() {
                let c = surfaces.jump_count(i, j, m);
                if c != 0.0 {
                    w.write_record([
                        resolved.space.label(i).to_string(),
                        resolved.space.label(j).to_string(),
                        m.to_string(),
                        resolved.grid.time(m).to_string(),
                        c.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(path)
}

/// Sparse one-dimensional rate increments `ΔΛ_ij`.
fn write_rates1_csv(dir: &FsPath, resolved: &Resolved, rates: &RateSystem) -> Result<PathBuf> {
    let path = dir.join("rates1.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["from", "to", "index", "time", "value"])?;
    let n = resolved.space.len();
    for i in 0..n {
        for j in 0..n {
            for m in 0..resolved.grid.len() {
                let v = rates.dl1(i, j, m);
                if v != 0.0 {
                    w.write_record([
                        resolved.space.label(i).to_string(),
                        resolved.space.label(j).to_string(),
                        m.to_string(),
                        resolved.grid.time(m).to_string(),
                        v.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(path)
}

/// One bare dense matrix per grid square: row index = first grid index,
/// column index = second. The file name carries the block identity.
fn write_matrix_csv(path: &PathBuf, block: &[f64], len: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for m1 in 0..len {
        let row: Vec<String> =
            (0..len).map(|m2| block[m1 * len + m2].to_string()).collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-dimensional rate blocks, one matrix file per touched `((i,j),(k,l))`.
fn write_rates2_blocks(
    dir: &FsPath,
    resolved: &Resolved,
    rates: &RateSystem,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let n = resolved.space.len();
    let len = resolved.grid.len();
    for (pair1, pair2, block) in rates.dl2().iter_present() {
        let name = format!(
            "rates2_{}_{}_{}_{}.csv",
            resolved.space.label(pair1 / n),
            resolved.space.label(pair1 % n),
            resolved.space.label(pair2 / n),
            resolved.space.label(pair2 % n),
        );
        let path = dir.join(name);
        write_matrix_csv(&path, block, len)?;
        files.push(path);
    }
    Ok(())
}

/// Solved joint occupation planes, one matrix file per state pair.
fn write_p2_blocks(
    dir: &FsPath,
    resolved: &Resolved,
    solved: &SolvedProbabilities,
    files: &mut Vec<PathBuf>,
) -> Result<()> {
    let n = resolved.space.len();
    let len = resolved.grid.len();
    for i in 0..n {
        for k in 0..n {
            let Some(plane) = solved.p2_plane(i, k) else { continue };
            let name = format!(
                "p2_{}_{}.csv",
                resolved.space.label(i),
                resolved.space.label(k)
            );
            let path = dir.join(name);
            write_matrix_csv(&path, plane, len)?;
            files.push(path);
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SolverMeta<'a> {
    residuals: &'a Residuals,
    consistent: bool,
    tolerance: f64,
}

fn write_solver_json(dir: &FsPath, residuals: &Residuals, consistent: bool) -> Result<PathBuf> {
    let path = dir.join("solver.json");
    let meta = SolverMeta { residuals, consistent, tolerance: SOLVER_TOL };
    fs::write(&path, serde_json::to_string_pretty(&meta)?)?;
    Ok(path)
}

/// The valuation table. With check results the oracle mean, standard error
/// and z-score of each compared quantity are filled in; a bare `value` run
/// leaves those columns empty.
fn write_report_csv(
    dir: &FsPath,
    resolved: &Resolved,
    rows: &[ValuationReport],
    checks: Option<&[CellChecks]>,
) -> Result<PathBuf> {
    let path = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record([
        "model", "label", "spec", "n_paths", "n_cell", "t_max", "step", "pivot", "v_plus",
        "v_minus", "s_plus", "variance", "v_plus_mc", "v_plus_se", "v_plus_z", "v_minus_mc",
        "v_minus_se", "v_minus_z", "s_plus_mc", "s_plus_se", "s_plus_z",
    ])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let find_checks = |label: &str, spec: &str| -> Option<&ValuationChecks> {
        checks?
            .iter()
            .find(|c| c.label == label)?
            .valuations
            .iter()
            .find(|v| v.spec == spec)
    };
    for r in rows {
        let vc = find_checks(&r.label, &r.spec);
        let cmp_cols = |c: Option<&Comparison>| -> [String; 3] {
            match c {
                None => [String::new(), String::new(), String::new()],
                Some(c) => [
                    c.oracle_mean.to_string(),
                    c.oracle_se.to_string(),
                    c.z.to_string(),
                ],
            }
        };
        let [vp_mc, vp_se, vp_z] = cmp_cols(vc.map(|v| &v.v_plus));
        let [vm_mc, vm_se, vm_z] = cmp_cols(vc.map(|v| &v.v_minus));
        let [sp_mc, sp_se, sp_z] = cmp_cols(vc.and_then(|v| v.s_plus.as_ref()));
        w.write_record([
            resolved.name.clone(),
            r.label.clone(),
            r.spec.clone(),
            resolved.n_paths.to_string(),
            r.n_cell.to_string(),
            resolved.grid.t_max().to_string(),
            resolved.grid.step().to_string(),
            resolved.grid.pivot_time().to_string(),
            r.v_plus.to_string(),
            r.v_minus.to_string(),
            opt(r.s_plus),
            opt(r.variance),
            vp_mc,
            vp_se,
            vp_z,
            vm_mc,
            vm_se,
            vm_z,
            sp_mc,
            sp_se,
            sp_z,
        ])?;
    }
    w.flush()?;
    Ok(path)
}

fn write_checks_json(dir: &FsPath, report: &ChecksReport) -> Result<PathBuf> {
    let path = dir.join("checks.json");
    fs::write(&path, serde_json::to_string_pretty(report)?)?;
    Ok(path)
}
