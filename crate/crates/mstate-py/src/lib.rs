//! Python bindings for the multi-state valuation pipeline.
//!
//! The module mirrors the command-line interface at the coarsest useful
//! granularity: configurations travel as JSON strings (the same schema the
//! CLI reads from disk), and `run` executes a pipeline prefix and returns a
//! JSON summary of valuations, checks and written files.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use mstate::pipeline::{run as run_pipeline, PipelineOptions, Stage};
use mstate::RunConfig;

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Crate version of the underlying engine.
#[pyfunction]
fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

/// Names of the shipped example configurations.
#[pyfunction]
fn example_names() -> Vec<String> {
    mstate::example_names().iter().map(|s| s.to_string()).collect()
}

/// The shipped configuration `name` as a JSON string, ready to edit and pass
/// to `run`.
#[pyfunction]
fn default_config(name: &str) -> PyResult<String> {
    let cfg = mstate::example_config(name).map_err(value_err)?;
    cfg.to_json().map_err(runtime_err)
}

/// Validate a configuration without running anything. Returns a short JSON
/// summary of the resolved run.
#[pyfunction]
fn validate_config(config_json: &str) -> PyResult<String> {
    let cfg = RunConfig::from_json(config_json).map_err(value_err)?;
    let resolved = cfg.resolve().map_err(value_err)?;
    let summary = serde_json::json!({
        "name": resolved.name,
        "states": resolved.space.labels(),
        "n_paths": resolved.n_paths,
        "grid_points": resolved.grid.len(),
        "pivot_time": resolved.grid.pivot_time(),
    });
    Ok(summary.to_string())
}

/// Run the pipeline up to `stage` (`simulate`, `estimate`, `solve`, `value`,
/// `check`, or the alias `all`) on the configuration given as a JSON string.
///
/// Artifacts are written under `out_dir` when given; otherwise a temporary
/// directory is used and discarded, and only the in-memory summary survives.
/// The return value is a JSON string with the processed cells, the valuation
/// rows, the check report (stage `check` only, else null), and the files
/// written.
#[pyfunction]
#[pyo3(signature = (
    config_json,
    stage = "check",
    out_dir = None,
    threads = 1,
    strict_determinism = false,
    dump_surfaces = false,
    dump_paths = false,
))]
#[allow(clippy::too_many_arguments)]
fn run(
    config_json: &str,
    stage: &str,
    out_dir: Option<String>,
    threads: usize,
    strict_determinism: bool,
    dump_surfaces: bool,
    dump_paths: bool,
) -> PyResult<String> {
    let cfg = RunConfig::from_json(config_json).map_err(value_err)?;
    let resolved = cfg.resolve().map_err(value_err)?;
    let stage = match stage {
        "simulate" => Stage::Simulate,
        "estimate" => Stage::Estimate,
        "solve" => Stage::Solve,
        "value" => Stage::Value,
        "check" | "all" => Stage::Check,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown stage `{other}`; expected simulate, estimate, solve, value, check or all"
            )))
        }
    };

    let keep_files = out_dir.is_some();
    let (_guard, dir) = match out_dir {
        Some(d) => (None, PathBuf::from(d)),
        None => {
            let t = tempfile::tempdir().map_err(runtime_err)?;
            let p = t.path().to_path_buf();
            (Some(t), p)
        }
    };
    let mut opts = PipelineOptions::new(dir);
    opts.threads = threads;
    opts.strict_determinism = strict_determinism;
    opts.dump_surfaces = dump_surfaces;
    opts.dump_paths = dump_paths;

    let outcome = run_pipeline(&resolved, stage, &opts).map_err(runtime_err)?;

    let reports: Vec<serde_json::Value> = outcome
        .reports
        .iter()
        .map(|r| {
            serde_json::json!({
                "label": r.label,
                "spec": r.spec,
                "n_cell": r.n_cell,
                "v_plus": r.v_plus,
                "v_minus": r.v_minus,
                "s_plus": r.s_plus,
                "variance": r.variance,
            })
        })
        .collect();
    let checks = match &outcome.checks {
        Some(c) => serde_json::to_value(c).map_err(runtime_err)?,
        None => serde_json::Value::Null,
    };
    let files: Vec<String> = if keep_files {
        outcome.files.iter().map(|p| p.display().to_string()).collect()
    } else {
        Vec::new()
    };
    let summary = serde_json::json!({
        "n_paths": outcome.n_paths,
        "cells": outcome.cells,
        "reports": reports,
        "checks": checks,
        "files": files,
    });
    Ok(summary.to_string())
}

#[pymodule]
fn mstate_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(example_names, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(validate_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
