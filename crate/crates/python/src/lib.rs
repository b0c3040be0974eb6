//! Python bindings. Structured results cross the boundary as JSON and come
//! out as plain dicts and lists.

use std::path::PathBuf;

use augtest::fuzz::SeedInput;
use augtest::miner::FocalTestPair;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::Serialize;

create_exception!(augtest_py, AugtestError, PyException);

fn err(e: augtest::Error) -> PyErr {
    AugtestError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| AugtestError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Mines focal/test pairs from a package; returns the mining report.
#[pyfunction]
fn mine<'py>(py: Python<'py>, root: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let ws = augtest::project::scan_workspace(root).map_err(err)?;
    to_py(py, &augtest::miner::mine_pairs(&ws))
}

#[pyfunction]
fn parse_fuzz_target<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &augtest::fuzz::parse_fuzz_target(path).map_err(err)?)
}

/// Template text of the fuzz target at `path`.
#[pyfunction]
fn template(path: PathBuf) -> PyResult<String> {
    let unit = augtest::fuzz::parse_fuzz_target(path).map_err(err)?;
    Ok(augtest::synth::transform(&unit).map_err(err)?.text())
}

/// One unit test per seed as `(name, text)`.
#[pyfunction]
fn instantiate(path: PathBuf, seeds: Vec<Vec<u8>>) -> PyResult<Vec<(String, String)>> {
    let unit = augtest::fuzz::parse_fuzz_target(path).map_err(err)?;
    let tpl = augtest::synth::transform(&unit).map_err(err)?;
    let seeds: Vec<SeedInput> = seeds.into_iter().map(|b| SeedInput::new(b, &unit.id)).collect();
    Ok(augtest::synth::instantiate(&tpl, &seeds)
        .into_iter()
        .map(|t| (t.name, t.text))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (seeds, n_samples=40, max_len=64, rng_seed=0))]
fn select<'py>(
    py: Python<'py>,
    seeds: Vec<Vec<u8>>,
    n_samples: usize,
    max_len: usize,
    rng_seed: u64,
) -> PyResult<Vec<Bound<'py, PyBytes>>> {
    let cfg = augtest::select::SelectionConfig {
        n_samples,
        max_len,
        rng_seed,
    };
    cfg.validate().map_err(err)?;
    let seeds: Vec<SeedInput> = seeds.into_iter().map(|b| SeedInput::new(b, "py")).collect();
    Ok(augtest::select::select(&seeds, &cfg)
        .iter()
        .map(|s| PyBytes::new(py, &s.bytes))
        .collect())
}

/// Builds a dataset from pair files written by `augtest mine` / `augment`
/// and writes it to `out`; returns the corpus stats.
#[pyfunction]
#[pyo3(signature = (pair_files, out, budget=512))]
fn build_dataset<'py>(
    py: Python<'py>,
    pair_files: Vec<PathBuf>,
    out: PathBuf,
    budget: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let mut pairs: Vec<FocalTestPair> = Vec::new();
    for f in &pair_files {
        pairs.extend(augtest::cli::read_pairs(f).map_err(err)?);
    }
    let (records, stats) = augtest::dataset::build(&pairs, budget, None);
    augtest::dataset::serialize_with_stats(&records, &stats, &out).map_err(err)?;
    to_py(py, &stats)
}

/// Prompts of every task under `path`, keyed by task id.
#[pyfunction]
fn prompts(path: PathBuf) -> PyResult<Vec<(String, String)>> {
    let tasks = augtest::eval::load_tasks(&path).map_err(err)?;
    Ok(tasks
        .iter()
        .map(|t| (t.task_id.clone(), augtest::eval::build_prompt(t)))
        .collect())
}

/// Bracket repair of a raw completion.
#[pyfunction]
fn repair(text: &str) -> PyResult<String> {
    augtest::eval::repair(text).map_err(err)
}

#[pyfunction]
fn extract_assertions(text: &str) -> Vec<String> {
    augtest::eval::extract_assertions(text)
}

#[pymodule]
fn augtest_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("AugtestError", m.py().get_type::<AugtestError>())?;
    m.add_function(wrap_pyfunction!(mine, m)?)?;
    m.add_function(wrap_pyfunction!(parse_fuzz_target, m)?)?;
    m.add_function(wrap_pyfunction!(template, m)?)?;
    m.add_function(wrap_pyfunction!(instantiate, m)?)?;
    m.add_function(wrap_pyfunction!(select, m)?)?;
    m.add_function(wrap_pyfunction!(build_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(prompts, m)?)?;
    m.add_function(wrap_pyfunction!(repair, m)?)?;
    m.add_function(wrap_pyfunction!(extract_assertions, m)?)?;
    Ok(())
}
