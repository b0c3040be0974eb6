//! Per-task rows, aggregation and report rendering.

use std::collections::HashMap;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pool::map_bounded;
use crate::toolchain::Toolchain;

use super::candidate::{postprocess, Candidate};
use super::scoring::{score_assertions, score_function, ScoreOptions};
use super::task::EvalTask;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskRow {
    pub task_id: String,
    pub compiled: usize,
    pub passed: usize,
    pub total: usize,
    pub assertions_found: usize,
    pub function_compiles: bool,
    pub branch_cov: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Reference scores in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub assertion_cr: f64,
    pub assertion_acc: f64,
    pub function_cr: f64,
    pub branch_cov: f64,
}

impl Baseline {
    pub fn gpt4() -> Self {
        Baseline {
            name: "GPT-4".into(),
            assertion_cr: 95.53,
            assertion_acc: 75.04,
            function_cr: 93.90,
            branch_cov: 47.94,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub assertion_cr: f64,
    pub assertion_acc: f64,
    pub function_cr: f64,
    pub mean_branch_cov: f64,
    pub candidates: usize,
    pub per_task: Vec<TaskRow>,
    pub baseline: Baseline,
}

fn ratio(n: usize, d: usize) -> f64 {
    if d == 0 {
        0.0
    } else {
        n as f64 / d as f64
    }
}

/// Assertion rates pool all assertions; coverage averages over every
/// candidate, counting non-compiling ones as zero.
pub fn aggregate(rows: Vec<TaskRow>) -> EvalReport {
    let compiled: usize = rows.iter().map(|r| r.compiled).sum();
    let passed: usize = rows.iter().map(|r| r.passed).sum();
    let total: usize = rows.iter().map(|r| r.total).sum();
    let compiling = rows.iter().filter(|r| r.function_compiles).count();
    let cov: f64 = rows
        .iter()
        .map(|r| if r.function_compiles { r.branch_cov.unwrap_or(0.0) } else { 0.0 })
        .sum();
    let n = rows.len();
    EvalReport {
        assertion_cr: ratio(compiled, total),
        assertion_acc: ratio(passed, total),
        function_cr: ratio(compiling, n),
        mean_branch_cov: if n == 0 { 0.0 } else { cov / n as f64 },
        candidates: n,
        per_task: rows,
        baseline: Baseline::gpt4(),
    }
}

/// Scores one candidate. Repair and scoring failures become notes on the
/// row; only environment problems abort.
pub fn score_candidate(c: &Candidate, task: &EvalTask, opts: &ScoreOptions, tc: &Toolchain) -> Result<TaskRow> {
    let mut row = TaskRow {
        task_id: task.task_id.clone(),
        ..Default::default()
    };
    let c = match postprocess(c) {
        Ok(c) => c,
        Err(e) => {
            row.notes.push(e.to_string());
            return Ok(row);
        }
    };
    match score_assertions(&c, task, opts.k, opts, tc) {
        Ok(s) => {
            row.compiled = s.compiled;
            row.passed = s.passed;
            row.total = s.total;
            row.assertions_found = s.found;
            if s.found < opts.k {
                row.notes.push(format!("only {} assertions found", s.found));
            }
        }
        Err(e) if e.is_environmental() => return Err(e),
        Err(e) => row.notes.push(e.to_string()),
    }
    let f = score_function(&c, task, opts, tc)?;
    row.function_compiles = f.compiles;
    row.branch_cov = f.branch_cov;
    if f.timed_out {
        row.notes.push("test run timed out".into());
    }
    Ok(row)
}

/// Scores `(task_id, completion)` pairs on `jobs` workers. Completions for
/// unknown tasks are skipped with a warning.
pub fn evaluate(
    tasks: &[EvalTask],
    completions: &[(String, String)],
    opts: &ScoreOptions,
    jobs: usize,
    tc: &Toolchain,
) -> Result<EvalReport> {
    let by_id: HashMap<&str, &EvalTask> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let mut work = Vec::new();
    for (id, completion) in completions {
        match by_id.get(id.as_str()) {
            Some(t) => work.push((*t, Candidate::from_completion(t, completion))),
            None => warn!("no task `{id}`; completion skipped"),
        }
    }
    let rows = map_bounded(work, jobs, |(t, c)| score_candidate(&c, t, opts, tc));
    Ok(aggregate(rows.into_iter().collect::<Result<Vec<_>>>()?))
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

impl EvalReport {
    /// Plain-text table with the reference row underneath.
    pub fn table(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>10} {:>10}\n",
            "model", "Assert. CR", "Assert. Acc", "Func. CR", "Cov"
        ));
        s.push_str(&format!(
            "{:<10} {:>12} {:>12} {:>10} {:>10}\n",
            "this run",
            pct(self.assertion_cr),
            pct(self.assertion_acc),
            pct(self.function_cr),
            pct(self.mean_branch_cov)
        ));
        let b = &self.baseline;
        s.push_str(&format!(
            "{:<10} {:>12.2} {:>12.2} {:>10.2} {:>10.2}\n",
            b.name, b.assertion_cr, b.assertion_acc, b.function_cr, b.branch_cov
        ));
        s
    }
}
