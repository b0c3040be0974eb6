//! Generated candidates and their bracket repair.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::task::EvalTask;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub task_id: String,
    /// The whole generated test module, header included.
    pub raw_completion: String,
    pub processed: Option<String>,
}

impl Candidate {
    /// A candidate from a model continuation of the task prompt. Completions
    /// that already carry the test module header are taken as is.
    pub fn from_completion(task: &EvalTask, completion: &str) -> Self {
        let raw = if completion.trim_start().starts_with("#[cfg(test)]") {
            completion.to_string()
        } else {
            format!("{}{completion}", task.test_header)
        };
        Candidate {
            task_id: task.task_id.clone(),
            raw_completion: raw,
            processed: None,
        }
    }
}

fn brace_balance(s: &str) -> (usize, usize) {
    (s.matches('{').count(), s.matches('}').count())
}

/// Bracket repair on raw text. Balanced input is returned unchanged.
pub fn repair(raw: &str) -> Result<String> {
    let (open, close) = brace_balance(raw);
    if open == close {
        return Ok(raw.to_string());
    }
    if close > open {
        return Err(Error::Unrepairable(format!("{} unmatched `}}`", close - open)));
    }
    let mut lines: Vec<&str> = raw.lines().collect();
    while lines.last().is_some_and(|l| l.trim().is_empty()) {
        lines.pop();
    }
    if lines.last().is_some_and(|l| !l.trim_end().ends_with(';')) {
        lines.pop();
    }
    let mut out = lines.join("\n");
    let (open, close) = brace_balance(&out);
    if close > open {
        return Err(Error::Unrepairable(format!("{} unmatched `}}`", close - open)));
    }
    for _ in close..open {
        out.push_str("\n}");
    }
    Ok(out)
}

pub fn postprocess(c: &Candidate) -> Result<Candidate> {
    let source = c.processed.as_deref().unwrap_or(&c.raw_completion);
    Ok(Candidate {
        processed: Some(repair(source)?),
        ..c.clone()
    })
}

#[derive(Deserialize)]
struct CompletionLine {
    task_id: String,
    completion: String,
}

/// Reads `{task_id, completion}` lines.
pub fn load_completions(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: CompletionLine = serde_json::from_str(l)?;
            Ok((c.task_id, c.completion))
        })
        .collect()
}
