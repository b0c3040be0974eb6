//! Assertion-level and function-level scoring of candidates against the
//! oracle focal. Every compile and run happens in a fresh scratch directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tempfile::TempDir;

use crate::error::{Error, Result};
use crate::miner::ASSERTION_MACROS;
use crate::toolchain::{self, Toolchain};

use super::candidate::Candidate;
use super::coverage::{self, CoverageBackend};
use super::task::EvalTask;

pub const DEFAULT_K: usize = 10;
pub const DEFAULT_TEST_TIMEOUT: Duration = Duration::from_secs(10);
const HARNESS_FILE: &str = "harness.rs";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreOptions {
    pub k: usize,
    pub test_timeout: Duration,
    pub coverage: CoverageBackend,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            k: DEFAULT_K,
            test_timeout: DEFAULT_TEST_TIMEOUT,
            coverage: CoverageBackend::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertionScore {
    pub compiled: usize,
    pub passed: usize,
    /// Assertions scored: the first `k`, or all of them when fewer exist.
    pub total: usize,
    /// Assertions found before the cut to `k`.
    pub found: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FunctionScore {
    pub compiles: bool,
    pub branch_cov: Option<f64>,
    pub timed_out: bool,
}

/// Returns the index just past a string, char literal or comment starting at
/// `i`, if one starts there.
fn skip_opaque(b: &[u8], i: usize) -> Option<usize> {
    let at = |j: usize| b.get(j).copied();
    match b[i] {
        b'/' if at(i + 1) == Some(b'/') => Some(b[i..].iter().position(|&c| c == b'\n').map_or(b.len(), |p| i + p)),
        b'/' if at(i + 1) == Some(b'*') => {
            let mut depth = 1;
            let mut j = i + 2;
            while j < b.len() && depth > 0 {
                if b[j] == b'/' && at(j + 1) == Some(b'*') {
                    depth += 1;
                    j += 2;
                } else if b[j] == b'*' && at(j + 1) == Some(b'/') {
                    depth -= 1;
                    j += 2;
                } else {
                    j += 1;
                }
            }
            Some(j)
        }
        b'r' if matches!(at(i + 1), Some(b'"' | b'#')) && (i == 0 || !is_ident_byte(b[i - 1])) => {
            let mut j = i + 1;
            let mut hashes = 0;
            while at(j) == Some(b'#') {
                hashes += 1;
                j += 1;
            }
            if at(j) != Some(b'"') {
                return None;
            }
            j += 1;
            let close: Vec<u8> = std::iter::once(b'"').chain(std::iter::repeat_n(b'#', hashes)).collect();
            while j < b.len() {
                if b[j..].starts_with(&close) {
                    return Some(j + close.len());
                }
                j += 1;
            }
            Some(b.len())
        }
        b'"' => {
            let mut j = i + 1;
            while j < b.len() {
                match b[j] {
                    b'\\' => j += 2,
                    b'"' => return Some(j + 1),
                    _ => j += 1,
                }
            }
            Some(b.len())
        }
        b'\'' => {
            // Char literal, not a lifetime: 'x' or an escape.
            if at(i + 1) == Some(b'\\') {
                let end = b[i + 2..].iter().position(|&c| c == b'\'')?;
                Some(i + 2 + end + 1)
            } else {
                let s = std::str::from_utf8(&b[i + 1..]).ok()?;
                let ch = s.chars().next()?;
                let j = i + 1 + ch.len_utf8();
                (at(j) == Some(b'\'')).then_some(j + 1)
            }
        }
        _ => None,
    }
}

fn is_ident_byte(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

/// Index just past the group opened at `i`; `None` when it never closes.
fn match_group(b: &[u8], i: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut j = i;
    while j < b.len() {
        if let Some(next) = skip_opaque(b, j) {
            j = next;
            continue;
        }
        match b[j] {
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(j + 1);
                }
            }
            _ => {}
        }
        j += 1;
    }
    None
}

/// Assertion macro statements in source order, each captured whole with its
/// trailing semicolon. Assertions nested inside another are not listed.
pub fn extract_assertions(text: &str) -> Vec<String> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if let Some(next) = skip_opaque(b, i) {
            i = next;
            continue;
        }
        if is_ident_byte(b[i]) && (i == 0 || !is_ident_byte(b[i - 1])) {
            let end = i + b[i..].iter().position(|&c| !is_ident_byte(c)).unwrap_or(b.len() - i);
            let word = &text[i..end];
            let mut j = end;
            while j < b.len() && b[j].is_ascii_whitespace() {
                j += 1;
            }
            if ASSERTION_MACROS.contains(&word) && b.get(j) == Some(&b'!') {
                j += 1;
                while j < b.len() && b[j].is_ascii_whitespace() {
                    j += 1;
                }
                if matches!(b.get(j), Some(b'(' | b'[' | b'{')) {
                    let Some(close) = match_group(b, j) else {
                        // Unterminated: not a statement.
                        break;
                    };
                    let mut k = close;
                    while k < b.len() && b[k].is_ascii_whitespace() && b[k] != b'\n' {
                        k += 1;
                    }
                    let stmt_end = if b.get(k) == Some(&b';') { k + 1 } else { close };
                    out.push(text[i..stmt_end].to_string());
                    i = stmt_end;
                    continue;
                }
            }
            i = end;
            continue;
        }
        i += 1;
    }
    out
}

fn source_prefix(task: &EvalTask) -> String {
    let mut s = String::from("#![allow(unused)]\n");
    let imports = task.imports.trim();
    if !imports.is_empty() {
        s.push_str(imports);
        s.push('\n');
    }
    s
}

/// Oracle focal plus a one-test module around `body`.
pub fn assertion_harness(task: &EvalTask, body: &str) -> String {
    format!(
        "{}{}\n#[cfg(test)]\nmod tests {{\n    use super::*;\n    #[test]\n    fn check() {{\n        {body}\n    }}\n}}\n",
        source_prefix(task),
        task.oracle_focal.trim_end()
    )
}

/// Oracle focal followed by the candidate's test module, and the focal's
/// line span in that file.
pub fn function_harness(task: &EvalTask, test_module: &str) -> (String, (usize, usize)) {
    let prefix = source_prefix(task);
    let offset = prefix.matches('\n').count();
    let text = format!("{prefix}{}\n{}\n", task.oracle_focal.trim_end(), test_module);
    (text, (task.focal.lines.0 + offset, task.focal.lines.1 + offset))
}

struct Compiled {
    ok: bool,
    binary: PathBuf,
    stderr: String,
}

fn compile(dir: &Path, name: &str, source: &str, coverage: bool, tc: &Toolchain) -> Result<Compiled> {
    let src = dir.join(format!("{name}.rs"));
    fs::write(&src, source).map_err(|e| Error::io(&src, e))?;
    let binary = dir.join(name);
    let mut cmd = tc.rustc_cmd();
    cmd.current_dir(dir)
        .args(["--edition", "2021", "--test", "-A", "warnings", "-o"])
        .arg(&binary)
        .arg(&src);
    if coverage {
        cmd.args(["-C", "instrument-coverage", "-Z", "coverage-options=branch"]);
    }
    let out = toolchain::run(&mut cmd, Some(Duration::from_secs(120)), "rustc")?;
    Ok(Compiled {
        ok: out.success(),
        binary,
        stderr: out.stderr,
    })
}

fn run_tests(
    binary: &Path,
    dir: &Path,
    timeout: Duration,
    env: &[(&str, &Path)],
    tc: &Toolchain,
) -> Result<toolchain::ProcessOutput> {
    let mut cmd = tc.command(binary);
    cmd.current_dir(dir).args(["--test-threads", "1", "-q"]);
    for (k, v) in env {
        cmd.env(k, v);
    }
    toolchain::run(&mut cmd, Some(timeout), "test binary")
}

fn processed(c: &Candidate) -> &str {
    c.processed.as_deref().unwrap_or(&c.raw_completion)
}

/// Compiles and runs each of the first `k` assertions of `c` on its own
/// against the oracle focal.
pub fn score_assertions(
    c: &Candidate,
    task: &EvalTask,
    k: usize,
    opts: &ScoreOptions,
    tc: &Toolchain,
) -> Result<AssertionScore> {
    let all = extract_assertions(processed(c));
    let found = all.len();
    if found == 0 {
        return Ok(AssertionScore::default());
    }
    let scratch = TempDir::new().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let dir = scratch.path();
    let empty = compile(dir, "empty", &assertion_harness(task, ""), false, tc)?;
    if !empty.ok {
        return Err(Error::HarnessBuildFailed {
            task: task.task_id.clone(),
            message: empty.stderr,
        });
    }
    let mut score = AssertionScore {
        found,
        ..Default::default()
    };
    for (i, a) in all.iter().take(k).enumerate() {
        score.total += 1;
        let built = compile(dir, &format!("a{i}"), &assertion_harness(task, a), false, tc)?;
        if !built.ok {
            continue;
        }
        score.compiled += 1;
        if run_tests(&built.binary, dir, opts.test_timeout, &[], tc)?.success() {
            score.passed += 1;
        }
    }
    Ok(score)
}

/// Compiles the whole test module against the oracle and, when it builds,
/// measures branch coverage of the focal function.
pub fn score_function(
    c: &Candidate,
    task: &EvalTask,
    opts: &ScoreOptions,
    tc: &Toolchain,
) -> Result<FunctionScore> {
    let scratch = TempDir::new().map_err(|e| Error::io(std::env::temp_dir(), e))?;
    let dir = scratch.path();
    let (source, span) = function_harness(task, processed(c));
    let built = compile(dir, "harness", &source, true, tc)?;
    if !built.ok {
        return Ok(FunctionScore::default());
    }
    let profiles = dir.join("profiles");
    fs::create_dir_all(&profiles).map_err(|e| Error::io(&profiles, e))?;
    let pattern = profiles.join("cov-%p.profraw");
    let run = run_tests(&built.binary, dir, opts.test_timeout, &[("LLVM_PROFILE_FILE", &pattern)], tc)?;
    if run.timed_out {
        return Ok(FunctionScore {
            compiles: true,
            branch_cov: Some(0.0),
            timed_out: true,
        });
    }
    let report = coverage::report(opts.coverage, &profiles, &built.binary, tc)?;
    let counts = coverage::parse_report(&report, HARNESS_FILE, span)?;
    Ok(FunctionScore {
        compiles: true,
        branch_cov: Some(counts.ratio()),
        timed_out: false,
    })
}
