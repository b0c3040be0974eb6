//! Branch coverage through an external reporter, restricted to a line span
//! of one source file.

use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::toolchain::{self, Toolchain};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageBackend {
    /// `llvm-cov export` JSON.
    #[default]
    LlvmCov,
    /// `grcov` lcov output.
    Grcov,
}

impl std::str::FromStr for CoverageBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "llvm-cov" => Ok(CoverageBackend::LlvmCov),
            "grcov" => Ok(CoverageBackend::Grcov),
            other => Err(Error::Config(format!("unknown coverage backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchCounts {
    pub covered: usize,
    pub total: usize,
    /// Some line in the span ran at least once.
    pub executed: bool,
}

impl BranchCounts {
    /// Branch ratio; a branch-free span counts as fully covered once it ran.
    pub fn ratio(&self) -> f64 {
        if self.total == 0 {
            if self.executed {
                1.0
            } else {
                0.0
            }
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

fn in_span(line: usize, span: (usize, usize)) -> bool {
    span.0 <= line && line <= span.1
}

fn file_matches(name: &str, file: &str) -> bool {
    name == file || Path::new(name).file_name().is_some_and(|n| n == file) || name.ends_with(&format!("/{file}"))
}

/// Parses either report flavour, detected from the first character.
pub fn parse_report(text: &str, file: &str, span: (usize, usize)) -> Result<BranchCounts> {
    if text.trim_start().starts_with('{') {
        parse_llvm_json(text, file, span)
    } else {
        parse_lcov(text, file, span)
    }
}

pub fn parse_lcov(text: &str, file: &str, span: (usize, usize)) -> Result<BranchCounts> {
    let bad = |l: &str| Error::CoverageParse(format!("bad lcov line `{l}`"));
    let mut counts = BranchCounts::default();
    let mut current = false;
    let mut seen_record = false;
    for line in text.lines() {
        let line = line.trim();
        if let Some(path) = line.strip_prefix("SF:") {
            current = file_matches(path, file);
            seen_record = true;
        } else if line == "end_of_record" {
            current = false;
        } else if !current {
            continue;
        } else if let Some(rest) = line.strip_prefix("BRDA:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 4 {
                return Err(bad(line));
            }
            let ln: usize = parts[0].parse().map_err(|_| bad(line))?;
            if in_span(ln, span) {
                counts.total += 1;
                let taken = match parts[3] {
                    "-" => 0,
                    n => n.parse::<u64>().map_err(|_| bad(line))?,
                };
                if taken > 0 {
                    counts.covered += 1;
                }
            }
        } else if let Some(rest) = line.strip_prefix("DA:") {
            let mut parts = rest.split(',');
            let ln: usize = parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| bad(line))?;
            let hits: u64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(|| bad(line))?;
            if in_span(ln, span) && hits > 0 {
                counts.executed = true;
            }
        }
    }
    if !seen_record && !text.trim().is_empty() {
        return Err(Error::CoverageParse("no lcov records".into()));
    }
    Ok(counts)
}

pub fn parse_llvm_json(text: &str, file: &str, span: (usize, usize)) -> Result<BranchCounts> {
    let root: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::CoverageParse(e.to_string()))?;
    let data = root
        .get("data")
        .and_then(|d| d.as_array())
        .ok_or_else(|| Error::CoverageParse("missing `data` array".into()))?;
    let mut counts = BranchCounts::default();
    let num = |v: &serde_json::Value, i: usize| v.get(i).and_then(|x| x.as_u64());
    for export in data {
        let files = export.get("files").and_then(|f| f.as_array()).into_iter().flatten();
        for f in files {
            let name = f.get("filename").and_then(|n| n.as_str()).unwrap_or("");
            if !file_matches(name, file) {
                continue;
            }
            for b in f.get("branches").and_then(|b| b.as_array()).into_iter().flatten() {
                let (Some(line), Some(t), Some(fl)) = (num(b, 0), num(b, 4), num(b, 5)) else {
                    return Err(Error::CoverageParse(format!("bad branch entry {b}")));
                };
                if in_span(line as usize, span) {
                    counts.total += 2;
                    counts.covered += (t > 0) as usize + (fl > 0) as usize;
                }
            }
            for s in f.get("segments").and_then(|s| s.as_array()).into_iter().flatten() {
                let has_count = s.get(3).and_then(|x| x.as_bool()).unwrap_or(false);
                if let (Some(line), Some(count)) = (num(s, 0), num(s, 2)) {
                    if has_count && count > 0 && in_span(line as usize, span) {
                        counts.executed = true;
                    }
                }
            }
        }
    }
    Ok(counts)
}

/// Merges the raw profiles in `dir` and renders a report for `binary`.
pub fn report(
    backend: CoverageBackend,
    dir: &Path,
    binary: &Path,
    tc: &Toolchain,
) -> Result<String> {
    let bin_dir = tc.llvm_bin_dir()?;
    let profiles: Vec<_> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "profraw"))
        .collect();
    if profiles.is_empty() {
        return Err(Error::CoverageParse("no profile was written".into()));
    }
    let limit = Some(Duration::from_secs(120));
    let missing = |e: Error| match e {
        Error::ToolchainMissing(t) => Error::CoverageToolMissing(t),
        e => e,
    };
    match backend {
        CoverageBackend::LlvmCov => {
            let merged = dir.join("merged.profdata");
            let mut cmd = tc.command(bin_dir.join("llvm-profdata"));
            cmd.args(["merge", "-sparse"]).args(&profiles).arg("-o").arg(&merged);
            let out = toolchain::run(&mut cmd, limit, "llvm-profdata").map_err(missing)?;
            if !out.success() {
                return Err(Error::CoverageParse(out.stderr_tail(10)));
            }
            let mut cmd = tc.command(bin_dir.join("llvm-cov"));
            cmd.args(["export", "-format=text", "-instr-profile"]).arg(&merged).arg(binary);
            let out = toolchain::run(&mut cmd, limit, "llvm-cov").map_err(missing)?;
            if !out.success() {
                return Err(Error::CoverageParse(out.stderr_tail(10)));
            }
            Ok(out.stdout)
        }
        CoverageBackend::Grcov => {
            let mut cmd = tc.command(&tc.grcov);
            cmd.arg(dir)
                .arg("-b")
                .arg(binary)
                .arg("-s")
                .arg(dir)
                .args(["-t", "lcov", "--branch", "--llvm-path"])
                .arg(&bin_dir);
            let out = toolchain::run(&mut cmd, limit, "grcov").map_err(missing)?;
            if !out.success() {
                return Err(Error::CoverageParse(out.stderr_tail(10)));
            }
            Ok(out.stdout)
        }
    }
}
