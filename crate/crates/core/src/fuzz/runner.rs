//! Driving `cargo fuzz` over an instrumented copy of a workspace.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::project::{is_missing_subcommand, Workspace};
use crate::toolchain::{self, Toolchain};

use super::sink::{self, SeedInput};
use super::{instrument_reporter, parse_fuzz_target, FuzzTargetUnit, SINK_ENV, SINK_LIMIT_ENV};

/// Extra time granted to `cargo fuzz run` beyond `-max_total_time` before
/// the process group is killed.
const KILL_GRACE: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuzzOptions {
    pub timeout: Duration,
    /// Upper bound on inputs the reporter records per run.
    pub sink_limit: usize,
}

impl Default for FuzzOptions {
    fn default() -> Self {
        FuzzOptions {
            timeout: Duration::from_secs(60),
            sink_limit: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RunStatus {
    /// The fuzzer stopped on its own at `-max_total_time`.
    Completed,
    /// Killed by the watchdog.
    TimedOut,
    /// The fuzzed program crashed; inputs recorded before the crash are kept.
    Crashed { code: Option<i32> },
    /// Nothing was run (zero timeout).
    Skipped,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FuzzOutcome {
    pub target_id: String,
    pub status: RunStatus,
    /// Raw harvested inputs, duplicates included.
    pub seeds: Vec<SeedInput>,
    pub malformed_lines: usize,
    pub partial_tail_discarded: bool,
}

#[derive(Debug, Clone)]
pub struct PreparedTarget {
    pub unit: FuzzTargetUnit,
    pub bin_name: String,
}

/// A copy of the workspace whose fuzz targets carry the reporter.
#[derive(Debug, Clone)]
pub struct InstrumentedWorkspace {
    pub root: PathBuf,
    pub sink_dir: PathBuf,
    pub targets: Vec<PreparedTarget>,
    /// `(target id, reason)` for targets left out.
    pub skipped: Vec<(String, String)>,
}

fn copy_tree(from: &Path, to: &Path) -> Result<()> {
    if to.exists() {
        fs::remove_dir_all(to).map_err(|e| Error::io(to, e))?;
    }
    let walker = WalkDir::new(from).follow_links(false).into_iter().filter_entry(|e| {
        let name = e.file_name().to_string_lossy();
        let build_dir = e.file_type().is_dir() && e.depth() > 0 && (name == "target" || name == ".git");
        !build_dir && !e.path().starts_with(to)
    });
    for entry in walker {
        let entry = entry.map_err(|e| Error::io(from, e.into()))?;
        let rel = entry.path().strip_prefix(from).expect("walk stays under root");
        let dest = to.join(rel);
        if entry.file_type().is_dir() {
            fs::create_dir_all(&dest).map_err(|e| Error::io(&dest, e))?;
        } else if entry.path_is_symlink() {
            // Only links that stay inside the tree are materialised.
            match entry.path().canonicalize() {
                Ok(real) if real.starts_with(from) && real.is_file() => {
                    fs::copy(&real, &dest).map_err(|e| Error::io(&dest, e))?;
                }
                _ => {}
            }
        } else {
            fs::copy(entry.path(), &dest).map_err(|e| Error::io(&dest, e))?;
        }
    }
    Ok(())
}

/// Copies `ws` below `work_dir`, instruments every supported fuzz target and
/// builds them in fuzz mode. When the package belongs to a larger tree
/// (a cargo workspace), `context_root` names that tree and is copied whole so
/// inherited manifest keys keep resolving.
pub fn prepare_instrumented_copy(
    ws: &Workspace,
    context_root: Option<&Path>,
    work_dir: &Path,
    tc: &Toolchain,
) -> Result<InstrumentedWorkspace> {
    fs::create_dir_all(work_dir).map_err(|e| Error::io(work_dir, e))?;
    let work_dir = &work_dir.canonicalize().map_err(|e| Error::io(work_dir, e))?;
    let context = match context_root {
        Some(c) => c.canonicalize().map_err(|e| Error::io(c, e))?,
        None => ws.root_path.clone(),
    };
    let rel_pkg = ws.root_path.strip_prefix(&context).unwrap_or(Path::new("")).to_path_buf();
    let label = if rel_pkg.as_os_str().is_empty() {
        ws.repo_id()
    } else {
        let name = context.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        crate::syntax::sanitize_ident(&format!("{name}/{}", rel_pkg.display()))
    };
    let copy_root = work_dir.join(&label);
    copy_tree(&context, &copy_root)?;
    let root = copy_root.join(&rel_pkg);
    let sink_dir = work_dir.join(format!("{label}-sinks"));
    fs::create_dir_all(&sink_dir).map_err(|e| Error::io(&sink_dir, e))?;

    let mut targets = Vec::new();
    let mut skipped = Vec::new();
    for file in &ws.fuzz_target_files {
        let unit = match parse_fuzz_target(file) {
            Ok(u) => u,
            Err(e) => {
                warn!("skipping {}: {e}", file.display());
                skipped.push((crate::project::stem(file), e.to_string()));
                continue;
            }
        };
        let instrumented = match instrument_reporter(&unit) {
            Ok(s) => s,
            Err(e) => {
                warn!("skipping {}: {e}", unit.id);
                skipped.push((unit.id.clone(), e.to_string()));
                continue;
            }
        };
        let rel = file.strip_prefix(&ws.root_path).expect("fuzz targets live under the root");
        let dest = root.join(rel);
        fs::write(&dest, instrumented).map_err(|e| Error::io(&dest, e))?;
        targets.push(PreparedTarget {
            bin_name: ws.fuzz_bin_name(file),
            unit,
        });
    }

    if !targets.is_empty() {
        let mut cmd = tc.cargo_cmd();
        cmd.current_dir(&root)
            .args(["fuzz", "build", "--sanitizer"])
            .arg(&tc.sanitizer);
        if let Some(dir) = &tc.fuzz_target_dir {
            cmd.arg("--target-dir").arg(dir);
        }
        let out = toolchain::run(&mut cmd, None, "cargo")?;
        if is_missing_subcommand(&out.stderr) {
            return Err(Error::ToolchainMissing("cargo-fuzz".into()));
        }
        if !out.success() {
            return Err(Error::FuzzBuildFailed(out.stderr_tail(30)));
        }
    }
    Ok(InstrumentedWorkspace {
        root,
        sink_dir,
        targets,
        skipped,
    })
}

fn looks_like_crash(stderr: &str) -> bool {
    ["==ERROR: libFuzzer", "deadly signal", "Test unit written to", "panicked at", "==ERROR: AddressSanitizer"]
        .iter()
        .any(|m| stderr.contains(m))
}

/// Runs one instrumented target for `opts.timeout` and harvests its sink.
pub fn fuzz(
    iws: &InstrumentedWorkspace,
    target: &PreparedTarget,
    opts: &FuzzOptions,
    tc: &Toolchain,
) -> Result<FuzzOutcome> {
    let id = target.unit.id.clone();
    if opts.timeout.is_zero() {
        return Ok(FuzzOutcome {
            target_id: id,
            status: RunStatus::Skipped,
            seeds: Vec::new(),
            malformed_lines: 0,
            partial_tail_discarded: false,
        });
    }
    let sink_path = iws.sink_dir.join(format!("{id}.hex"));
    if sink_path.exists() {
        fs::remove_file(&sink_path).map_err(|e| Error::io(&sink_path, e))?;
    }
    // libFuzzer only accepts whole seconds.
    let secs = opts.timeout.as_secs_f64().ceil().max(1.0) as u64;

    let mut cmd = tc.cargo_cmd();
    cmd.current_dir(&iws.root)
        .args(["fuzz", "run", "--sanitizer"])
        .arg(&tc.sanitizer);
    if let Some(dir) = &tc.fuzz_target_dir {
        cmd.arg("--target-dir").arg(dir);
    }
    cmd.arg(&target.bin_name)
        .arg("--")
        .arg(format!("-max_total_time={secs}"))
        .env(SINK_ENV, &sink_path)
        .env(SINK_LIMIT_ENV, opts.sink_limit.to_string());

    info!("fuzzing {} for {secs}s", target.bin_name);
    let out = toolchain::run(&mut cmd, Some(Duration::from_secs(secs) + KILL_GRACE), "cargo")?;
    if is_missing_subcommand(&out.stderr) {
        return Err(Error::ToolchainMissing("cargo-fuzz".into()));
    }
    let status = if out.timed_out {
        RunStatus::TimedOut
    } else if out.success() {
        RunStatus::Completed
    } else if looks_like_crash(&out.stderr) {
        warn!("fuzz target {} crashed", target.bin_name);
        RunStatus::Crashed { code: out.code() }
    } else {
        return Err(Error::FuzzRunFailed {
            target: id,
            message: out.stderr_tail(20),
        });
    };
    let (seeds, contents) = sink::read_sink(&sink_path, &id)?;
    Ok(FuzzOutcome {
        target_id: id,
        status,
        seeds,
        malformed_lines: contents.malformed_lines,
        partial_tail_discarded: contents.partial_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_timeout_runs_nothing() {
        let unit = crate::fuzz::parse_fuzz_target_source(
            Path::new("t.rs"),
            "fuzz_target!(|d: &[u8]| { let _ = d; });",
        )
        .unwrap();
        let iws = InstrumentedWorkspace {
            root: PathBuf::from("/nonexistent"),
            sink_dir: PathBuf::from("/nonexistent"),
            targets: vec![],
            skipped: vec![],
        };
        let target = PreparedTarget {
            unit,
            bin_name: "t".into(),
        };
        let opts = FuzzOptions {
            timeout: Duration::ZERO,
            ..Default::default()
        };
        let out = fuzz(&iws, &target, &opts, &Toolchain::default()).unwrap();
        assert!(out.seeds.is_empty());
        assert_eq!(out.status, RunStatus::Skipped);
    }

    #[test]
    fn copy_skips_build_dirs() {
        let src = tempfile::TempDir::new().unwrap();
        fs::create_dir_all(src.path().join("target/debug")).unwrap();
        fs::create_dir_all(src.path().join("fuzz/target")).unwrap();
        fs::create_dir_all(src.path().join("src")).unwrap();
        fs::write(src.path().join("src/lib.rs"), "").unwrap();
        fs::write(src.path().join("target/debug/x"), "").unwrap();
        let dst = tempfile::TempDir::new().unwrap();
        let to = dst.path().join("copy");
        copy_tree(src.path(), &to).unwrap();
        assert!(to.join("src/lib.rs").is_file());
        assert!(!to.join("target").exists());
        assert!(!to.join("fuzz/target").exists());
    }
}
