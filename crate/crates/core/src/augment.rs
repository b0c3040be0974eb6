//! The augmentation pipeline for one package: instrument, fuzz, select,
//! synthesize and pair.

use std::collections::HashSet;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fuzz::{fuzz, prepare_instrumented_copy, FuzzOptions, RunStatus};
use crate::index::WorkspaceIndex;
use crate::miner::{FocalTestPair, UnitTestFn};
use crate::pool::map_bounded;
use crate::project::Workspace;
use crate::select::{select_with_stats, SelectionConfig, SelectionStats};
use crate::synth::{check_tests_compile, inject_tests, instantiate, pair_with_index, transform};
use crate::toolchain::Toolchain;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub selection: SelectionConfig,
    pub fuzz: FuzzOptions,
    pub jobs: usize,
    /// Inject the generated tests into the instrumented copy and compile them.
    pub verify_compile: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TargetReport {
    pub target_id: String,
    pub status: Option<RunStatus>,
    pub selection: SelectionStats,
    pub tests: usize,
    pub pairs: usize,
    /// Qualified path of the focal the target was paired with.
    pub focal: Option<String>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct AugmentReport {
    pub pairs: Vec<FocalTestPair>,
    pub tests: Vec<UnitTestFn>,
    pub targets: Vec<TargetReport>,
    /// Outcome of the compile check, when requested.
    pub tests_compile: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// Runs the whole pipeline on `ws`, working in a copy under `work_dir`.
/// `context_root` is the enclosing tree when `ws` is a workspace member.
pub fn augment_workspace(
    ws: &Workspace,
    context_root: Option<&Path>,
    work_dir: &Path,
    cfg: &AugmentConfig,
    tc: &Toolchain,
) -> Result<AugmentReport> {
    cfg.selection.validate()?;
    let mut report = AugmentReport::default();
    if !ws.has_fuzz_targets() {
        info!("{}: no fuzz targets", ws.repo_id());
        return Ok(report);
    }
    let iws = prepare_instrumented_copy(ws, context_root, work_dir, tc)?;
    for (id, reason) in &iws.skipped {
        report.targets.push(TargetReport {
            target_id: id.clone(),
            skipped: Some(reason.clone()),
            ..Default::default()
        });
    }

    let outcomes = map_bounded(iws.targets.iter().collect(), cfg.jobs, |t| fuzz(&iws, t, &cfg.fuzz, tc));
    let index = WorkspaceIndex::build(ws);
    let repo_id = ws.repo_id();
    let mut names = HashSet::new();
    let mut to_inject = Vec::new();
    for (target, outcome) in iws.targets.iter().zip(outcomes) {
        let unit = &target.unit;
        let mut tr = TargetReport {
            target_id: unit.id.clone(),
            ..Default::default()
        };
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) if e.is_environmental() => return Err(e),
            Err(e) => {
                warn!("{}: {e}", unit.id);
                tr.skipped = Some(e.to_string());
                report.targets.push(tr);
                continue;
            }
        };
        if outcome.malformed_lines > 0 {
            report
                .diagnostics
                .push(format!("{}: {} malformed sink lines", unit.id, outcome.malformed_lines));
        }
        tr.status = Some(outcome.status);
        let (seeds, stats) = select_with_stats(&outcome.seeds, &cfg.selection);
        tr.selection = stats;
        let template = match transform(unit) {
            Ok(t) => t,
            Err(e) => {
                tr.skipped = Some(e.to_string());
                report.targets.push(tr);
                continue;
            }
        };
        let tests = instantiate(&template, &seeds);
        for t in &tests {
            debug_assert!(names.insert(t.name.clone()), "duplicate test name {}", t.name);
        }
        let pairs = pair_with_index(&tests, unit, &index, &repo_id);
        tr.tests = tests.len();
        tr.pairs = pairs.len();
        tr.focal = pairs.first().map(|p| p.focal.qualified_path.join("::"));
        if tr.focal.is_none() && !tests.is_empty() {
            report.diagnostics.push(format!("{}: no resolvable focal call", unit.id));
        }
        if cfg.verify_compile && !tests.is_empty() {
            to_inject.push((template, tests.clone()));
        }
        report.tests.extend(tests);
        report.pairs.extend(pairs);
        report.targets.push(tr);
    }

    if cfg.verify_compile && !to_inject.is_empty() {
        for (template, tests) in &to_inject {
            inject_tests(&iws.root, template, tests)?;
        }
        let out = check_tests_compile(&iws.root, tc)?;
        if !out.success() {
            report.diagnostics.push(format!("generated tests failed to compile:\n{}", out.stderr_tail(30)));
        }
        report.tests_compile = Some(out.success());
    }
    Ok(report)
}
