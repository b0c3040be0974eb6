//! Workspace discovery: source files, unit-test roots, fuzz targets and
//! buildability of a checked-out package.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::toolchain::{self, Toolchain};

/// Directories scanned for subject-language sources.
const SOURCE_ROOTS: &[&str] = &["src", "tests"];
const FUZZ_DIR: &str = "fuzz";
const FUZZ_TARGETS_DIR: &str = "fuzz_targets";

/// One `.rs` file of the package. The syntax tree is re-parsed on demand
/// (`syn` trees are not `Send`); `parse_error` records whether that works.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: PathBuf,
    pub text: String,
    pub parse_error: Option<String>,
}

impl SourceFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_text(path.to_path_buf(), text))
    }

    pub fn from_text(path: PathBuf, text: String) -> Self {
        let parse_error = syn::parse_file(&text).err().map(|e| e.to_string());
        SourceFile {
            path,
            text,
            parse_error,
        }
    }

    pub fn has_syntax(&self) -> bool {
        self.parse_error.is_none()
    }

    /// Parsed syntax tree, `None` for files that failed to parse.
    pub fn syntax(&self) -> Option<syn::File> {
        if self.has_syntax() {
            syn::parse_file(&self.text).ok()
        } else {
            None
        }
    }
}

/// A scanned package.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Workspace {
    pub root_path: PathBuf,
    /// Crate name as written in `use` paths (dashes replaced).
    pub crate_name: String,
    pub source_files: Vec<SourceFile>,
    pub fuzz_target_files: Vec<PathBuf>,
    /// Fuzz binary name per target file, as `cargo fuzz` knows it.
    pub fuzz_bins: BTreeMap<PathBuf, String>,
    /// `None` until [`check_buildable`] has run.
    pub buildable: Option<bool>,
    pub diagnostics: Vec<String>,
}

impl Workspace {
    pub fn fuzz_dir(&self) -> PathBuf {
        self.root_path.join(FUZZ_DIR)
    }

    pub fn has_fuzz_targets(&self) -> bool {
        !self.fuzz_target_files.is_empty()
    }

    /// Name `cargo fuzz` uses for a target file.
    pub fn fuzz_bin_name(&self, file: &Path) -> String {
        self.fuzz_bins.get(file).cloned().unwrap_or_else(|| stem(file))
    }

    /// Files under `src/` (non-test code roots).
    pub fn library_files(&self) -> impl Iterator<Item = &SourceFile> {
        let src = self.root_path.join("src");
        self.source_files.iter().filter(move |f| f.path.starts_with(&src))
    }

    pub fn file(&self, path: &Path) -> Option<&SourceFile> {
        self.source_files.iter().find(|f| f.path == path)
    }

    /// Repository identifier used in dataset records.
    pub fn repo_id(&self) -> String {
        self.root_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| self.crate_name.clone())
    }
}

pub(crate) fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn read_manifest(path: &Path) -> Result<toml::Table> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.parse::<toml::Table>().map_err(|e| Error::BadManifest {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Scans one package rooted at `root`.
pub fn scan_workspace(root: impl AsRef<Path>) -> Result<Workspace> {
    let root = root.as_ref();
    let meta = fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::MissingManifest(root.to_path_buf()));
    }
    let root = root.canonicalize().map_err(|e| Error::io(root, e))?;
    let manifest_path = root.join("Cargo.toml");
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(root));
    }
    let manifest = read_manifest(&manifest_path)?;
    let crate_name = manifest
        .get("lib")
        .and_then(|l| l.get("name"))
        .or_else(|| manifest.get("package").and_then(|p| p.get("name")))
        .and_then(|n| n.as_str())
        .map(|n| n.replace('-', "_"))
        .unwrap_or_else(|| stem(&root).replace('-', "_"));

    let mut diagnostics = Vec::new();
    let mut source_files = Vec::new();
    for dir in SOURCE_ROOTS {
        for path in rust_files_under(&root, &root.join(dir), true) {
            let file = SourceFile::load(&path)?;
            if let Some(err) = &file.parse_error {
                warn!("{}: parse failure: {err}", path.display());
                diagnostics.push(format!("parse failure in {}: {err}", path.display()));
            }
            source_files.push(file);
        }
    }
    source_files.sort_by(|a, b| a.path.cmp(&b.path));

    let fuzz_bins = discover_fuzz_targets(&root, &mut diagnostics)?;
    let fuzz_target_files = fuzz_bins.keys().cloned().collect();
    debug!(
        "scanned {}: {} source files, {} fuzz targets",
        root.display(),
        source_files.len(),
        fuzz_bins.len()
    );

    Ok(Workspace {
        root_path: root,
        crate_name,
        source_files,
        fuzz_target_files,
        fuzz_bins,
        buildable: None,
        diagnostics,
    })
}

/// `.rs` files below `dir` that resolve inside `root`. Symlinks are never
/// followed; a symlinked file is kept only if its target stays in `root`.
fn rust_files_under(root: &Path, dir: &Path, recursive: bool) -> Vec<PathBuf> {
    if !dir.is_dir() {
        return Vec::new();
    }
    let walker = WalkDir::new(dir)
        .follow_links(false)
        .max_depth(if recursive { usize::MAX } else { 1 })
        .sort_by_file_name();
    walker
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "rs"))
        .filter(|e| {
            if e.path_is_symlink() {
                e.path()
                    .canonicalize()
                    .map(|p| p.starts_with(root) && p.is_file())
                    .unwrap_or(false)
            } else {
                e.file_type().is_file()
            }
        })
        .map(|e| e.into_path())
        .collect()
}

/// Fuzz targets as declared by `fuzz/Cargo.toml` `[[bin]]` entries, falling
/// back to every file directly in `fuzz/fuzz_targets/` when none are declared.
fn discover_fuzz_targets(
    root: &Path,
    diagnostics: &mut Vec<String>,
) -> Result<BTreeMap<PathBuf, String>> {
    let fuzz_dir = root.join(FUZZ_DIR);
    let mut targets = BTreeMap::new();
    if !fuzz_dir.is_dir() {
        return Ok(targets);
    }
    let manifest_path = fuzz_dir.join("Cargo.toml");
    if manifest_path.is_file() {
        let manifest = read_manifest(&manifest_path)?;
        let bins = manifest
            .get("bin")
            .and_then(|b| b.as_array())
            .cloned()
            .unwrap_or_default();
        for bin in bins {
            let Some(name) = bin.get("name").and_then(|n| n.as_str()) else {
                continue;
            };
            let rel = bin
                .get("path")
                .and_then(|p| p.as_str())
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(FUZZ_TARGETS_DIR).join(format!("{name}.rs")));
            let path = fuzz_dir.join(rel);
            match path.canonicalize() {
                Ok(p) if p.starts_with(root) && p.is_file() => {
                    targets.insert(p, name.to_string());
                }
                Ok(p) => diagnostics.push(format!(
                    "fuzz target {name} resolves outside the workspace: {}",
                    p.display()
                )),
                Err(_) => diagnostics.push(format!(
                    "fuzz target {name} declared but missing: {}",
                    path.display()
                )),
            }
        }
        if !targets.is_empty() {
            return Ok(targets);
        }
    }
    for path in rust_files_under(root, &fuzz_dir.join(FUZZ_TARGETS_DIR), false) {
        let name = stem(&path);
        targets.insert(path, name);
    }
    Ok(targets)
}

/// Package roots under `root`: the root itself when it declares a
/// `[package]`, plus every `[workspace]` member (trailing `/*` globs are
/// expanded). Each package is later scanned independently.
pub fn discover_packages(root: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let root = root.as_ref();
    let manifest_path = root.join("Cargo.toml");
    if !manifest_path.is_file() {
        return Err(Error::MissingManifest(root.to_path_buf()));
    }
    let manifest = read_manifest(&manifest_path)?;
    let mut out = Vec::new();
    if manifest.contains_key("package") {
        out.push(root.to_path_buf());
    }
    let members = manifest
        .get("workspace")
        .and_then(|w| w.get("members"))
        .and_then(|m| m.as_array())
        .cloned()
        .unwrap_or_default();
    for member in members.iter().filter_map(|m| m.as_str()) {
        if let Some(prefix) = member.strip_suffix("/*") {
            let dir = root.join(prefix);
            let Ok(entries) = fs::read_dir(&dir) else { continue };
            let mut found: Vec<PathBuf> = entries
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.join("Cargo.toml").is_file())
                .collect();
            found.sort();
            out.extend(found);
        } else {
            let p = root.join(member);
            if p.join("Cargo.toml").is_file() {
                out.push(p);
            }
        }
    }
    out.dedup();
    Ok(out)
}

/// Builds the package in fuzz mode (`cargo fuzz build`) when it has fuzz
/// targets, otherwise with a plain `cargo build`. The result is cached on
/// the workspace.
pub fn check_buildable(ws: &mut Workspace, tc: &Toolchain) -> Result<bool> {
    if let Some(b) = ws.buildable {
        return Ok(b);
    }
    let out = if ws.has_fuzz_targets() {
        let mut cmd = tc.cargo_cmd();
        cmd.current_dir(&ws.root_path)
            .args(["fuzz", "build", "--sanitizer"])
            .arg(&tc.sanitizer);
        if let Some(dir) = &tc.fuzz_target_dir {
            cmd.arg("--target-dir").arg(dir);
        }
        let out = toolchain::run(&mut cmd, None, "cargo")?;
        if is_missing_subcommand(&out.stderr) {
            return Err(Error::ToolchainMissing("cargo-fuzz".into()));
        }
        out
    } else {
        let mut cmd = tc.cargo_cmd();
        cmd.current_dir(&ws.root_path).args(["build", "--all-targets"]);
        toolchain::run(&mut cmd, None, "cargo")?
    };
    let ok = out.success();
    if !ok {
        ws.diagnostics
            .push(format!("build failed:\n{}", out.stderr_tail(20)));
    }
    ws.buildable = Some(ok);
    Ok(ok)
}

pub(crate) fn is_missing_subcommand(stderr: &str) -> bool {
    stderr.contains("no such command") || stderr.contains("no such subcommand")
}
