//! Benchmark tasks and prompt assembly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::FocalFn;
use crate::syntax::SourceText;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalTask {
    pub task_id: String,
    /// `use` items placed before the focal.
    pub imports: String,
    /// The focal function inside `oracle_focal`; `lines` are relative to it.
    pub focal: FocalFn,
    /// Test module opening up to the unfinished equality assertion.
    pub test_header: String,
    /// Canonical solution, including any helpers it needs.
    pub oracle_focal: String,
}

pub fn test_header(name: &str) -> String {
    format!(
        "#[cfg(test)]\nmod tests {{\n    use super::*;\n    #[test]\n    fn test_{name}() {{\n        assert_eq!({name}("
    )
}

pub fn instruction(name: &str) -> String {
    format!("// Check the correctness of `{name}`")
}

/// Imports, focal, instruction comment and test header, one per line. The
/// prompt ends inside the assertion stub, without a trailing newline.
pub fn build_prompt(task: &EvalTask) -> String {
    let mut out = String::new();
    let imports = task.imports.trim_end();
    if !imports.is_empty() {
        out.push_str(imports);
        out.push('\n');
    }
    out.push_str(task.oracle_focal.trim_end());
    out.push('\n');
    out.push_str(&instruction(&task.focal.name));
    out.push('\n');
    out.push_str(&task.test_header);
    out
}

/// Finds `name` (or the last free function when `name` is `None`) in
/// `source`, skipping `main`.
pub fn locate_focal(source: &str, name: Option<&str>, file: &Path) -> Result<FocalFn> {
    let tree = syn::parse_file(source).map_err(|e| Error::Parse {
        path: file.to_path_buf(),
        message: e.to_string(),
    })?;
    let st = SourceText::new(source);
    let f = tree
        .items
        .iter()
        .rev()
        .filter_map(|it| match it {
            syn::Item::Fn(f) if f.sig.ident != "main" => Some(f),
            _ => None,
        })
        .find(|f| name.is_none_or(|n| f.sig.ident == n))
        .ok_or_else(|| Error::Parse {
            path: file.to_path_buf(),
            message: format!("no focal function `{}`", name.unwrap_or("<any>")),
        })?;
    let ident = f.sig.ident.to_string();
    Ok(FocalFn {
        text: st.slice_node(f).to_string(),
        file: file.to_path_buf(),
        qualified_path: vec![ident.clone()],
        owner: None,
        takes_self: false,
        lines: st.lines(syn::spanned::Spanned::span(f)),
        name: ident,
    })
}

/// Native record: imports and oracle kept apart.
#[derive(Deserialize)]
struct NativeTask {
    task_id: String,
    #[serde(default)]
    imports: String,
    oracle_focal: String,
    #[serde(default)]
    entry_point: Option<String>,
}

/// HumanEval-X record: imports and signature live in `declaration`, the
/// body in `canonical_solution`.
#[derive(Deserialize)]
struct HumanEvalTask {
    task_id: String,
    declaration: String,
    canonical_solution: String,
    #[serde(default)]
    entry_point: Option<String>,
}

const STD_ROOTS: [&str; 3] = ["std", "core", "alloc"];

/// Splits a declaration into its `use` lines and the rest. Imports from
/// crates outside the standard library are dropped since tasks are compiled
/// standalone.
fn split_declaration(decl: &str) -> (String, String) {
    let mut imports = Vec::new();
    let mut rest = Vec::new();
    for line in decl.lines() {
        let t = line.trim();
        if let Some(path) = t.strip_prefix("use ") {
            let root = path.trim_start_matches("::").split(['{', ':', ';', ' ']).next().unwrap_or("");
            if STD_ROOTS.contains(&root) {
                imports.push(t.to_string());
            }
            continue;
        }
        rest.push(line);
    }
    (imports.join("\n"), rest.join("\n").trim().to_string())
}

/// Drops an empty-bodied `fn main` that benchmark declarations carry.
fn strip_main(source: &str) -> String {
    let Ok(tree) = syn::parse_file(source) else {
        return source.to_string();
    };
    let st = SourceText::new(source);
    let main = tree.items.iter().find_map(|it| match it {
        syn::Item::Fn(f) if f.sig.ident == "main" && f.block.stmts.is_empty() => {
            Some(st.range(syn::spanned::Spanned::span(f)))
        }
        _ => None,
    });
    match main {
        Some(r) => format!("{}{}", &source[..r.start], &source[r.end..]).trim().to_string(),
        None => source.to_string(),
    }
}

fn task_from_value(v: serde_json::Value, origin: &Path) -> Result<EvalTask> {
    let (task_id, imports, oracle, name) = if v.get("declaration").is_some() {
        let t: HumanEvalTask = serde_json::from_value(v)?;
        let (imports, head) = split_declaration(&t.declaration);
        let oracle = format!("{head}\n{}", t.canonical_solution);
        (t.task_id, imports, oracle, t.entry_point)
    } else {
        let t: NativeTask = serde_json::from_value(v)?;
        (t.task_id, t.imports, t.oracle_focal, t.entry_point)
    };
    let oracle = format!("{}\n", strip_main(oracle.trim()));
    let focal = locate_focal(&oracle, name.as_deref(), origin)?;
    Ok(EvalTask {
        task_id,
        imports: imports.trim().to_string(),
        test_header: test_header(&focal.name),
        focal,
        oracle_focal: oracle,
    })
}

fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("json" | "jsonl")))
        .collect();
    files.sort();
    Ok(files)
}

/// Loads tasks from a `.json`/`.jsonl` file or a directory of them.
pub fn load_tasks(path: &Path) -> Result<Vec<EvalTask>> {
    let files = if path.is_dir() {
        json_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    let mut tasks = Vec::new();
    for file in files {
        let text = fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
        if file.extension().is_some_and(|e| e == "jsonl") {
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                tasks.push(task_from_value(serde_json::from_str(line)?, &file)?);
            }
        } else {
            match serde_json::from_str(&text)? {
                serde_json::Value::Array(items) => {
                    for v in items {
                        tasks.push(task_from_value(v, &file)?);
                    }
                }
                v => tasks.push(task_from_value(v, &file)?),
            }
        }
    }
    Ok(tasks)
}
