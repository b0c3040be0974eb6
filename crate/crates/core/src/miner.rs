//! Unit-test mining: `#[test]` functions, focal resolution through the
//! assertion macros they contain, and mined focal-test pairs.

use std::fmt;
use std::path::{Path, PathBuf};

use log::debug;
use serde::{Deserialize, Serialize};
use syn::punctuated::Punctuated;
use syn::visit::Visit;

use crate::index::{CallRef, FocalFn, Imports, WorkspaceIndex};
use crate::project::Workspace;
use crate::syntax::{self, SourceText};

/// Assertion macros recognised in test bodies.
pub const ASSERTION_MACROS: &[&str] = &[
    "assert",
    "assert_eq",
    "assert_ne",
    "debug_assert",
    "debug_assert_eq",
    "debug_assert_ne",
];

pub fn is_assertion_macro(name: &str) -> bool {
    ASSERTION_MACROS.contains(&name)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitTestFn {
    pub name: String,
    /// Full function text including attributes.
    pub text: String,
    pub file: PathBuf,
    pub assertion_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Mined,
    Augmented,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Mined => "mined",
            Origin::Augmented => "augmented",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalTestPair {
    pub focal: FocalFn,
    pub test: UnitTestFn,
    pub origin: Origin,
    pub repo_id: String,
}

/// Outcome of mining one workspace.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MiningReport {
    pub pairs: Vec<FocalTestPair>,
    pub tests_extracted: usize,
    /// Assertions whose arguments contain at least one call expression.
    pub focal_calls_seen: usize,
    pub pairs_formed: usize,
    pub diagnostics: Vec<String>,
}

/// Every `#[test]` function in the workspace, including those nested in
/// `#[cfg(test)]` modules. Unparsable files are skipped.
pub fn extract_tests(ws: &Workspace) -> Vec<UnitTestFn> {
    extract_tests_with_diagnostics(ws).0
}

pub fn extract_tests_with_diagnostics(ws: &Workspace) -> (Vec<UnitTestFn>, Vec<String>) {
    let mut tests = Vec::new();
    let mut diagnostics = Vec::new();
    for file in &ws.source_files {
        match file.syntax() {
            Some(tree) => tests.extend(tests_in_file(&file.path, &file.text, &tree)),
            None => diagnostics.push(format!("skipped unparsable file {}", file.path.display())),
        }
    }
    (tests, diagnostics)
}

/// Test functions of a single parsed file.
pub fn tests_in_file(path: &Path, text: &str, tree: &syn::File) -> Vec<UnitTestFn> {
    let source = SourceText::new(text);
    let mut out = Vec::new();
    collect_tests(&tree.items, &source, path, &mut out);
    out
}

fn collect_tests(items: &[syn::Item], source: &SourceText<'_>, path: &Path, out: &mut Vec<UnitTestFn>) {
    for item in items {
        match item {
            syn::Item::Fn(f) if f.attrs.iter().any(syntax::is_test_attr) => {
                out.push(UnitTestFn {
                    name: f.sig.ident.to_string(),
                    text: source.slice_node(f).to_string(),
                    file: path.to_path_buf(),
                    assertion_count: assertion_macros(&f.block).len(),
                });
            }
            syn::Item::Mod(m) => {
                if let Some((_, inner)) = &m.content {
                    collect_tests(inner, source, path, out);
                }
            }
            _ => {}
        }
    }
}

#[derive(Default)]
struct MacroCollector {
    found: Vec<syn::Macro>,
}

impl<'ast> Visit<'ast> for MacroCollector {
    fn visit_macro(&mut self, mac: &'ast syn::Macro) {
        if syntax::last_segment(&mac.path).is_some_and(|n| is_assertion_macro(&n)) {
            self.found.push(mac.clone());
        }
    }
}

/// Assertion macro invocations in source order.
fn assertion_macros(block: &syn::Block) -> Vec<syn::Macro> {
    let mut c = MacroCollector::default();
    c.visit_block(block);
    c.found
}

/// Call expressions in pre-order (outermost call first).
#[derive(Default)]
struct PreOrderCalls {
    calls: Vec<CallRef>,
}

impl<'ast> Visit<'ast> for PreOrderCalls {
    fn visit_expr(&mut self, e: &'ast syn::Expr) {
        if let Some(c) = CallRef::from_expr(e) {
            self.calls.push(c);
        }
        syn::visit::visit_expr(self, e);
    }
}

/// Call expressions inside each assertion's arguments, one list per
/// assertion, in source order.
fn assertion_calls(block: &syn::Block) -> Vec<Vec<CallRef>> {
    assertion_macros(block)
        .iter()
        .map(|mac| {
            let args = mac
                .parse_body_with(Punctuated::<syn::Expr, syn::Token![,]>::parse_terminated)
                .unwrap_or_default();
            let mut v = PreOrderCalls::default();
            for a in &args {
                v.visit_expr(a);
            }
            v.calls
        })
        .collect()
}

/// Resolves focal functions for tests of one workspace, sharing an index.
pub struct FocalResolver<'a> {
    ws: &'a Workspace,
    index: WorkspaceIndex,
}

/// Resolution result for one test.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub focal_calls: usize,
    pub focal: Option<FocalFn>,
}

impl<'a> FocalResolver<'a> {
    pub fn new(ws: &'a Workspace) -> Self {
        FocalResolver {
            ws,
            index: WorkspaceIndex::build(ws),
        }
    }

    pub fn index(&self) -> &WorkspaceIndex {
        &self.index
    }

    fn imports_for(&self, file: &Path) -> Imports {
        self.ws
            .file(file)
            .and_then(|f| f.syntax())
            .map(|t| Imports::from_file(&t))
            .unwrap_or_default()
    }

    /// Walks the assertions in order and, within each, the calls in
    /// pre-order; the first call that resolves to a workspace-local
    /// function is the focal.
    pub fn resolve(&self, test: &UnitTestFn) -> Resolution {
        let Ok(item) = syn::parse_str::<syn::ItemFn>(&test.text) else {
            return Resolution {
                focal_calls: 0,
                focal: None,
            };
        };
        let per_assertion = assertion_calls(&item.block);
        let focal_calls = per_assertion.iter().filter(|c| !c.is_empty()).count();
        let imports = self.imports_for(&test.file);
        let focal = per_assertion
            .iter()
            .flatten()
            .find_map(|call| self.index.resolve(call, &imports, &test.file))
            .cloned();
        Resolution { focal_calls, focal }
    }
}

pub fn resolve_focal(test: &UnitTestFn, ws: &Workspace) -> Option<FocalFn> {
    FocalResolver::new(ws).resolve(test).focal
}

/// One pair per test with a resolved focal.
pub fn mine_pairs(ws: &Workspace) -> MiningReport {
    let (tests, mut diagnostics) = extract_tests_with_diagnostics(ws);
    let resolver = FocalResolver::new(ws);
    let repo_id = ws.repo_id();
    let mut report = MiningReport {
        tests_extracted: tests.len(),
        ..Default::default()
    };
    for test in tests {
        let r = resolver.resolve(&test);
        report.focal_calls_seen += r.focal_calls;
        match r.focal {
            Some(focal) => report.pairs.push(FocalTestPair {
                focal,
                test,
                origin: Origin::Mined,
                repo_id: repo_id.clone(),
            }),
            None => {
                debug!("no focal for {}", test.name);
                diagnostics.push(format!("no workspace-local focal for test {}", test.name));
            }
        }
    }
    report.pairs_formed = report.pairs.len();
    report.diagnostics = diagnostics;
    report
}
