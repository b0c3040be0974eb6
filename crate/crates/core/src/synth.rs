//! Fuzz target to unit-test synthesis: template transformation,
//! instantiation with seeds, focal pairing and compile checking.

use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};
use syn::visit::Visit;

use crate::error::{Error, Result};
use crate::fuzz::{FuzzTargetUnit, ParamType, PreambleItem, SeedInput};
use crate::index::{CallRef, FocalFn, Imports, WorkspaceIndex};
use crate::miner::{FocalTestPair, Origin, UnitTestFn};
use crate::project::Workspace;
use crate::syntax::sanitize_ident;
use crate::toolchain::{self, ProcessOutput, Toolchain};

/// Placeholder substituted by the seed literal.
pub const DATA_SLOT: &str = "__AUGTEST_DATA__";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestTemplate {
    pub target_id: String,
    /// Identifier-safe prefix of generated test names.
    pub fn_stem: String,
    pub param_name: String,
    pub param_type: ParamType,
    /// Test attribute and signature of the template function.
    pub header: String,
    pub data_slot: String,
    pub body: Vec<String>,
    pub preamble: Vec<PreambleItem>,
    /// Directory of the originating fuzz target, for resolving `mod x;`.
    pub source_dir: PathBuf,
}

impl TestTemplate {
    pub fn test_name(&self, index: usize) -> String {
        format!("{}_fuzzaug_{index}", self.fn_stem)
    }

    fn render(&self, header: &str, literal: &str) -> String {
        let mut out = String::new();
        out.push_str(header);
        out.push('\n');
        out.push_str(&format!(
            "    let {}: {} = {literal};\n",
            self.param_name,
            self.param_type.rust_type()
        ));
        for stmt in &self.body {
            out.push_str("    ");
            out.push_str(stmt);
            out.push('\n');
        }
        out.push('}');
        out
    }

    /// Template text with the placeholder in the data binding.
    pub fn text(&self) -> String {
        self.render(&self.header, &self.data_slot)
    }

    /// Items needed around the generated tests when they are written to a
    /// file in `test_dir`: out-of-line modules gain a `#[path]` pointing back
    /// at the fuzz target's module file.
    pub fn preamble_for(&self, test_dir: &Path) -> String {
        let mut out = String::new();
        for item in &self.preamble {
            if let Some(module) = &item.module {
                let candidates = [
                    self.source_dir.join(format!("{module}.rs")),
                    self.source_dir.join(module).join("mod.rs"),
                ];
                if let Some(file) = candidates.iter().find(|p| p.is_file()) {
                    let rel = relative_path(test_dir, file);
                    out.push_str(&format!("#[path = {:?}]\n", rel.to_string_lossy()));
                }
            }
            out.push_str(&item.text);
            out.push('\n');
        }
        out
    }
}

/// `to` expressed relative to directory `from`; both absolute.
fn relative_path(from: &Path, to: &Path) -> PathBuf {
    let from: Vec<Component> = from.components().collect();
    let to_c: Vec<Component> = to.components().collect();
    let common = from.iter().zip(&to_c).take_while(|(a, b)| a == b).count();
    let mut out = PathBuf::new();
    for _ in common..from.len() {
        out.push("..");
    }
    for c in &to_c[common..] {
        out.push(c.as_os_str());
    }
    out
}

/// Rewrites a parsed fuzz target into a unit-test template.
pub fn transform(t: &FuzzTargetUnit) -> Result<TestTemplate> {
    if !t.param_type.is_supported() {
        return Err(Error::UnsupportedParam {
            target: t.id.clone(),
            descriptor: t.param_type.rust_type().to_string(),
        });
    }
    let fn_stem = sanitize_ident(&t.id);
    Ok(TestTemplate {
        target_id: t.id.clone(),
        header: format!("#[test]\nfn {fn_stem}_fuzzaug_template() {{"),
        fn_stem,
        param_name: t.param_name.clone(),
        param_type: t.param_type.clone(),
        data_slot: DATA_SLOT.to_string(),
        body: t.body.clone(),
        preamble: t.preamble.clone(),
        source_dir: t.file.parent().map(Path::to_path_buf).unwrap_or_default(),
    })
}

/// Rust literal for a seed, typed to match the binding.
pub fn render_literal(param_type: &ParamType, bytes: &[u8]) -> String {
    match param_type {
        ParamType::Text => format!("{:?}", String::from_utf8_lossy(bytes)),
        _ => {
            let items: Vec<String> = bytes.iter().map(u8::to_string).collect();
            format!("&[{}]", items.join(","))
        }
    }
}

/// One test per seed, named `{target}_fuzzaug_{i}` with `i` starting at 1.
pub fn instantiate(template: &TestTemplate, seeds: &[SeedInput]) -> Vec<UnitTestFn> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, seed)| {
            let name = template.test_name(i + 1);
            let header = format!("#[test]\nfn {name}() {{");
            UnitTestFn {
                text: template.render(&header, &render_literal(&template.param_type, &seed.bytes)),
                name,
                file: template.source_dir.join(format!("{}.rs", template.target_id)),
                assertion_count: 0,
            }
        })
        .collect()
}

/// Calls in evaluation order: arguments and receivers before the call.
#[derive(Default)]
struct PostOrderCalls {
    calls: Vec<CallRef>,
}

impl<'ast> Visit<'ast> for PostOrderCalls {
    fn visit_expr(&mut self, e: &'ast syn::Expr) {
        syn::visit::visit_expr(self, e);
        if let Some(c) = CallRef::from_expr(e) {
            self.calls.push(c);
        }
    }

    // Macro arguments that parse as expressions (assert!, vec!, ...) are
    // walked like ordinary code.
    fn visit_macro(&mut self, m: &'ast syn::Macro) {
        use syn::punctuated::Punctuated;
        if let Ok(args) = m.parse_body_with(Punctuated::<syn::Expr, syn::Token![,]>::parse_terminated) {
            for a in &args {
                self.visit_expr(a);
            }
        }
    }
}

/// The last call in the fuzz body that resolves to a workspace function.
pub fn resolve_target_focal(t: &FuzzTargetUnit, index: &WorkspaceIndex) -> Option<FocalFn> {
    let block: syn::Block = syn::parse_str(&format!("{{\n{}\n}}", t.body.join("\n"))).ok()?;
    let mut v = PostOrderCalls::default();
    v.visit_block(&block);
    let imports = syn::parse_file(&t.source)
        .map(|f| Imports::from_items(&f.items))
        .unwrap_or_default();
    v.calls
        .iter()
        .rev()
        .find_map(|c| index.resolve(c, &imports, &t.file))
        .cloned()
}

/// Pairs every instantiated test with the target's focal. An unresolvable
/// target yields no pairs.
pub fn pair_augmented(tests: &[UnitTestFn], t: &FuzzTargetUnit, ws: &Workspace) -> Vec<FocalTestPair> {
    pair_with_index(tests, t, &WorkspaceIndex::build(ws), &ws.repo_id())
}

pub fn pair_with_index(
    tests: &[UnitTestFn],
    t: &FuzzTargetUnit,
    index: &WorkspaceIndex,
    repo_id: &str,
) -> Vec<FocalTestPair> {
    let Some(focal) = resolve_target_focal(t, index) else {
        return Vec::new();
    };
    tests
        .iter()
        .map(|test| FocalTestPair {
            focal: focal.clone(),
            test: test.clone(),
            origin: Origin::Augmented,
            repo_id: repo_id.to_string(),
        })
        .collect()
}

/// Writes the generated tests of one template as an integration test file of
/// the package at `package_root`. Returns the file path.
pub fn inject_tests(package_root: &Path, template: &TestTemplate, tests: &[UnitTestFn]) -> Result<PathBuf> {
    let dir = package_root.join("tests");
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let dir = dir.canonicalize().map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(format!("augtest_{}.rs", template.fn_stem));
    let mut text = String::from("#![allow(unused)]\n");
    text.push_str(&template.preamble_for(&dir));
    for t in tests {
        text.push('\n');
        text.push_str(&t.text);
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Compiles the package's tests without running them.
pub fn check_tests_compile(package_root: &Path, tc: &Toolchain) -> Result<ProcessOutput> {
    let mut cmd = tc.cargo_cmd();
    cmd.current_dir(package_root).args(["test", "--no-run", "--quiet"]);
    toolchain::run(&mut cmd, None, "cargo")
}
