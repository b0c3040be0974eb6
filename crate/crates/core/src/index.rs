//! Syntactic index of the functions defined in a package's library code,
//! used to resolve call expressions to workspace-local definitions.
//!
//! Resolution is name based. Paths are matched by suffix against each
//! function's qualified path, with `use` imports of the calling file used to
//! expand aliases and globs. No type inference is attempted.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use syn::visit::Visit;

use crate::project::{SourceFile, Workspace};
use crate::syntax::{self, SourceText};

/// A function definition found in library code.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FocalFn {
    pub name: String,
    pub text: String,
    pub file: PathBuf,
    /// `[crate, modules.., (Type|Trait)?, name]`.
    pub qualified_path: Vec<String>,
    /// Type or trait the function is defined on, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub owner: Option<String>,
    #[serde(default)]
    pub takes_self: bool,
    /// 1-based inclusive line span in `file`.
    #[serde(default)]
    pub lines: (usize, usize),
}

/// A call expression in a form that can be looked up in the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CallRef {
    Path(Vec<String>),
    Method(String),
}

impl CallRef {
    pub fn from_expr(expr: &syn::Expr) -> Option<CallRef> {
        match expr {
            syn::Expr::Call(call) => match &*call.func {
                syn::Expr::Path(p) => Some(CallRef::Path(syntax::path_idents(&p.path))),
                _ => None,
            },
            syn::Expr::MethodCall(m) => Some(CallRef::Method(m.method.to_string())),
            _ => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            CallRef::Path(p) => p.last().map(String::as_str).unwrap_or(""),
            CallRef::Method(m) => m,
        }
    }
}

/// `use` declarations of one file, flattened.
#[derive(Debug, Clone, Default)]
pub struct Imports {
    /// alias -> full path
    pub names: HashMap<String, Vec<String>>,
    /// glob prefixes (`use a::b::*` gives `[a, b]`)
    pub globs: Vec<Vec<String>>,
}

impl Imports {
    pub fn from_file(file: &syn::File) -> Self {
        let mut collector = UseCollector::default();
        collector.visit_file(file);
        collector.imports
    }

    pub fn from_items(items: &[syn::Item]) -> Self {
        let mut collector = UseCollector::default();
        for item in items {
            collector.visit_item(item);
        }
        collector.imports
    }

    fn add_tree(&mut self, prefix: &mut Vec<String>, tree: &syn::UseTree) {
        match tree {
            syn::UseTree::Path(p) => {
                prefix.push(p.ident.to_string());
                self.add_tree(prefix, &p.tree);
                prefix.pop();
            }
            syn::UseTree::Name(n) => {
                let name = n.ident.to_string();
                if name == "self" {
                    if let Some(last) = prefix.last() {
                        self.names.insert(last.clone(), prefix.clone());
                    }
                } else {
                    let mut full = prefix.clone();
                    full.push(name.clone());
                    self.names.insert(name, full);
                }
            }
            syn::UseTree::Rename(r) => {
                let mut full = prefix.clone();
                full.push(r.ident.to_string());
                self.names.insert(r.rename.to_string(), full);
            }
            syn::UseTree::Glob(_) => self.globs.push(prefix.clone()),
            syn::UseTree::Group(g) => {
                for t in &g.items {
                    self.add_tree(prefix, t);
                }
            }
        }
    }
}

#[derive(Default)]
struct UseCollector {
    imports: Imports,
}

impl<'ast> Visit<'ast> for UseCollector {
    fn visit_item_use(&mut self, u: &'ast syn::ItemUse) {
        let mut prefix = Vec::new();
        self.imports.add_tree(&mut prefix, &u.tree);
    }
}

/// Index over the non-test functions of a package's `src/` tree.
#[derive(Debug, Clone, Default)]
pub struct WorkspaceIndex {
    crate_name: String,
    fns: Vec<FocalFn>,
    by_name: HashMap<String, Vec<usize>>,
}

impl WorkspaceIndex {
    pub fn build(ws: &Workspace) -> Self {
        let mut index = WorkspaceIndex {
            crate_name: ws.crate_name.clone(),
            ..Default::default()
        };
        let src_root = ws.root_path.join("src");
        for file in ws.library_files() {
            index.add_file(file, module_path_of(&src_root, &file.path));
        }
        index
    }

    pub fn crate_name(&self) -> &str {
        &self.crate_name
    }

    pub fn len(&self) -> usize {
        self.fns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fns.is_empty()
    }

    pub fn functions(&self) -> &[FocalFn] {
        &self.fns
    }

    fn add_file(&mut self, file: &SourceFile, modules: Vec<String>) {
        let Some(tree) = file.syntax() else { return };
        let text = SourceText::new(&file.text);
        let mut prefix = vec![self.crate_name.clone()];
        prefix.extend(modules);
        let mut walker = FnCollector {
            text: &text,
            file: &file.path,
            prefix,
            found: Vec::new(),
        };
        walker.items(&tree.items);
        for f in walker.found {
            self.by_name.entry(f.name.clone()).or_default().push(self.fns.len());
            self.fns.push(f);
        }
    }

    /// Drops a leading `crate`/`self`/`super`/own-crate segment.
    fn normalize<'a>(&self, segs: &'a [String]) -> &'a [String] {
        let mut s = segs;
        while let Some(first) = s.first() {
            if s.len() > 1
                && (first == "crate" || first == "self" || first == "super" || *first == self.crate_name)
            {
                s = &s[1..];
            } else {
                break;
            }
        }
        s
    }

    fn candidates(&self, name: &str) -> impl Iterator<Item = &FocalFn> {
        self.by_name
            .get(name)
            .into_iter()
            .flatten()
            .map(move |&i| &self.fns[i])
    }

    fn by_suffix(&self, segs: &[String]) -> Option<&FocalFn> {
        let segs = self.normalize(segs);
        let name = segs.last()?;
        self.candidates(name)
            .find(|f| f.qualified_path[1..].ends_with(segs))
    }

    /// Resolves a call made from `from_file` with the given imports in scope.
    pub fn resolve(&self, call: &CallRef, imports: &Imports, from_file: &Path) -> Option<&FocalFn> {
        match call {
            CallRef::Method(name) => {
                let mut c: Vec<&FocalFn> = self.candidates(name).filter(|f| f.owner.is_some()).collect();
                c.sort_by_key(|f| (!f.takes_self, f.file != from_file));
                c.first().copied()
            }
            CallRef::Path(segs) => self.resolve_path(segs, imports, from_file),
        }
    }

    fn resolve_path(&self, segs: &[String], imports: &Imports, from_file: &Path) -> Option<&FocalFn> {
        let name = segs.last()?;
        self.by_name.get(name)?;

        // Expand an imported alias for the first segment.
        if let Some(full) = segs.first().and_then(|first| imports.names.get(first)) {
            let mut expanded = full.clone();
            expanded.extend(segs[1..].iter().cloned());
            if let Some(f) = self.by_suffix(&expanded) {
                return Some(f);
            }
            if !self.is_own_path(full) {
                return None;
            }
        }

        let norm = self.normalize(segs);
        if norm.len() > 1 {
            if let Some(f) = self.by_suffix(norm) {
                return Some(f);
            }
            // `Type::assoc` where the type lives in a module we did not see
            // in the path.
            let tail = &norm[norm.len() - 2..];
            return self
                .candidates(name)
                .find(|f| f.owner.as_deref() == Some(tail[0].as_str()));
        }

        // Bare name: globbed modules first, then same file, then anywhere.
        for glob in &imports.globs {
            let mut full = glob.clone();
            full.push(name.clone());
            if let Some(f) = self.by_suffix(&full) {
                if f.owner.is_none() {
                    return Some(f);
                }
            }
        }
        let mut free: Vec<&FocalFn> = self.candidates(name).filter(|f| f.owner.is_none()).collect();
        free.sort_by_key(|f| f.file != from_file);
        free.first().copied()
    }

    fn is_own_path(&self, full: &[String]) -> bool {
        full.first()
            .is_some_and(|f| f == "crate" || f == "self" || f == "super" || *f == self.crate_name)
    }
}

/// Module path of a file below `src/`: `lib.rs` is the root, `a/mod.rs` and
/// `a.rs` are `a`, `a/b.rs` is `a::b`.
pub fn module_path_of(src_root: &Path, file: &Path) -> Vec<String> {
    let Ok(rel) = file.strip_prefix(src_root) else {
        return Vec::new();
    };
    let mut parts: Vec<String> = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    if let Some(last) = parts.pop() {
        let stem = last.trim_end_matches(".rs");
        if !matches!(stem, "lib" | "main" | "mod") {
            parts.push(stem.to_string());
        }
    }
    parts
}

struct FnCollector<'a> {
    text: &'a SourceText<'a>,
    file: &'a Path,
    prefix: Vec<String>,
    found: Vec<FocalFn>,
}

impl FnCollector<'_> {
    fn items(&mut self, items: &[syn::Item]) {
        for item in items {
            match item {
                syn::Item::Fn(f) if !is_test_fn(&f.attrs) => {
                    self.push(f.sig.ident.to_string(), None, &f.sig, f);
                }
                syn::Item::Mod(m) if !m.attrs.iter().any(syntax::is_cfg_test) => {
                    if let Some((_, inner)) = &m.content {
                        self.prefix.push(m.ident.to_string());
                        self.items(inner);
                        self.prefix.pop();
                    }
                }
                syn::Item::Impl(imp) if !imp.attrs.iter().any(syntax::is_cfg_test) => {
                    let Some(owner) = type_name(&imp.self_ty) else { continue };
                    for it in &imp.items {
                        if let syn::ImplItem::Fn(f) = it {
                            if !is_test_fn(&f.attrs) {
                                self.push(f.sig.ident.to_string(), Some(owner.clone()), &f.sig, f);
                            }
                        }
                    }
                }
                syn::Item::Trait(tr) => {
                    let owner = tr.ident.to_string();
                    for it in &tr.items {
                        if let syn::TraitItem::Fn(f) = it {
                            if f.default.is_some() {
                                self.push(f.sig.ident.to_string(), Some(owner.clone()), &f.sig, f);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn push(&mut self, name: String, owner: Option<String>, sig: &syn::Signature, node: &dyn SpannedNode) {
        let span = node.node_span();
        let mut qualified_path = self.prefix.clone();
        if let Some(o) = &owner {
            qualified_path.push(o.clone());
        }
        qualified_path.push(name.clone());
        self.found.push(FocalFn {
            name,
            text: self.text.slice(span).to_string(),
            file: self.file.to_path_buf(),
            qualified_path,
            owner,
            takes_self: matches!(sig.inputs.first(), Some(syn::FnArg::Receiver(_))),
            lines: self.text.lines(span),
        });
    }
}

trait SpannedNode {
    fn node_span(&self) -> proc_macro2::Span;
}

impl<T: syn::spanned::Spanned> SpannedNode for T {
    fn node_span(&self) -> proc_macro2::Span {
        self.span()
    }
}

fn is_test_fn(attrs: &[syn::Attribute]) -> bool {
    attrs.iter().any(|a| syntax::is_test_attr(a) || syntax::is_cfg_test(a))
}

fn type_name(ty: &syn::Type) -> Option<String> {
    match ty {
        syn::Type::Path(p) => syntax::last_segment(&p.path),
        syn::Type::Reference(r) => type_name(&r.elem),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn index_of(files: &[(&str, &str)]) -> WorkspaceIndex {
        let root = PathBuf::from("/ws");
        let ws = Workspace {
            root_path: root.clone(),
            crate_name: "demo".into(),
            source_files: files
                .iter()
                .map(|(p, t)| SourceFile::from_text(root.join(p), t.to_string()))
                .collect(),
            fuzz_target_files: vec![],
            fuzz_bins: Default::default(),
            buildable: None,
            diagnostics: vec![],
        };
        WorkspaceIndex::build(&ws)
    }

    fn path(s: &str) -> CallRef {
        CallRef::Path(s.split("::").map(String::from).collect())
    }

    #[test]
    fn module_paths() {
        let src = Path::new("/ws/src");
        assert!(module_path_of(src, Path::new("/ws/src/lib.rs")).is_empty());
        assert_eq!(module_path_of(src, Path::new("/ws/src/a/mod.rs")), vec!["a"]);
        assert_eq!(module_path_of(src, Path::new("/ws/src/a/b.rs")), vec!["a", "b"]);
    }

    #[test]
    fn skips_tests_and_cfg_test_modules() {
        let idx = index_of(&[(
            "src/lib.rs",
            "pub fn f() {}\n#[test] fn t() {}\n#[cfg(test)] mod tests { fn helper() {} }\n",
        )]);
        let names: Vec<_> = idx.functions().iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, vec!["f"]);
    }

    #[test]
    fn resolves_paths_methods_and_imports() {
        let idx = index_of(&[
            ("src/lib.rs", "pub mod engine;\npub fn top() {}\n"),
            (
                "src/engine/mod.rs",
                "pub struct GeneralPurpose;\nimpl GeneralPurpose {\n    pub fn new() -> Self { GeneralPurpose }\n    pub fn encode(&self, b: &[u8]) -> String { String::new() }\n}\n",
            ),
        ]);
        let none = Imports::default();
        let from = Path::new("/ws/tests/t.rs");
        let f = idx.resolve(&path("engine::GeneralPurpose::new"), &none, from).unwrap();
        assert_eq!(f.qualified_path, vec!["demo", "engine", "GeneralPurpose", "new"]);
        let f = idx.resolve(&CallRef::Method("encode".into()), &none, from).unwrap();
        assert_eq!(f.name, "encode");
        assert!(f.takes_self);
        assert_eq!(f.lines, (4, 4));
        assert!(idx.resolve(&path("demo::top"), &none, from).is_some());
        assert!(idx.resolve(&path("Vec::new"), &none, from).is_none());
        assert!(idx.resolve(&CallRef::Method("len".into()), &none, from).is_none());

        let file: syn::File = syn::parse_str("use other_crate::top;").unwrap();
        let imports = Imports::from_file(&file);
        assert!(idx.resolve(&path("top"), &imports, from).is_none());
    }

    #[test]
    fn glob_imports_disambiguate() {
        let idx = index_of(&[
            ("src/lib.rs", "pub mod a;\npub mod b;\n"),
            ("src/a.rs", "pub fn run() {}\n"),
            ("src/b.rs", "pub fn run() {}\n"),
        ]);
        let file: syn::File = syn::parse_str("use demo::b::*;").unwrap();
        let imports = Imports::from_file(&file);
        let f = idx
            .resolve(&path("run"), &imports, Path::new("/ws/tests/x.rs"))
            .unwrap();
        assert_eq!(f.qualified_path, vec!["demo", "b", "run"]);
    }
}
