//! Fuzz targets: parsing `fuzz_target!` files, reporter instrumentation,
//! the reporter sink format and the `cargo fuzz` driver.

mod reporter;
mod runner;
pub mod sink;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use syn::parse::{Parse, ParseStream};

use crate::error::{Error, Result};
use crate::project::stem;
use crate::syntax::{self, SourceText};

pub use reporter::{instrument_reporter, REPORTER_FN, SINK_ENV, SINK_LIMIT_ENV};
pub use runner::{
    fuzz, prepare_instrumented_copy, FuzzOptions, FuzzOutcome, InstrumentedWorkspace, PreparedTarget,
    RunStatus,
};
pub use sink::SeedInput;

/// Type of the closure parameter of a fuzz target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamType {
    /// `&[u8]`, also the implied type of an untyped parameter.
    ByteSlice,
    /// `&str`
    Text,
    Unsupported(String),
}

impl ParamType {
    pub fn is_supported(&self) -> bool {
        !matches!(self, ParamType::Unsupported(_))
    }

    /// Rust type written in generated bindings.
    pub fn rust_type(&self) -> &str {
        match self {
            ParamType::ByteSlice => "&[u8]",
            ParamType::Text => "&str",
            ParamType::Unsupported(d) => d,
        }
    }
}

impl fmt::Display for ParamType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamType::ByteSlice => f.write_str("byte-slice"),
            ParamType::Text => f.write_str("text"),
            ParamType::Unsupported(d) => write!(f, "unsupported({d})"),
        }
    }
}

/// How the closure body is written in the original source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BodyForm {
    /// `{ ... }`; the offset is just after the opening brace.
    Block { open: usize },
    /// A bare expression spanning the byte range.
    Expr { start: usize, end: usize },
}

/// A parsed fuzz target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzTargetUnit {
    /// File stem.
    pub id: String,
    pub file: PathBuf,
    pub param_name: String,
    pub param_type: ParamType,
    /// Closure body statements, verbatim.
    pub body: Vec<String>,
    /// Top-level items other than the macro and libfuzzer-sys plumbing.
    pub preamble: Vec<PreambleItem>,
    /// Original file text.
    pub source: String,
    pub body_form: BodyForm,
}

/// One retained top-level item of a fuzz target file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreambleItem {
    pub text: String,
    /// Set for out-of-line `mod name;` declarations.
    pub module: Option<String>,
}

/// `fuzz_target!` accepts an optional `init: expr,` before the closure.
struct TargetArgs {
    closure: syn::ExprClosure,
}

impl Parse for TargetArgs {
    fn parse(input: ParseStream<'_>) -> syn::Result<Self> {
        if input.peek(syn::Ident) && input.peek2(syn::Token![:]) && !input.peek2(syn::Token![::]) {
            let _: syn::Ident = input.parse()?;
            let _: syn::Token![:] = input.parse()?;
            let _: syn::Expr = input.parse()?;
            let _: syn::Token![,] = input.parse()?;
        }
        let closure = input.parse()?;
        let _: Option<syn::Token![,]> = input.parse()?;
        Ok(TargetArgs { closure })
    }
}

fn is_fuzz_macro(item: &syn::Item) -> Option<&syn::ItemMacro> {
    match item {
        syn::Item::Macro(m) if syntax::last_segment(&m.mac.path).as_deref() == Some("fuzz_target") => Some(m),
        _ => None,
    }
}

fn is_libfuzzer_plumbing(item: &syn::Item) -> bool {
    match item {
        syn::Item::ExternCrate(e) => e.ident == "libfuzzer_sys",
        syn::Item::Use(u) => match &u.tree {
            syn::UseTree::Path(p) => p.ident == "libfuzzer_sys",
            syn::UseTree::Name(n) => n.ident == "libfuzzer_sys",
            _ => false,
        },
        _ => false,
    }
}

fn classify(ty: &syn::Type, text: &SourceText<'_>) -> ParamType {
    if let syn::Type::Reference(r) = ty {
        if r.mutability.is_none() {
            match &*r.elem {
                syn::Type::Slice(s) => {
                    if let syn::Type::Path(p) = &*s.elem {
                        if p.qself.is_none() && p.path.is_ident("u8") {
                            return ParamType::ByteSlice;
                        }
                    }
                }
                syn::Type::Path(p) if p.qself.is_none() && p.path.is_ident("str") => {
                    return ParamType::Text;
                }
                _ => {}
            }
        }
    }
    ParamType::Unsupported(text.slice_node(ty).to_string())
}

pub fn parse_fuzz_target(file: impl AsRef<Path>) -> Result<FuzzTargetUnit> {
    let file = file.as_ref();
    let text = fs::read_to_string(file).map_err(|e| Error::io(file, e))?;
    parse_fuzz_target_source(file, &text)
}

pub fn parse_fuzz_target_source(file: &Path, text: &str) -> Result<FuzzTargetUnit> {
    let parse_err = |message: String| Error::Parse {
        path: file.to_path_buf(),
        message,
    };
    let tree = syn::parse_file(text).map_err(|e| parse_err(e.to_string()))?;
    let source = SourceText::new(text);

    let macros: Vec<&syn::ItemMacro> = tree.items.iter().filter_map(is_fuzz_macro).collect();
    let mac = match macros.as_slice() {
        [] => return Err(parse_err("no fuzz_target! invocation".into())),
        [one] => *one,
        many => {
            return Err(Error::MultipleTargets {
                path: file.to_path_buf(),
                count: many.len(),
            })
        }
    };
    let args: TargetArgs = mac
        .mac
        .parse_body()
        .map_err(|e| parse_err(format!("fuzz_target! body: {e}")))?;
    let closure = args.closure;

    if closure.inputs.len() != 1 {
        return Err(parse_err(format!(
            "fuzz_target! closure takes {} parameters, expected 1",
            closure.inputs.len()
        )));
    }
    let (pat, param_type) = match &closure.inputs[0] {
        syn::Pat::Type(pt) => (&*pt.pat, classify(&pt.ty, &source)),
        other => (other, ParamType::ByteSlice),
    };
    let param_name = match pat {
        syn::Pat::Ident(id) => id.ident.to_string(),
        other => {
            return Err(parse_err(format!(
                "unsupported closure parameter pattern `{}`",
                source.slice_node(other)
            )))
        }
    };

    let (body, body_form) = match &*closure.body {
        syn::Expr::Block(b) if b.label.is_none() && b.attrs.is_empty() => {
            let open = source.range(b.block.brace_token.span.open()).end;
            let stmts = b
                .block
                .stmts
                .iter()
                .map(|s| source.slice_node(s).to_string())
                .collect::<Vec<_>>();
            (stmts, BodyForm::Block { open })
        }
        expr => {
            let r = source.range(syn::spanned::Spanned::span(expr));
            (
                vec![format!("{};", &text[r.clone()])],
                BodyForm::Expr {
                    start: r.start,
                    end: r.end,
                },
            )
        }
    };
    if body.is_empty() {
        return Err(parse_err("fuzz target body is empty".into()));
    }

    let preamble = tree
        .items
        .iter()
        .filter(|i| is_fuzz_macro(i).is_none() && !is_libfuzzer_plumbing(i))
        .map(|i| PreambleItem {
            text: source.slice_node(i).to_string(),
            module: match i {
                syn::Item::Mod(m) if m.content.is_none() => Some(m.ident.to_string()),
                _ => None,
            },
        })
        .collect();

    Ok(FuzzTargetUnit {
        id: stem(file),
        file: file.to_path_buf(),
        param_name,
        param_type,
        body,
        preamble,
        source: text.to_string(),
        body_form,
    })
}
