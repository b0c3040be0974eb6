//! Helpers for mapping `syn` spans back onto the original source text.
//!
//! Everything that is emitted as training text is sliced verbatim out of the
//! file it came from, so formatting and comments inside a construct survive.

use std::ops::Range;

use proc_macro2::{LineColumn, Span};
use syn::spanned::Spanned;

/// Source text with a line index for span-to-offset conversion.
#[derive(Debug, Clone)]
pub struct SourceText<'a> {
    text: &'a str,
    line_starts: Vec<usize>,
}

impl<'a> SourceText<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(text.match_indices('\n').map(|(i, _)| i + 1));
        SourceText { text, line_starts }
    }

    pub fn text(&self) -> &'a str {
        self.text
    }

    /// Byte offset of a line/column position. Columns count chars.
    pub fn offset(&self, lc: LineColumn) -> usize {
        let Some(&start) = self.line_starts.get(lc.line.saturating_sub(1)) else {
            return self.text.len();
        };
        let line = &self.text[start..];
        let col = line
            .char_indices()
            .nth(lc.column)
            .map(|(i, _)| i)
            .unwrap_or(line.len());
        start + col
    }

    pub fn range(&self, span: Span) -> Range<usize> {
        let start = self.offset(span.start());
        let end = self.offset(span.end()).max(start);
        start..end
    }

    pub fn slice(&self, span: Span) -> &'a str {
        &self.text[self.range(span)]
    }

    pub fn slice_node<T: Spanned>(&self, node: &T) -> &'a str {
        self.slice(node.span())
    }

    /// 1-based inclusive line range covered by a span.
    pub fn lines(&self, span: Span) -> (usize, usize) {
        (span.start().line, span.end().line)
    }
}

/// Last path segment of a macro or attribute path, e.g. `assert_eq` for
/// `std::assert_eq`.
pub fn last_segment(path: &syn::Path) -> Option<String> {
    path.segments.last().map(|s| s.ident.to_string())
}

pub fn path_idents(path: &syn::Path) -> Vec<String> {
    path.segments.iter().map(|s| s.ident.to_string()).collect()
}

/// True for `#[test]` and path-qualified variants such as `#[tokio::test]`.
pub fn is_test_attr(attr: &syn::Attribute) -> bool {
    last_segment(attr.path()).as_deref() == Some("test")
}

/// True for `#[cfg(test)]` (and `cfg(all(test, ...))`).
pub fn is_cfg_test(attr: &syn::Attribute) -> bool {
    if !attr.path().is_ident("cfg") {
        return false;
    }
    let mut found = false;
    let _ = attr.parse_nested_meta(|meta| {
        if meta.path.is_ident("test") {
            found = true;
        } else if meta.path.is_ident("all") {
            let _ = meta.parse_nested_meta(|inner| {
                if inner.path.is_ident("test") {
                    found = true;
                }
                Ok(())
            });
        }
        Ok(())
    });
    found
}

/// Converts an arbitrary target name into a valid Rust identifier.
pub fn sanitize_ident(raw: &str) -> String {
    let mut out: String = raw
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    if out.is_empty() || out.starts_with(|c: char| c.is_ascii_digit()) {
        out.insert(0, '_');
    }
    out
}
