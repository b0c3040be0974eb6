use crate::error::{Error, Result};

use super::{BodyForm, FuzzTargetUnit, ParamType};

/// Name of the injected reporter function.
pub const REPORTER_FN: &str = "__augtest_report";
/// Environment variable naming the sink file.
pub const SINK_ENV: &str = "AUGTEST_SINK";
/// Environment variable capping the number of recorded inputs.
pub const SINK_LIMIT_ENV: &str = "AUGTEST_SINK_LIMIT";

/// Appended to instrumented targets. Each call appends one hex line to the
/// file named by `AUGTEST_SINK` with a single write.
const REPORTER_SOURCE: &str = r#"

#[doc(hidden)]
fn __augtest_report(data: &[u8]) {
    use std::io::Write;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::{Mutex, OnceLock};

    static SINK: OnceLock<Option<(Mutex<std::fs::File>, usize)>> = OnceLock::new();
    static WRITTEN: AtomicUsize = AtomicUsize::new(0);

    let sink = SINK.get_or_init(|| {
        let path = std::env::var_os("AUGTEST_SINK")?;
        let limit = std::env::var("AUGTEST_SINK_LIMIT")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(usize::MAX);
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .ok()?;
        Some((Mutex::new(file), limit))
    });
    let Some((file, limit)) = sink else { return };
    if WRITTEN.fetch_add(1, Ordering::Relaxed) >= *limit {
        return;
    }
    const HEX: &[u8; 16] = b"0123456789abcdef";
    let mut line = Vec::with_capacity(data.len() * 3 + 1);
    for (i, b) in data.iter().enumerate() {
        if i > 0 {
            line.push(b' ');
        }
        line.push(HEX[(b >> 4) as usize]);
        line.push(HEX[(b & 0xf) as usize]);
    }
    line.push(b'\n');
    if let Ok(mut f) = file.lock() {
        let _ = f.write_all(&line);
    }
}
"#;

fn reporter_call(t: &FuzzTargetUnit) -> String {
    match t.param_type {
        ParamType::Text => format!("{REPORTER_FN}({}.as_bytes());", t.param_name),
        _ => format!("{REPORTER_FN}({});", t.param_name),
    }
}

/// Source of `t`'s file with a reporter call as the first statement of the
/// closure body and the reporter definition appended. Everything else is
/// left byte-for-byte intact.
pub fn instrument_reporter(t: &FuzzTargetUnit) -> Result<String> {
    if !t.param_type.is_supported() {
        return Err(Error::UnsupportedParam {
            target: t.id.clone(),
            descriptor: t.param_type.rust_type().to_string(),
        });
    }
    if t.source.contains(REPORTER_FN) {
        return Err(Error::AlreadyInstrumented(t.id.clone()));
    }
    let call = reporter_call(t);
    let src = &t.source;
    let mut out = String::with_capacity(src.len() + REPORTER_SOURCE.len() + 64);
    match t.body_form {
        BodyForm::Block { open } => {
            out.push_str(&src[..open]);
            out.push_str("\n    ");
            out.push_str(&call);
            out.push_str(&src[open..]);
        }
        BodyForm::Expr { start, end } => {
            out.push_str(&src[..start]);
            out.push_str("{ ");
            out.push_str(&call);
            out.push(' ');
            out.push_str(&src[start..end]);
            out.push_str(" }");
            out.push_str(&src[end..]);
        }
    }
    out.push_str(REPORTER_SOURCE);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuzz::parse_fuzz_target_source;
    use std::path::Path;

    const DECODE_TARGET: &str = "#![no_main]
#[macro_use] extern crate libfuzzer_sys;
extern crate base64;
use base64::*;
mod utils;
fuzz_target!(|data: &[u8]| {
    let engine = utils::random_engine(data);
    let _ = engine.decode(data);
});
";

    fn parse(src: &str) -> FuzzTargetUnit {
        parse_fuzz_target_source(Path::new("t.rs"), src).unwrap()
    }

    #[test]
    fn reporter_is_first_statement() {
        let t = parse(DECODE_TARGET);
        let out = instrument_reporter(&t).unwrap();
        assert!(out.starts_with(
            "#![no_main]
#[macro_use] extern crate libfuzzer_sys;
extern crate base64;
use base64::*;
mod utils;
fuzz_target!(|data: &[u8]| {
    __augtest_report(data);
    let engine = utils::random_engine(data);
    let _ = engine.decode(data);
});
"
        ));
        let again = parse(&out);
        assert_eq!(again.body[0], "__augtest_report(data);");
        assert_eq!(&again.body[1..], &t.body[..]);
        assert!(syn::parse_file(&out).is_ok());
    }

    #[test]
    fn second_instrumentation_is_refused() {
        let out = instrument_reporter(&parse(DECODE_TARGET)).unwrap();
        assert!(matches!(
            instrument_reporter(&parse(&out)),
            Err(Error::AlreadyInstrumented(_))
        ));
    }

    #[test]
    fn text_and_expression_targets() {
        let t = parse("fuzz_target!(|s: &str| demo::run(s));");
        let out = instrument_reporter(&t).unwrap();
        let again = parse(&out);
        assert_eq!(again.body, vec!["__augtest_report(s.as_bytes());", "demo::run(s)"]);
    }

    #[test]
    fn unsupported_param_is_refused() {
        let t = parse("fuzz_target!(|v: Vec<u8>| { let _ = v; });");
        assert!(matches!(instrument_reporter(&t), Err(Error::UnsupportedParam { .. })));
    }
}
