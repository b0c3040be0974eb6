//! Reporter sink format: one input per line, each byte as two lowercase hex
//! digits, bytes separated by single spaces (`03 2c 0c`). An empty input is an
//! empty line. A trailing line without `\n` was cut off when the fuzzer was
//! killed and is discarded.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One harvested fuzzing input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedInput {
    #[serde(with = "hex_line")]
    pub bytes: Vec<u8>,
    pub target_id: String,
}

impl SeedInput {
    pub fn new(bytes: impl Into<Vec<u8>>, target_id: impl Into<String>) -> Self {
        SeedInput {
            bytes: bytes.into(),
            target_id: target_id.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.bytes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }
}

pub fn encode_line(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 3);
    for (i, b) in bytes.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Strict inverse of [`encode_line`]; `None` for anything it would not emit.
pub fn decode_line(line: &str) -> Option<Vec<u8>> {
    if line.is_empty() {
        return Some(Vec::new());
    }
    line.split(' ')
        .map(|tok| {
            let lower = tok.len() == 2 && tok.bytes().all(|c| matches!(c, b'0'..=b'9' | b'a'..=b'f'));
            if !lower {
                return None;
            }
            hex::decode(tok).ok().map(|v| v[0])
        })
        .collect()
}

/// Parsed sink contents.
#[derive(Debug, Clone, Default)]
pub struct SinkContents {
    pub inputs: Vec<Vec<u8>>,
    pub malformed_lines: usize,
    pub partial_tail: bool,
}

pub fn decode_sink(text: &str) -> SinkContents {
    let mut out = SinkContents::default();
    let mut lines: Vec<&str> = text.split('\n').collect();
    // After the final newline split() yields "", otherwise a partial line.
    let tail = lines.pop().unwrap_or("");
    out.partial_tail = !tail.is_empty();
    for line in lines {
        match decode_line(line) {
            Some(bytes) => out.inputs.push(bytes),
            None => out.malformed_lines += 1,
        }
    }
    out
}

pub fn read_sink(path: &Path, target_id: &str) -> Result<(Vec<SeedInput>, SinkContents)> {
    let raw = fs::read(path).map_err(|e| Error::SinkUnreadable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let text = String::from_utf8(raw).map_err(|e| Error::SinkUnreadable {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut contents = decode_sink(&text);
    let seeds = std::mem::take(&mut contents.inputs)
        .into_iter()
        .map(|b| SeedInput::new(b, target_id))
        .collect();
    Ok((seeds, contents))
}

mod hex_line {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::encode_line(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        super::decode_line(&s).ok_or_else(|| serde::de::Error::custom("invalid hex byte line"))
    }
}
