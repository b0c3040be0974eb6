/// `key=value` pairs separated by `;`. Malformed entries are skipped.
pub fn parse_kv(input: &[u8]) -> Vec<(String, String)> {
    let text = String::from_utf8_lossy(input);
    text.split(';')
        .filter_map(|part| {
            let (k, v) = part.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}
