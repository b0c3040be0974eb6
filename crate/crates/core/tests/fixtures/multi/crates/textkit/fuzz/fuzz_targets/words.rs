#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|s: &str| {
    let n = textkit::word_count(s);
    assert!(n <= s.len());
});
