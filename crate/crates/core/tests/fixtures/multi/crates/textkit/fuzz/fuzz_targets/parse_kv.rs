#![no_main]
use libfuzzer_sys::fuzz_target;
use textkit::parse_kv;

fuzz_target!(|data: &[u8]| {
    for (k, v) in parse_kv(data) {
        assert!(!k.contains(';') && !v.contains(';'));
    }
});
