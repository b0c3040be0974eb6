#![no_main]
use libfuzzer_sys::fuzz_target;
use numkit::varint::{decode_varint, encode_varint};

fuzz_target!(|data| {
    if let Some((v, used)) = decode_varint(data) {
        assert!(encode_varint(v).len() <= used);
    }
});
