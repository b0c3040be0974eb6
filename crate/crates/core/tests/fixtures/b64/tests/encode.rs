use base64::*;

#[test]
fn encode_all_bytes_url() {
    let bytes: Vec<u8> = (0..=255).collect();
    assert_eq!(
        &engine::GeneralPurpose::new(&URL_SAFE, PAD).encode(&bytes).len(),
        &344
    );
}

#[test]
fn round_trip() {
    assert_eq!(decode(encode(b"hello")).unwrap(), b"hello");
}
