#[test]
fn decode_random_fuzzaug_template() {
    let data: &[u8] = __AUGTEST_DATA__;
    let engine = utils::random_engine(data);
    let _ = engine.decode(data);
}