use base64::engine::GeneralPurpose;
use base64::{PAD, NO_PAD, STANDARD_ALPHABET, URL_SAFE};

pub fn random_engine(data: &[u8]) -> GeneralPurpose {
    let seed = data.first().copied().unwrap_or(0);
    let alphabet = if seed & 1 == 0 { &STANDARD_ALPHABET } else { &URL_SAFE };
    GeneralPurpose::new(alphabet, if seed & 2 == 0 { PAD } else { NO_PAD })
}
