pub mod alphabet;
pub mod engine;

pub use alphabet::{Alphabet, STANDARD_ALPHABET, URL_SAFE};
pub use engine::{DecodeError, GeneralPurpose};

pub const PAD: bool = true;
pub const NO_PAD: bool = false;

pub const STANDARD: GeneralPurpose = GeneralPurpose::new(&STANDARD_ALPHABET, PAD);

/// Encodes with the standard alphabet and padding.
pub fn encode<T: AsRef<[u8]>>(input: T) -> String {
    STANDARD.encode(input)
}

pub fn decode<T: AsRef<[u8]>>(input: T) -> Result<Vec<u8>, DecodeError> {
    STANDARD.decode(input)
}
