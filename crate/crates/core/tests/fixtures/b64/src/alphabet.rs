pub struct Alphabet {
    pub symbols: [u8; 64],
}

const fn build(s: &[u8; 64]) -> Alphabet {
    Alphabet { symbols: *s }
}

pub const STANDARD_ALPHABET: Alphabet =
    build(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/");
pub const URL_SAFE: Alphabet =
    build(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789-_");

impl Alphabet {
    pub fn index_of(&self, c: u8) -> Option<u8> {
        self.symbols.iter().position(|&s| s == c).map(|i| i as u8)
    }
}
