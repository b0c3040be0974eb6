use crate::alphabet::Alphabet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    InvalidByte(usize, u8),
    InvalidLength,
}

pub struct GeneralPurpose {
    alphabet: &'static Alphabet,
    pad: bool,
}

impl GeneralPurpose {
    pub const fn new(alphabet: &'static Alphabet, pad: bool) -> Self {
        GeneralPurpose { alphabet, pad }
    }

    pub fn encode<T: AsRef<[u8]>>(&self, input: T) -> String {
        let bytes = input.as_ref();
        let mut out = String::with_capacity(bytes.len().div_ceil(3) * 4);
        for chunk in bytes.chunks(3) {
            let b = [chunk[0], *chunk.get(1).unwrap_or(&0), *chunk.get(2).unwrap_or(&0)];
            let n = (b[0] as u32) << 16 | (b[1] as u32) << 8 | b[2] as u32;
            for i in 0..chunk.len() + 1 {
                out.push(self.alphabet.symbols[(n >> (18 - 6 * i) & 63) as usize] as char);
            }
            if self.pad {
                for _ in chunk.len()..3 {
                    out.push('=');
                }
            }
        }
        out
    }

    pub fn decode<T: AsRef<[u8]>>(&self, input: T) -> Result<Vec<u8>, DecodeError> {
        let input = input.as_ref();
        let trimmed = match input.iter().position(|&c| c == b'=') {
            Some(p) if self.pad => &input[..p],
            _ => input,
        };
        if trimmed.len() % 4 == 1 {
            return Err(DecodeError::InvalidLength);
        }
        let mut out = Vec::with_capacity(trimmed.len() * 3 / 4);
        let mut acc = 0u32;
        let mut bits = 0;
        for (i, &c) in trimmed.iter().enumerate() {
            let v = self.alphabet.index_of(c).ok_or(DecodeError::InvalidByte(i, c))?;
            acc = acc << 6 | v as u32;
            bits += 6;
            if bits >= 8 {
                bits -= 8;
                out.push((acc >> bits) as u8);
            }
        }
        Ok(out)
    }
}
