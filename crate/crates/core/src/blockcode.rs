//! Systematic Hamming(7,4) block code applied to record bytes before they
//! enter network coding.
//!
//! Codeword layout, most significant bit first: `d1 d2 d3 d4 p1 p2 p3` with
//!
//! ```text
//! p1 = d1 ^ d2 ^ d4
//! p2 = d1 ^ d3 ^ d4
//! p3 = d2 ^ d3 ^ d4
//! ```
//!
//! Each byte becomes two codewords (high nibble first), packed back to back
//! MSB-first into a byte stream. The final byte is zero-padded; the bit length
//! travels with the stream.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BlockCodeError {
    #[error("nibble value {0} out of range")]
    NibbleRange(u8),
    #[error("coded bit length {0} is not a multiple of 14")]
    BadLength(usize),
    #[error("packed buffer of {bytes} bytes cannot hold {bits} bits")]
    BufferSize { bytes: usize, bits: usize },
}

/// Four data bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Nibble(u8);

impl Nibble {
    pub fn new(value: u8) -> Result<Self, BlockCodeError> {
        if value < 16 {
            Ok(Nibble(value))
        } else {
            Err(BlockCodeError::NibbleRange(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

/// Seven-bit codeword in the low bits of a byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Codeword7(u8);

impl Codeword7 {
    pub fn bits(self) -> u8 {
        self.0
    }
}

pub const CODEWORD_BITS: usize = 7;
pub const BITS_PER_BYTE: usize = 2 * CODEWORD_BITS;

const fn parity(d: u8) -> u8 {
    let d1 = (d >> 3) & 1;
    let d2 = (d >> 2) & 1;
    let d3 = (d >> 1) & 1;
    let d4 = d & 1;
    let p1 = d1 ^ d2 ^ d4;
    let p2 = d1 ^ d3 ^ d4;
    let p3 = d2 ^ d3 ^ d4;
    (p1 << 2) | (p2 << 1) | p3
}

/// Syndrome bits (s1 s2 s3) -> bit position (0 = LSB) of the single error.
const fn build_syndrome_table() -> [Option<u8>; 8] {
    let mut table = [None; 8];
    let mut pos = 0;
    while pos < 7 {
        let word = 1u8 << pos;
        table[syndrome(word) as usize] = Some(pos);
        pos += 1;
    }
    table
}

const fn syndrome(w: u8) -> u8 {
    (parity(w >> 3) ^ w) & 0b111
}

static SYNDROME_TO_BIT: [Option<u8>; 8] = build_syndrome_table();

pub fn hamming_encode(d: Nibble) -> Codeword7 {
    Codeword7((d.0 << 3) | parity(d.0))
}

/// Decodes a 7-bit word (upper bit ignored), correcting up to one flipped bit.
pub fn hamming_decode(word: u8) -> (Nibble, bool) {
    let w = word & 0x7F;
    match SYNDROME_TO_BIT[syndrome(w) as usize] {
        None => (Nibble(w >> 3), false),
        Some(bit) => (Nibble((w ^ (1 << bit)) >> 3), true),
    }
}

/// Bit stream packed MSB-first with an explicit bit length.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PackedBits {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl PackedBits {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_packed(bytes: Vec<u8>, bit_len: usize) -> Result<Self, BlockCodeError> {
        if bytes.len() != bit_len.div_ceil(8) {
            return Err(BlockCodeError::BufferSize { bytes: bytes.len(), bits: bit_len });
        }
        let mut out = Self { bytes, bit_len };
        // keep the padding canonical
        if !bit_len.is_multiple_of(8) {
            let last = out.bytes.len() - 1;
            out.bytes[last] &= 0xFFu8 << (8 - bit_len % 8);
        }
        Ok(out)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut out = Self::new();
        for &b in bits {
            out.push(b);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.bit_len
    }

    pub fn is_empty(&self) -> bool {
        self.bit_len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.bit_len, "bit index out of range");
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.bit_len, "bit index out of range");
        self.bytes[i / 8] ^= 1 << (7 - i % 8);
    }

    pub fn push(&mut self, bit: bool) {
        if self.bit_len.is_multiple_of(8) {
            self.bytes.push(0);
        }
        if bit {
            let last = self.bytes.len() - 1;
            self.bytes[last] |= 1 << (7 - self.bit_len % 8);
        }
        self.bit_len += 1;
    }

    fn push_bits(&mut self, value: u8, count: usize) {
        for i in (0..count).rev() {
            self.push((value >> i) & 1 == 1);
        }
    }

    fn read_bits(&self, start: usize, count: usize) -> u8 {
        (start..start + count).fold(0u8, |acc, i| (acc << 1) | self.get(i) as u8)
    }
}

/// Encodes each byte as two codewords, high nibble first.
pub fn encode_bytes(data: &[u8]) -> PackedBits {
    let mut out = PackedBits::new();
    for &byte in data {
        for nib in [byte >> 4, byte & 0x0F] {
            out.push_bits(hamming_encode(Nibble(nib)).0, CODEWORD_BITS);
        }
    }
    out
}

/// Inverse of [`encode_bytes`]; also returns how many codewords needed a
/// single-bit correction.
pub fn decode_bytes(bits: &PackedBits) -> Result<(Vec<u8>, usize), BlockCodeError> {
    if !bits.len().is_multiple_of(BITS_PER_BYTE) {
        return Err(BlockCodeError::BadLength(bits.len()));
    }
    let mut corrections = 0;
    let mut out = Vec::with_capacity(bits.len() / BITS_PER_BYTE);
    for chunk in 0..bits.len() / BITS_PER_BYTE {
        let base = chunk * BITS_PER_BYTE;
        let (hi, c_hi) = hamming_decode(bits.read_bits(base, CODEWORD_BITS));
        let (lo, c_lo) = hamming_decode(bits.read_bits(base + CODEWORD_BITS, CODEWORD_BITS));
        corrections += c_hi as usize + c_lo as usize;
        out.push((hi.0 << 4) | lo.0);
    }
    Ok((out, corrections))
}

/// Number of packed bytes produced for `n` input bytes.
pub fn packed_len(n: usize) -> usize {
    (n * BITS_PER_BYTE).div_ceil(8)
}

/// Exhaustive sweep: pairwise distance of all codewords and correction of
/// every single-bit error. Returns the number of failures.
pub fn exhaustive_code_check() -> usize {
    let words: Vec<u8> = (0..16).map(|d| hamming_encode(Nibble(d)).0).collect();
    let mut failures = 0;
    for i in 0..16 {
        for j in i + 1..16 {
            if (words[i] ^ words[j]).count_ones() < 3 {
                failures += 1;
            }
        }
        for bit in 0..7 {
            if hamming_decode(words[i] ^ (1 << bit)) != (Nibble(i as u8), true) {
                failures += 1;
            }
        }
    }
    failures
}
