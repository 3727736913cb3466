//! Authentication keys `AK = h(ID, C)` shared between Trent and each user.
//!
//! `h` is SHA-256 over the big-endian identity bytes followed by the
//! big-endian counter bytes, truncated to the requested length. Longer keys
//! are built by concatenating blocks for consecutive counter values.

use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_ID_BITS: usize = 64;
pub const DEFAULT_COUNTER_BITS: u32 = 64;

fn bytes_for(bits: usize) -> usize {
    bits.div_ceil(8)
}

/// Secret identity number of `bits` bits, stored big-endian in `⌈bits/8⌉` bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IdentityNumber {
    bytes: Vec<u8>,
    bits: usize,
}

impl IdentityNumber {
    pub fn from_bytes(bytes: Vec<u8>, bits: usize) -> Result<Self> {
        if bits == 0 {
            return Err(invalid("identity length must be at least one bit"));
        }
        if bytes.len() != bytes_for(bits) {
            return Err(invalid(format!(
                "identity of {bits} bits needs {} bytes, got {}",
                bytes_for(bits),
                bytes.len()
            )));
        }
        let spare = bytes.len() * 8 - bits;
        if spare > 0 && bytes[0] >> (8 - spare) != 0 {
            return Err(invalid(format!("identity value does not fit in {bits} bits")));
        }
        Ok(Self { bytes, bits })
    }

    pub fn from_hex(hex_str: &str, bits: usize) -> Result<Self> {
        let bytes = hex::decode(hex_str).map_err(|e| invalid(format!("identity hex: {e}")))?;
        Self::from_bytes(bytes, bits)
    }

    pub fn from_u64(value: u64, bits: usize) -> Result<Self> {
        let width = bytes_for(bits);
        let raw = value.to_be_bytes();
        let bytes = if width >= 8 {
            let mut v = vec![0u8; width - 8];
            v.extend_from_slice(&raw);
            v
        } else {
            if raw[..8 - width].iter().any(|&b| b != 0) {
                return Err(invalid(format!("identity value does not fit in {bits} bits")));
            }
            raw[8 - width..].to_vec()
        };
        Self::from_bytes(bytes, bits)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.bytes)
    }
}

/// Hash-call counter, an `m`-bit unsigned value (`1 <= m <= 64`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Counter {
    value: u64,
    bits: u32,
}

impl Counter {
    pub fn new(value: u64, bits: u32) -> Result<Self> {
        if !(1..=64).contains(&bits) {
            return Err(invalid(format!("counter length {bits} outside 1..=64")));
        }
        if bits < 64 && value >> bits != 0 {
            return Err(invalid(format!("counter {value} does not fit in {bits} bits")));
        }
        Ok(Self { value, bits })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    fn capacity(&self) -> u128 {
        1u128 << self.bits
    }

    /// The counter `steps` calls later.
    pub fn advance(&self, steps: u64) -> Result<Self> {
        let next = u128::from(self.value) + u128::from(steps);
        if next >= self.capacity() {
            return Err(Error::Capacity(format!(
                "counter {} + {steps} exhausts the {}-bit counter space",
                self.value, self.bits
            )));
        }
        Ok(Self { value: next as u64, bits: self.bits })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let raw = self.value.to_be_bytes();
        let width = bytes_for(self.bits as usize);
        raw[8 - width..].to_vec()
    }
}

/// A key as an ordered bit string; bit 0 is consumed first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct AuthKey {
    bits: Vec<bool>,
}

impl AuthKey {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Reads `n` bits MSB-first from `bytes`.
    pub fn from_bytes(bytes: &[u8], n: usize) -> Result<Self> {
        if n > bytes.len() * 8 {
            return Err(invalid(format!("{n} bits requested from {} bytes", bytes.len())));
        }
        Ok(Self { bits: (0..n).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect() })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_prefix_of(&self, other: &AuthKey) -> bool {
        other.bits.starts_with(&self.bits)
    }

    /// Hex of the bits packed MSB-first, final byte zero-padded.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self
            .bits
            .chunks(8)
            .map(|chunk| chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | (u8::from(b) << (7 - i))))
            .collect();
        hex::encode(bytes)
    }
}

/// A hash construction `h(ID, C)` producing fixed-size blocks.
pub trait KeyDerivation {
    /// Output length of one call, in bits.
    fn block_bits(&self) -> usize;

    fn block(&self, id: &IdentityNumber, counter: &Counter) -> Vec<u8>;
}

/// SHA-256 of `id_bytes ‖ counter_bytes`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sha256Derivation;

impl KeyDerivation for Sha256Derivation {
    fn block_bits(&self) -> usize {
        256
    }

    fn block(&self, id: &IdentityNumber, counter: &Counter) -> Vec<u8> {
        let mut hasher = Sha256::new();
        hasher.update(id.as_bytes());
        hasher.update(counter.to_bytes());
        hasher.finalize().to_vec()
    }
}

pub fn derive_key_with<K: KeyDerivation>(kdf: &K, id: &IdentityNumber, counter: &Counter, n: usize) -> Result<AuthKey> {
    if n > kdf.block_bits() {
        return Err(invalid(format!("a single derivation yields at most {} bits, {n} requested", kdf.block_bits())));
    }
    AuthKey::from_bytes(&kdf.block(id, counter), n)
}

/// The first `n <= 256` bits of `h(id, counter)`.
pub fn derive_key(id: &IdentityNumber, counter: &Counter, n: usize) -> Result<AuthKey> {
    derive_key_with(&Sha256Derivation, id, counter, n)
}

/// Number of derivation calls needed for `needed` bits.
pub fn blocks_needed<K: KeyDerivation>(kdf: &K, needed: usize) -> u64 {
    needed.div_ceil(kdf.block_bits()) as u64
}

pub fn extend_key_with<K: KeyDerivation>(
    kdf: &K,
    id: &IdentityNumber,
    start: &Counter,
    needed: usize,
) -> Result<AuthKey> {
    if needed == 0 {
        return Err(invalid("key stretching needs at least one bit"));
    }
    let blocks = blocks_needed(kdf, needed);
    // the counter after the last block must still be representable
    start.advance(blocks)?;
    let mut bits = Vec::with_capacity(needed);
    for step in 0..blocks {
        let counter = start.advance(step)?;
        let take = (needed - bits.len()).min(kdf.block_bits());
        bits.extend_from_slice(derive_key_with(kdf, id, &counter, take)?.bits());
    }
    Ok(AuthKey::from_bits(bits))
}

/// Concatenates `h(id, start)`, `h(id, start+1)`, ... truncated to `needed` bits.
pub fn extend_key(id: &IdentityNumber, start: &Counter, needed: usize) -> Result<AuthKey> {
    extend_key_with(&Sha256Derivation, id, start, needed)
}
