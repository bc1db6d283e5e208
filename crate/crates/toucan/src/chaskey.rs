//! Chaskey permutation-based MAC.
//!
//! Chaskey is an ARX (add/rotate/XOR) MAC designed for 32-bit
//! microcontrollers and robust under tag truncation, which is what lets the
//! protocol ship a 24-bit tag. The state is four 32-bit words; message bytes
//! are absorbed as little-endian words, and the full 128-bit tag is the
//! little-endian serialization of the final state. Subkeys k1/k2 are GF(2^128)
//! doublings of the master key and select between the complete-final-block
//! and padded-final-block paths.
//!
//! All functions are pure; key material is immutable after construction.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChaskeyError {
    #[error("unsupported round count {0}: the permutation is defined for 8 or 12 rounds")]
    UnsupportedRounds(u32),
    #[error("unsupported tag width {0}: expected one of {VALID_TAG_WIDTHS:?}")]
    InvalidTagWidth(u32),
}

/// Truncation widths the tag type accepts. The protocol uses 24; the small
/// widths exist for forgery and collision experiments.
pub const VALID_TAG_WIDTHS: [u32; 7] = [8, 12, 16, 24, 32, 64, 128];

/// Number of permutation rounds. Eight is the original design; twelve
/// (Chaskey-12) is exposed for a larger security margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounds {
    #[default]
    Eight,
    Twelve,
}

impl Rounds {
    pub fn count(self) -> u32 {
        match self {
            Rounds::Eight => 8,
            Rounds::Twelve => 12,
        }
    }
}

impl TryFrom<u32> for Rounds {
    type Error = ChaskeyError;

    fn try_from(n: u32) -> Result<Self, ChaskeyError> {
        match n {
            8 => Ok(Rounds::Eight),
            12 => Ok(Rounds::Twelve),
            other => Err(ChaskeyError::UnsupportedRounds(other)),
        }
    }
}

/// The 128-bit permutation state: four modular 32-bit registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChaskeyState(pub [u32; 4]);

impl ChaskeyState {
    pub fn from_bytes(bytes: &[u8; 16]) -> Self {
        ChaskeyState(load_words(bytes))
    }

    pub fn to_bytes(self) -> [u8; 16] {
        store_words(self.0)
    }
}

/// Master key with its two derived subkeys.
#[derive(Clone)]
pub struct ChaskeyKey {
    k: [u32; 4],
    k1: [u32; 4],
    k2: [u32; 4],
}

impl ChaskeyKey {
    /// Little-endian word order: bytes 0..4 become the first state word.
    pub fn new(bytes: &[u8; 16]) -> Self {
        Self::from_words(load_words(bytes))
    }

    pub fn from_words(k: [u32; 4]) -> Self {
        let (k1, k2) = derive_subkeys(k);
        ChaskeyKey { k, k1, k2 }
    }

    pub fn master(&self) -> [u32; 4] {
        self.k
    }

    pub fn subkeys(&self) -> ([u32; 4], [u32; 4]) {
        (self.k1, self.k2)
    }
}

impl std::fmt::Debug for ChaskeyKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // never print key material
        f.write_str("ChaskeyKey(..)")
    }
}

/// GF(2^128) doubling under x^128 + x^7 + x^2 + x + 1: shift the 128-bit
/// value left by one and fold the carried-out bit back as 0x87 in the low
/// byte. Word 0 holds the least significant bits.
fn times_two(k: [u32; 4]) -> [u32; 4] {
    const REDUCTION: [u32; 2] = [0x00, 0x87];
    [
        (k[0] << 1) ^ REDUCTION[(k[3] >> 31) as usize],
        (k[1] << 1) | (k[0] >> 31),
        (k[2] << 1) | (k[1] >> 31),
        (k[3] << 1) | (k[2] >> 31),
    ]
}

/// Subkey derivation: k1 = 2k and k2 = 4k in GF(2^128).
pub fn derive_subkeys(k: [u32; 4]) -> ([u32; 4], [u32; 4]) {
    let k1 = times_two(k);
    let k2 = times_two(k1);
    (k1, k2)
}

/// One ARX round over the four state words.
#[inline(always)]
fn round(v: &mut [u32; 4]) {
    v[0] = v[0].wrapping_add(v[1]);
    v[2] = v[2].wrapping_add(v[3]);
    v[1] = v[1].rotate_left(5);
    v[3] = v[3].rotate_left(8);
    v[1] ^= v[0];
    v[3] ^= v[2];
    v[0] = v[0].rotate_left(16);

    v[2] = v[2].wrapping_add(v[1]);
    v[0] = v[0].wrapping_add(v[3]);
    v[1] = v[1].rotate_left(7);
    v[3] = v[3].rotate_left(13);
    v[1] ^= v[2];
    v[3] ^= v[0];
    v[2] = v[2].rotate_left(16);
}

#[inline(always)]
fn permute_words(v: &mut [u32; 4], rounds: Rounds) {
    for _ in 0..rounds.count() {
        round(v);
    }
}

/// Applies the round network `rounds` times. Bijective on 128-bit states;
/// note the all-zero state is a fixed point (the round has no constants),
/// which is harmless here because the state is always keyed.
pub fn permute(state: ChaskeyState, rounds: Rounds) -> ChaskeyState {
    let mut v = state.0;
    permute_words(&mut v, rounds);
    ChaskeyState(v)
}

/// Full 128-bit MAC output plus truncation views.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tag([u8; 16]);

impl Tag {
    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        Tag(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }

    /// Shorthand for [`truncate_tag`].
    pub fn truncate(&self, width: u32) -> Result<TruncatedTag, ChaskeyError> {
        truncate_tag(self, width)
    }
}

/// A `width`-bit prefix of a full tag: the first ceil(width/8) serialized
/// bytes with the value masked to `width` bits (little-endian reading, so
/// narrower truncations are byte prefixes of wider ones).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncatedTag {
    width: u32,
    bytes: Vec<u8>,
}

impl TruncatedTag {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// The tag as an integer: little-endian over the truncated bytes.
    pub fn value(&self) -> u128 {
        self.bytes
            .iter()
            .rev()
            .fold(0u128, |acc, &b| (acc << 8) | u128::from(b))
    }
}

pub fn truncate_tag(tag: &Tag, width: u32) -> Result<TruncatedTag, ChaskeyError> {
    if !VALID_TAG_WIDTHS.contains(&width) {
        return Err(ChaskeyError::InvalidTagWidth(width));
    }
    let nbytes = width.div_ceil(8) as usize;
    let mut bytes = tag.0[..nbytes].to_vec();
    let rem = width % 8;
    if rem != 0 {
        bytes[nbytes - 1] &= (1u8 << rem) - 1;
    }
    Ok(TruncatedTag { width, bytes })
}

/// Chaskey MAC over an arbitrary-length message (empty allowed).
///
/// The state starts as the master key. Every 16-byte block before the final
/// one is XORed in and permuted. A non-empty message whose final block is
/// complete takes the k1 path; anything else (including the empty message)
/// is padded with 0x01 then zeros and takes the k2 path. The selected subkey
/// is XORed in around the final permutation.
pub fn mac(key: &ChaskeyKey, message: &[u8], rounds: Rounds) -> Tag {
    let mut v = key.k;

    let mut blocks = message.chunks_exact(16);
    let tail = if message.is_empty() {
        &[][..]
    } else if blocks.remainder().is_empty() {
        // the final complete block takes the k1 path below, not the loop
        blocks.next_back().expect("non-empty multiple of 16")
    } else {
        blocks.remainder()
    };

    for block in blocks {
        xor_block(&mut v, block);
        permute_words(&mut v, rounds);
    }

    let finishing_key = if !message.is_empty() && tail.len() == 16 {
        xor_block(&mut v, tail);
        key.k1
    } else {
        let mut padded = [0u8; 16];
        padded[..tail.len()].copy_from_slice(tail);
        padded[tail.len()] = 0x01;
        xor_block(&mut v, &padded);
        key.k2
    };

    for i in 0..4 {
        v[i] ^= finishing_key[i];
    }
    permute_words(&mut v, rounds);
    for i in 0..4 {
        v[i] ^= finishing_key[i];
    }

    Tag(store_words(v))
}

#[inline(always)]
fn xor_block(v: &mut [u32; 4], block: &[u8]) {
    debug_assert_eq!(block.len(), 16);
    for (word, chunk) in v.iter_mut().zip(block.chunks_exact(4)) {
        *word ^= u32::from_le_bytes(chunk.try_into().unwrap());
    }
}

fn load_words(bytes: &[u8; 16]) -> [u32; 4] {
    [
        u32::from_le_bytes(bytes[0..4].try_into().unwrap()),
        u32::from_le_bytes(bytes[4..8].try_into().unwrap()),
        u32::from_le_bytes(bytes[8..12].try_into().unwrap()),
        u32::from_le_bytes(bytes[12..16].try_into().unwrap()),
    ]
}

fn store_words(words: [u32; 4]) -> [u8; 16] {
    let mut out = [0u8; 16];
    for (chunk, word) in out.chunks_exact_mut(4).zip(words) {
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    out
}
