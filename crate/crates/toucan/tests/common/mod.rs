//! Independent reference implementations used as test oracles.
//!
//! Everything here is deliberately written against the published algorithm
//! descriptions and kept structurally separate from the library: byte-array
//! state with little-endian loads at each step instead of persistent word
//! registers, explicit index arithmetic instead of iterator pipelines, and
//! polynomial long division instead of a shift register. The library is
//! correct when it agrees with these bit for bit.

#![allow(dead_code)]

use aes::cipher::generic_array::GenericArray;
use aes::cipher::{BlockEncrypt, KeyInit};

/// Deterministic 64-bit generator (splitmix64) so fixtures and sweeps are
/// reproducible without depending on `rand` version behaviour.
pub struct SplitMix64(pub u64);

impl SplitMix64 {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn fill(&mut self, buf: &mut [u8]) {
        for chunk in buf.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    pub fn bytes16(&mut self) -> [u8; 16] {
        let mut b = [0u8; 16];
        self.fill(&mut b);
        b
    }
}

// ---------------------------------------------------------------------------
// Chaskey reference
// ---------------------------------------------------------------------------

/// GF(2^128) doubling of a 16-byte block read as a little-endian integer,
/// reduced by x^128 + x^7 + x^2 + x + 1 (constant 0x87 into the low byte).
pub fn gf128_double_le(block: &[u8; 16]) -> [u8; 16] {
    let v = u128::from_le_bytes(*block);
    let mut doubled = v << 1;
    if v >> 127 != 0 {
        doubled ^= 0x87;
    }
    doubled.to_le_bytes()
}

/// Chaskey subkey pair: k1 = 2k, k2 = 4k in GF(2^128).
pub fn chaskey_subkeys_ref(key: &[u8; 16]) -> ([u8; 16], [u8; 16]) {
    let k1 = gf128_double_le(key);
    let k2 = gf128_double_le(&k1);
    (k1, k2)
}

fn load_word(state: &[u8; 16], i: usize) -> u32 {
    u32::from_le_bytes(state[4 * i..4 * i + 4].try_into().unwrap())
}

fn store_word(state: &mut [u8; 16], i: usize, w: u32) {
    state[4 * i..4 * i + 4].copy_from_slice(&w.to_le_bytes());
}

/// One Chaskey ARX round applied to a byte-array state.
fn round_ref(state: &mut [u8; 16]) {
    let mut v0 = load_word(state, 0);
    let mut v1 = load_word(state, 1);
    let mut v2 = load_word(state, 2);
    let mut v3 = load_word(state, 3);

    v0 = v0.wrapping_add(v1);
    v1 = v1.rotate_left(5) ^ v0;
    v0 = v0.rotate_left(16);
    v2 = v2.wrapping_add(v3);
    v3 = v3.rotate_left(8) ^ v2;
    v0 = v0.wrapping_add(v3);
    v3 = v3.rotate_left(13) ^ v0;
    v2 = v2.wrapping_add(v1);
    v1 = v1.rotate_left(7) ^ v2;
    v2 = v2.rotate_left(16);

    store_word(state, 0, v0);
    store_word(state, 1, v1);
    store_word(state, 2, v2);
    store_word(state, 3, v3);
}

/// Inverse of `round_ref`; used only for bijectivity checks.
pub fn unround_ref(state: &mut [u8; 16]) {
    let mut v0 = load_word(state, 0);
    let mut v1 = load_word(state, 1);
    let mut v2 = load_word(state, 2);
    let mut v3 = load_word(state, 3);

    v2 = v2.rotate_right(16);
    v1 = (v1 ^ v2).rotate_right(7);
    v2 = v2.wrapping_sub(v1);
    v3 = (v3 ^ v0).rotate_right(13);
    v0 = v0.wrapping_sub(v3);
    v3 = (v3 ^ v2).rotate_right(8);
    v2 = v2.wrapping_sub(v3);
    v0 = v0.rotate_right(16);
    v1 = (v1 ^ v0).rotate_right(5);
    v0 = v0.wrapping_sub(v1);

    store_word(state, 0, v0);
    store_word(state, 1, v1);
    store_word(state, 2, v2);
    store_word(state, 3, v3);
}

pub fn permute_ref(state: &[u8; 16], rounds: usize) -> [u8; 16] {
    let mut s = *state;
    for _ in 0..rounds {
        round_ref(&mut s);
    }
    s
}

pub fn permute_inv_ref(state: &[u8; 16], rounds: usize) -> [u8; 16] {
    let mut s = *state;
    for _ in 0..rounds {
        unround_ref(&mut s);
    }
    s
}

fn xor_into(state: &mut [u8; 16], block: &[u8; 16]) {
    for i in 0..16 {
        state[i] ^= block[i];
    }
}

/// Chaskey MAC, full 128-bit output serialized as the final state bytes.
///
/// Absorption: state starts as the key; every 16-byte block before the last
/// is XORed in and permuted. The last block uses k1 when it is a complete
/// block of a non-empty message, and otherwise the 0x01/zero padded partial
/// block with k2. The selected subkey is XORed in both before and after the
/// final permutation.
pub fn chaskey_ref(key: &[u8; 16], msg: &[u8], rounds: usize) -> [u8; 16] {
    let (k1, k2) = chaskey_subkeys_ref(key);
    let mut state = *key;

    let blocks_before_last = if msg.is_empty() {
        0
    } else {
        (msg.len() - 1) / 16
    };
    for b in 0..blocks_before_last {
        let block: [u8; 16] = msg[16 * b..16 * b + 16].try_into().unwrap();
        xor_into(&mut state, &block);
        state = permute_ref(&state, rounds);
    }

    let rest = &msg[16 * blocks_before_last..];
    let (last_block, subkey) = if !msg.is_empty() && rest.len() == 16 {
        (rest.try_into().unwrap(), k1)
    } else {
        let mut padded = [0u8; 16];
        padded[..rest.len()].copy_from_slice(rest);
        padded[rest.len()] = 0x01;
        (padded, k2)
    };

    xor_into(&mut state, &last_block);
    xor_into(&mut state, &subkey);
    state = permute_ref(&state, rounds);
    xor_into(&mut state, &subkey);
    state
}

/// Truncation rule: keep the first ceil(width/8) bytes of the full tag and
/// mask the value to `width` bits under a little-endian reading.
pub fn truncate_ref(full: &[u8; 16], width: u32) -> Vec<u8> {
    let nbytes = width.div_ceil(8) as usize;
    let mut out = full[..nbytes].to_vec();
    let rem = width % 8;
    if rem != 0 {
        out[nbytes - 1] &= (1u8 << rem) - 1;
    }
    out
}

// ---------------------------------------------------------------------------
// AES / CTR reference (RustCrypto `aes` crate)
// ---------------------------------------------------------------------------

pub fn aes128_encrypt_ref(key: &[u8; 16], block: &[u8; 16]) -> [u8; 16] {
    let cipher = aes::Aes128::new(GenericArray::from_slice(key));
    let mut b = GenericArray::clone_from_slice(block);
    cipher.encrypt_block(&mut b);
    b.into()
}

/// Keystream block i = AES-encrypt(nonce block with its low 64 bits set to
/// the big-endian block index).
pub fn aes_ctr_keystream_ref(key: &[u8; 16], nonce_block: &[u8; 16], index: u64) -> [u8; 16] {
    let mut block = *nonce_block;
    block[8..16].copy_from_slice(&index.to_be_bytes());
    aes128_encrypt_ref(key, &block)
}

/// Nonce block bound to a CAN identifier: identifier value in the high
/// 64 bits (optionally XORed with a session nonce), counter in the low 64.
pub fn nonce_block_for_id(id: u16, session_nonce: Option<u64>) -> [u8; 16] {
    let hi = u64::from(id) ^ session_nonce.unwrap_or(0);
    let mut block = [0u8; 16];
    block[..8].copy_from_slice(&hi.to_be_bytes());
    block
}

// ---------------------------------------------------------------------------
// Composed secured-field reference
// ---------------------------------------------------------------------------

/// Full send pipeline, composed purely from the reference pieces above:
/// 24-bit Chaskey tag over the 5 payload bytes, payload in the high 40 bits
/// and tag in the low 24, then XOR with the first 64 keystream bits.
pub fn toucan_wire_ref(
    mac_key: &[u8; 16],
    enc_key: &[u8; 16],
    id: u16,
    payload: u64,
) -> u64 {
    assert!(payload < 1 << 40);
    assert!(id < 1 << 11);

    let payload_bytes: [u8; 5] = payload.to_be_bytes()[3..8].try_into().unwrap();
    let full = chaskey_ref(mac_key, &payload_bytes, 8);
    let tag = truncate_ref(&full, 24);
    let tag24 = u64::from(tag[0]) | u64::from(tag[1]) << 8 | u64::from(tag[2]) << 16;
    let field = (payload << 24) | tag24;

    let nonce = nonce_block_for_id(id, None);
    let ks = aes_ctr_keystream_ref(enc_key, &nonce, 0);
    field ^ u64::from_be_bytes(ks[..8].try_into().unwrap())
}

// ---------------------------------------------------------------------------
// CRC-15 long-division reference
// ---------------------------------------------------------------------------

/// CRC-15 by explicit GF(2) polynomial long division: append 15 zero bits,
/// divide by x^15+x^14+x^10+x^8+x^7+x^4+x^3+1, return the remainder.
pub fn crc15_longdiv(bits: &[bool]) -> u16 {
    // 0xC599 MSB first
    const POLY: [bool; 16] = [
        true, true, false, false, false, true, false, true, true, false, false, true, true,
        false, false, true,
    ];
    let mut dividend = bits.to_vec();
    dividend.extend(std::iter::repeat(false).take(15));
    for i in 0..bits.len() {
        if dividend[i] {
            for (j, &p) in POLY.iter().enumerate() {
                dividend[i + j] ^= p;
            }
        }
    }
    dividend[bits.len()..]
        .iter()
        .fold(0u16, |acc, &b| (acc << 1) | u16::from(b))
}

// ---------------------------------------------------------------------------
// Fixture helpers
// ---------------------------------------------------------------------------

pub fn fixture_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    let path = fixture_path(name);
    std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("cannot read fixture {}: {e}", path.display()))
}

/// Parse `a,b,c,...` lines, skipping blanks and `#` comments.
pub fn fixture_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split(',').map(|f| f.trim().to_string()).collect())
        .collect()
}
