//! PRESENT-80, the 64-bit block cipher used as the address randomizer.
//!
//! The round function is table driven: each of the eight state bytes is
//! pushed through the S-box layer and the bit permutation with a single
//! lookup, so one round is eight loads and seven XORs.

use std::fmt;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const SBOX: [u8; 16] = [
    0xC, 0x5, 0x6, 0xB, 0x9, 0x0, 0xA, 0xD, 0x3, 0xE, 0xF, 0x8, 0x4, 0x7, 0x1, 0x2,
];

const ROUNDS: usize = 31;
const KEY_MASK: u128 = (1u128 << 80) - 1;

/// An 80-bit PRESENT key.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PresentKey(u128);

impl PresentKey {
    pub fn new(raw: u128) -> Result<Self> {
        if raw & !KEY_MASK != 0 {
            return Err(Error::InvalidKey(format!(
                "PRESENT key {raw:#x} is wider than 80 bits"
            )));
        }
        Ok(PresentKey(raw))
    }

    /// Builds a key from the low 80 bits of `raw`, discarding the rest.
    pub fn truncating(raw: u128) -> Self {
        PresentKey(raw & KEY_MASK)
    }

    pub fn raw(&self) -> u128 {
        self.0
    }

    /// Big-endian 10-byte encoding.
    pub fn to_bytes(&self) -> [u8; 10] {
        let full = self.0.to_be_bytes();
        let mut out = [0u8; 10];
        out.copy_from_slice(&full[6..]);
        out
    }

    pub fn from_bytes(bytes: [u8; 10]) -> Self {
        let mut full = [0u8; 16];
        full[6..].copy_from_slice(&bytes);
        PresentKey(u128::from_be_bytes(full))
    }
}

impl fmt::Debug for PresentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PresentKey({:020x})", self.0)
    }
}

impl fmt::Display for PresentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:020x}", self.0)
    }
}

impl std::str::FromStr for PresentKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let digits = s.trim().trim_start_matches("0x");
        let raw = u128::from_str_radix(digits, 16)
            .map_err(|e| Error::InvalidKey(format!("{s:?}: {e}")))?;
        PresentKey::new(raw)
    }
}

impl serde::Serialize for PresentKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for PresentKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Tables {
    /// Combined S-box + permutation, indexed by byte position then value.
    sp: [[u64; 256]; 8],
    /// Inverse permutation contribution of one byte.
    inv_p: [[u64; 256]; 8],
    /// Inverse S-box applied to both nibbles of a byte.
    inv_s_byte: [u8; 256],
}

fn p_layer_bit(i: u32) -> u32 {
    if i == 63 {
        63
    } else {
        (i * 16) % 63
    }
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut inv_sbox = [0u8; 16];
        for (i, &s) in SBOX.iter().enumerate() {
            inv_sbox[s as usize] = i as u8;
        }
        let mut sp = [[0u64; 256]; 8];
        let mut inv_p = [[0u64; 256]; 8];
        for pos in 0..8u32 {
            for v in 0..256u32 {
                let substituted = (SBOX[(v & 0xF) as usize] as u32)
                    | ((SBOX[(v >> 4) as usize] as u32) << 4);
                let mut out = 0u64;
                let mut inv = 0u64;
                for bit in 0..8u32 {
                    let src = pos * 8 + bit;
                    if substituted >> bit & 1 == 1 {
                        out |= 1u64 << p_layer_bit(src);
                    }
                    if v >> bit & 1 == 1 {
                        // bit at position src came from P^-1(src)
                        let from = (0..64).find(|&j| p_layer_bit(j) == src).unwrap();
                        inv |= 1u64 << from;
                    }
                }
                sp[pos as usize][v as usize] = out;
                inv_p[pos as usize][v as usize] = inv;
            }
        }
        let mut inv_s_byte = [0u8; 256];
        for v in 0..256usize {
            inv_s_byte[v] = inv_sbox[v & 0xF] | (inv_sbox[v >> 4] << 4);
        }
        Tables {
            sp,
            inv_p,
            inv_s_byte,
        }
    })
}

fn expand_key(key: PresentKey) -> [u64; ROUNDS + 1] {
    let mut reg = key.0;
    let mut round_keys = [0u64; ROUNDS + 1];
    for (round, rk) in round_keys.iter_mut().enumerate() {
        *rk = (reg >> 16) as u64;
        if round == ROUNDS {
            break;
        }
        reg = ((reg << 61) | (reg >> 19)) & KEY_MASK;
        let top = (reg >> 76) as usize;
        reg = (reg & !(0xFu128 << 76)) | ((SBOX[top] as u128) << 76);
        reg ^= ((round as u128) + 1) << 15;
    }
    round_keys
}

/// A PRESENT instance with its key schedule expanded once.
#[derive(Clone)]
pub struct PresentCipher {
    key: PresentKey,
    round_keys: [u64; ROUNDS + 1],
}

impl fmt::Debug for PresentCipher {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PresentCipher").field("key", &self.key).finish()
    }
}

impl PresentCipher {
    pub fn new(key: PresentKey) -> Self {
        PresentCipher {
            key,
            round_keys: expand_key(key),
        }
    }

    pub fn key(&self) -> PresentKey {
        self.key
    }

    #[inline]
    pub fn encrypt(&self, block: u64) -> u64 {
        let t = &tables().sp;
        let mut state = block;
        for rk in &self.round_keys[..ROUNDS] {
            let s = state ^ rk;
            state = t[0][(s & 0xFF) as usize]
                ^ t[1][(s >> 8 & 0xFF) as usize]
                ^ t[2][(s >> 16 & 0xFF) as usize]
                ^ t[3][(s >> 24 & 0xFF) as usize]
                ^ t[4][(s >> 32 & 0xFF) as usize]
                ^ t[5][(s >> 40 & 0xFF) as usize]
                ^ t[6][(s >> 48 & 0xFF) as usize]
                ^ t[7][(s >> 56) as usize];
        }
        state ^ self.round_keys[ROUNDS]
    }

    pub fn decrypt(&self, block: u64) -> u64 {
        let tabs = tables();
        let mut state = block ^ self.round_keys[ROUNDS];
        for rk in self.round_keys[..ROUNDS].iter().rev() {
            let mut permuted = 0u64;
            for pos in 0..8 {
                permuted ^= tabs.inv_p[pos][(state >> (8 * pos) & 0xFF) as usize];
            }
            let mut substituted = 0u64;
            for pos in 0..8 {
                let byte = tabs.inv_s_byte[(permuted >> (8 * pos) & 0xFF) as usize];
                substituted |= (byte as u64) << (8 * pos);
            }
            state = substituted ^ rk;
        }
        state
    }
}

/// One-shot encryption; expands the key schedule on every call.
pub fn present_encrypt(block: u64, key: PresentKey) -> u64 {
    PresentCipher::new(key).encrypt(block)
}

pub fn present_decrypt(block: u64, key: PresentKey) -> u64 {
    PresentCipher::new(key).decrypt(block)
}
