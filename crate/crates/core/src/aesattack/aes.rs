//! OpenSSL-style T-table AES-128 whose table lookups can be routed through
//! a simulated cache.

use std::sync::OnceLock;

use crate::cachecore::{AccessKind, Cache};
use crate::randfunc::SecurityDomain;

/// Offset of the tables inside the victim's region; line aligned.
pub const TABLE_OFFSET: u64 = 0x10_0000;
pub const TABLE_BYTES: u64 = 1024;
/// Te0..Te3 followed by the final-round table Te4.
pub const N_TABLES: usize = 5;
pub const ENTRY_BYTES: u64 = 4;

pub const SBOX: [u8; 256] = {
    let mut s = [0u8; 256];
    // generated from the multiplicative inverse in GF(2^8) and the affine map
    let mut p: u8 = 1;
    let mut q: u8 = 1;
    loop {
        // p *= 3
        p = p ^ (p << 1) ^ if p & 0x80 != 0 { 0x1B } else { 0 };
        // q /= 3
        q ^= q << 1;
        q ^= q << 2;
        q ^= q << 4;
        if q & 0x80 != 0 {
            q ^= 0x09;
        }
        let x = q ^ q.rotate_left(1) ^ q.rotate_left(2) ^ q.rotate_left(3) ^ q.rotate_left(4);
        s[p as usize] = x ^ 0x63;
        if p == 1 {
            break;
        }
    }
    s[0] = 0x63;
    s
};

pub const INV_SBOX: [u8; 256] = {
    let mut inv = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        inv[SBOX[i] as usize] = i as u8;
        i += 1;
    }
    inv
};

const RCON: [u8; 10] = [0x01, 0x02, 0x04, 0x08, 0x10, 0x20, 0x40, 0x80, 0x1B, 0x36];

fn xtime(x: u8) -> u8 {
    (x << 1) ^ if x & 0x80 != 0 { 0x1B } else { 0 }
}

struct TTables {
    te: [[u32; 256]; N_TABLES],
}

fn ttables() -> &'static TTables {
    static T: OnceLock<TTables> = OnceLock::new();
    T.get_or_init(|| {
        let mut te = [[0u32; 256]; N_TABLES];
        for x in 0..256 {
            let s = SBOX[x];
            let s2 = xtime(s);
            let s3 = s2 ^ s;
            let t0 = u32::from_be_bytes([s2, s, s, s3]);
            te[0][x] = t0;
            te[1][x] = t0.rotate_right(8);
            te[2][x] = t0.rotate_right(16);
            te[3][x] = t0.rotate_right(24);
            te[4][x] = u32::from_be_bytes([s, s, s, s]);
        }
        TTables { te }
    })
}

/// Byte address of entry `idx` of table `t` for the victim `domain`.
pub fn table_entry_addr(domain: SecurityDomain, t: usize, idx: u8) -> u64 {
    domain.region_base() + TABLE_OFFSET + t as u64 * TABLE_BYTES + idx as u64 * ENTRY_BYTES
}

/// Expanded AES-128 key: 44 words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AesKey {
    rk: [u32; 44],
}

impl AesKey {
    pub fn new(key: [u8; 16]) -> Self {
        let mut rk = [0u32; 44];
        for i in 0..4 {
            rk[i] = u32::from_be_bytes(key[4 * i..4 * i + 4].try_into().unwrap());
        }
        for i in 4..44 {
            let mut t = rk[i - 1];
            if i % 4 == 0 {
                t = sub_word(t.rotate_left(8)) ^ ((RCON[i / 4 - 1] as u32) << 24);
            }
            rk[i] = rk[i - 4] ^ t;
        }
        AesKey { rk }
    }

    pub fn master(&self) -> [u8; 16] {
        words_to_bytes(&self.rk[..4])
    }

    /// The round-10 key, XORed into the ciphertext by the final round.
    pub fn last_round_key(&self) -> [u8; 16] {
        words_to_bytes(&self.rk[40..44])
    }

    /// Recovers the full schedule from the round-10 key.
    pub fn from_last_round_key(k10: [u8; 16]) -> Self {
        let mut rk = [0u32; 44];
        for i in 0..4 {
            rk[40 + i] = u32::from_be_bytes(k10[4 * i..4 * i + 4].try_into().unwrap());
        }
        for i in (4..44).rev() {
            let mut t = rk[i - 1];
            if i % 4 == 0 {
                t = sub_word(t.rotate_left(8)) ^ ((RCON[i / 4 - 1] as u32) << 24);
            }
            rk[i - 4] = rk[i] ^ t;
        }
        AesKey { rk }
    }

    pub fn encrypt(&self, pt: [u8; 16]) -> [u8; 16] {
        self.encrypt_with(pt, |_, _| {})
    }

    /// Encrypts and reports every table lookup as (table, index).
    pub fn encrypt_with(&self, pt: [u8; 16], mut lookup: impl FnMut(usize, u8)) -> [u8; 16] {
        let te = &ttables().te;
        let rk = &self.rk;
        let mut s = [0u32; 4];
        for i in 0..4 {
            s[i] = u32::from_be_bytes(pt[4 * i..4 * i + 4].try_into().unwrap()) ^ rk[i];
        }
        let mut look = |t: usize, b: u32| -> u32 {
            let idx = (b & 0xFF) as u8;
            lookup(t, idx);
            te[t][idx as usize]
        };
        for round in 1..10 {
            let mut t = [0u32; 4];
            for c in 0..4 {
                t[c] = look(0, s[c] >> 24)
                    ^ look(1, s[(c + 1) % 4] >> 16)
                    ^ look(2, s[(c + 2) % 4] >> 8)
                    ^ look(3, s[(c + 3) % 4])
                    ^ rk[4 * round + c];
            }
            s = t;
        }
        let mut out = [0u8; 16];
        for c in 0..4 {
            let w = (look(4, s[c] >> 24) & 0xFF00_0000)
                ^ (look(4, s[(c + 1) % 4] >> 16) & 0x00FF_0000)
                ^ (look(4, s[(c + 2) % 4] >> 8) & 0x0000_FF00)
                ^ (look(4, s[(c + 3) % 4]) & 0x0000_00FF)
                ^ rk[40 + c];
            out[4 * c..4 * c + 4].copy_from_slice(&w.to_be_bytes());
        }
        out
    }
}

fn sub_word(w: u32) -> u32 {
    let b = w.to_be_bytes();
    u32::from_be_bytes([SBOX[b[0] as usize], SBOX[b[1] as usize], SBOX[b[2] as usize], SBOX[b[3] as usize]])
}

fn words_to_bytes(words: &[u32]) -> [u8; 16] {
    let mut out = [0u8; 16];
    for (i, w) in words.iter().enumerate() {
        out[4 * i..4 * i + 4].copy_from_slice(&w.to_be_bytes());
    }
    out
}

/// AES-128 encryption; with a cache attached every table lookup is issued
/// as a load from `domain`.
pub fn aes128_encrypt_traced(pt: [u8; 16], key: &AesKey, cache: Option<&mut Cache>, domain: SecurityDomain) -> [u8; 16] {
    match cache {
        None => key.encrypt(pt),
        Some(c) => key.encrypt_with(pt, |t, idx| {
            c.access(table_entry_addr(domain, t, idx), domain, AccessKind::Load);
        }),
    }
}

/// Distinct table lines an encryption touches.
pub fn touched_lines(pt: [u8; 16], key: &AesKey) -> usize {
    let mut seen = [false; N_TABLES * 16];
    key.encrypt_with(pt, |t, idx| seen[t * 16 + (idx as usize >> 4)] = true);
    seen.iter().filter(|&&b| b).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachecore::{CacheConfig, DesignKind};

    fn hex16(s: &str) -> [u8; 16] {
        let mut out = [0u8; 16];
        for i in 0..16 {
            out[i] = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).unwrap();
        }
        out
    }

    #[test]
    fn sbox_spot_values() {
        assert_eq!(SBOX[0x00], 0x63);
        assert_eq!(SBOX[0x01], 0x7c);
        assert_eq!(SBOX[0x53], 0xed);
        assert_eq!(SBOX[0xff], 0x16);
        assert_eq!(INV_SBOX[0x63], 0x00);
    }

    #[test]
    fn fips_vector() {
        let key = AesKey::new(hex16("000102030405060708090a0b0c0d0e0f"));
        let ct = key.encrypt(hex16("00112233445566778899aabbccddeeff"));
        assert_eq!(ct, hex16("69c4e0d86a7b0430d8cdb78070b4c55a"));
    }

    #[test]
    fn key_schedule_inverts() {
        let key = AesKey::new(hex16("2b7e151628aed2a6abf7158809cf4f3c"));
        assert_eq!(key.last_round_key(), hex16("d014f9a8c9ee2589e13f0cc8b6630ca6"));
        assert_eq!(AesKey::from_last_round_key(key.last_round_key()), key);
    }

    #[test]
    fn cache_is_observational() {
        let key = AesKey::new([7; 16]);
        let mut c = Cache::new(CacheConfig::new(DesignKind::Mirage).with_llc_bytes(1 << 20)).unwrap();
        let pt = [0x42; 16];
        let a = aes128_encrypt_traced(pt, &key, Some(&mut c), SecurityDomain::VICTIM);
        assert_eq!(a, aes128_encrypt_traced(pt, &key, None, SecurityDomain::VICTIM));
        assert_eq!(c.stats().accesses, 160);
        assert_eq!(c.stats().misses as usize, touched_lines(pt, &key));
    }

    #[test]
    fn touched_lines_bounded() {
        let key = AesKey::new([1; 16]);
        for b in 0..50u8 {
            let n = touched_lines([b; 16], &key);
            assert!((1..=160).contains(&n));
        }
    }

    #[test]
    fn tables_are_line_aligned() {
        for t in 0..N_TABLES {
            assert_eq!(table_entry_addr(SecurityDomain::VICTIM, t, 0) % 64, 0);
        }
    }
}
