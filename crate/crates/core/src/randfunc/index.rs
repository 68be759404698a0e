use rustc_hash::FxHashMap;

use super::{PresentCipher, PresentKey, SecurityDomain};
use crate::cachecore::DesignKind;
use crate::error::{Error, Result};

/// Upper bound on skews / partitions supported by the simulator.
pub const MAX_SKEWS: usize = 8;

/// Candidate set per skew for one line.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SetIndexVector {
    per_skew: [u32; MAX_SKEWS],
    skew_count: u8,
}

impl SetIndexVector {
    pub fn from_slice(indices: &[u32]) -> Self {
        assert!(!indices.is_empty() && indices.len() <= MAX_SKEWS);
        let mut per_skew = [0u32; MAX_SKEWS];
        per_skew[..indices.len()].copy_from_slice(indices);
        SetIndexVector {
            per_skew,
            skew_count: indices.len() as u8,
        }
    }

    pub fn skew_count(&self) -> usize {
        self.skew_count as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.per_skew[..self.skew_count as usize]
    }

    pub fn get(&self, skew: usize) -> u32 {
        self.as_slice()[skew]
    }
}

impl std::fmt::Debug for SetIndexVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.as_slice()).finish()
    }
}

fn check_geometry(design: DesignKind, sets_per_skew: usize, skew_count: usize) -> Result<()> {
    if sets_per_skew == 0 || !sets_per_skew.is_power_of_two() {
        return Err(Error::Geometry(format!(
            "sets per skew must be a power of two, got {sets_per_skew}"
        )));
    }
    if skew_count == 0 || skew_count > MAX_SKEWS {
        return Err(Error::Geometry(format!(
            "skew count must be in 1..={MAX_SKEWS}, got {skew_count}"
        )));
    }
    if matches!(design, DesignKind::Baseline | DesignKind::Ceaser) && skew_count != 1 {
        return Err(Error::Geometry(format!(
            "{design} is not skewed; skew count must be 1, got {skew_count}"
        )));
    }
    if design == DesignKind::ScatterCache
        && skew_count * sets_per_skew.trailing_zeros() as usize > 64
    {
        return Err(Error::Geometry(
            "ScatterCache index fields do not fit in a 64-bit ciphertext".into(),
        ));
    }
    Ok(())
}

fn keys_needed(design: DesignKind, skew_count: usize) -> usize {
    match design {
        DesignKind::Baseline => 0,
        DesignKind::Ceaser | DesignKind::ScatterCache | DesignKind::SassCache => 1,
        DesignKind::CeaserS | DesignKind::Mirage => skew_count,
    }
}

/// Stage of the two-function SassCache mapping.
#[derive(Clone, Copy)]
enum SassStage {
    Spread = 1,
    Compress = 2,
}

fn sass_derived_key(master: &PresentCipher, domain: SecurityDomain, skew: usize, stage: SassStage) -> PresentKey {
    let tweak = (domain.0 as u64) << 32 | (skew as u64) << 8 | stage as u64;
    let mixed = master.encrypt(tweak) as u128;
    PresentKey::truncating(mixed << 16 | (tweak as u128 & 0xFFFF) ^ (master.key().raw() & 0xFFFF))
}

#[derive(Clone)]
struct SassDomainFns {
    spread: Vec<PresentCipher>,
    compress: Vec<PresentCipher>,
}

impl SassDomainFns {
    fn new(master: &PresentCipher, domain: SecurityDomain, skews: usize) -> Self {
        let spread = (0..skews)
            .map(|s| PresentCipher::new(sass_derived_key(master, domain, s, SassStage::Spread)))
            .collect();
        let compress = (0..skews)
            .map(|s| PresentCipher::new(sass_derived_key(master, domain, s, SassStage::Compress)))
            .collect();
        SassDomainFns { spread, compress }
    }

    #[inline]
    fn index(&self, line_addr: u64, skew: usize, mask: u64) -> u32 {
        let first = self.spread[skew].encrypt(line_addr) & mask;
        (self.compress[skew].encrypt(first) & mask) as u32
    }
}

/// Index derivation with key schedules expanded once, used on the access
/// path of a cache instance.
#[derive(Clone)]
pub struct IndexFunction {
    design: DesignKind,
    skews: usize,
    mask: u64,
    index_bits: u32,
    ciphers: Vec<PresentCipher>,
    sass: FxHashMap<u16, SassDomainFns>,
}

impl std::fmt::Debug for IndexFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("IndexFunction")
            .field("design", &self.design)
            .field("skews", &self.skews)
            .field("sets_per_skew", &(self.mask + 1))
            .finish()
    }
}

impl IndexFunction {
    pub fn new(
        design: DesignKind,
        keys: &[PresentKey],
        sets_per_skew: usize,
        skew_count: usize,
    ) -> Result<Self> {
        check_geometry(design, sets_per_skew, skew_count)?;
        let needed = keys_needed(design, skew_count);
        if keys.len() < needed {
            return Err(Error::InvalidKey(format!(
                "{design} with {skew_count} skew(s) needs {needed} key(s), got {}",
                keys.len()
            )));
        }
        Ok(IndexFunction {
            design,
            skews: skew_count,
            mask: sets_per_skew as u64 - 1,
            index_bits: sets_per_skew.trailing_zeros(),
            ciphers: keys[..needed].iter().map(|&k| PresentCipher::new(k)).collect(),
            sass: FxHashMap::default(),
        })
    }

    pub fn skews(&self) -> usize {
        self.skews
    }

    pub fn indices(&mut self, line_addr: u64, domain: SecurityDomain) -> SetIndexVector {
        let mut out = [0u32; MAX_SKEWS];
        match self.design {
            DesignKind::Baseline => out[0] = (line_addr & self.mask) as u32,
            DesignKind::Ceaser => out[0] = (self.ciphers[0].encrypt(line_addr) & self.mask) as u32,
            DesignKind::CeaserS | DesignKind::Mirage => {
                for (slot, cipher) in out.iter_mut().zip(&self.ciphers) {
                    *slot = (cipher.encrypt(line_addr) & self.mask) as u32;
                }
            }
            DesignKind::ScatterCache => {
                let ct = self.ciphers[0].encrypt(line_addr);
                for (s, slot) in out.iter_mut().take(self.skews).enumerate() {
                    *slot = (ct >> (s as u32 * self.index_bits) & self.mask) as u32;
                }
            }
            DesignKind::SassCache => {
                let master = &self.ciphers[0];
                let skews = self.skews;
                let fns = self
                    .sass
                    .entry(domain.0)
                    .or_insert_with(|| SassDomainFns::new(master, domain, skews));
                for (s, slot) in out.iter_mut().take(skews).enumerate() {
                    *slot = fns.index(line_addr, s, self.mask);
                }
            }
        }
        SetIndexVector {
            per_skew: out,
            skew_count: self.skews as u8,
        }
    }
}

/// Candidate set indices of `line_addr` under `design`.
///
/// CEASER uses the low bits of one encryption; CEASER-S and MIRAGE encrypt
/// once per skew with that skew's key; ScatterCache encrypts once and hands
/// disjoint bit-fields of the ciphertext to the partitions; SassCache goes
/// through [`sass_reachable_index`] per skew.
pub fn derive_set_indices(
    design: DesignKind,
    line_addr: u64,
    keys: &[PresentKey],
    domain: SecurityDomain,
    sets_per_skew: usize,
    skew_count: usize,
) -> Result<SetIndexVector> {
    let mut f = IndexFunction::new(design, keys, sets_per_skew, skew_count)?;
    Ok(f.indices(line_addr, domain))
}

/// SassCache per-domain index for one skew: a keyed spread onto
/// `[0, sets_per_skew)` followed by a keyed compression of that range onto
/// itself, so each domain only ever reaches the image of the second map.
pub fn sass_reachable_index(
    line_addr: u64,
    key: PresentKey,
    domain: SecurityDomain,
    sets_per_skew: usize,
    skew: usize,
) -> u32 {
    assert!(sets_per_skew.is_power_of_two());
    let master = PresentCipher::new(key);
    let spread = PresentCipher::new(sass_derived_key(&master, domain, skew, SassStage::Spread));
    let compress = PresentCipher::new(sass_derived_key(&master, domain, skew, SassStage::Compress));
    let mask = sets_per_skew as u64 - 1;
    (compress.encrypt(spread.encrypt(line_addr) & mask) & mask) as u32
}

/// Preimage count of every set under the compression stage: set j is hit
/// by a fraction `w[j] / sets_per_skew` of a domain's addresses.
pub fn sass_set_weights(
    key: PresentKey,
    domain: SecurityDomain,
    sets_per_skew: usize,
    skew: usize,
) -> Vec<u32> {
    assert!(sets_per_skew.is_power_of_two());
    let master = PresentCipher::new(key);
    let compress = PresentCipher::new(sass_derived_key(&master, domain, skew, SassStage::Compress));
    let mask = sets_per_skew as u64 - 1;
    let mut w = vec![0u32; sets_per_skew];
    for x in 0..sets_per_skew as u64 {
        w[(compress.encrypt(x) & mask) as usize] += 1;
    }
    w
}

/// Membership bitmap of the sets a domain can reach in one skew, enumerated
/// over the whole intermediate range.
pub fn sass_reachable_sets(
    key: PresentKey,
    domain: SecurityDomain,
    sets_per_skew: usize,
    skew: usize,
) -> Vec<bool> {
    sass_set_weights(key, domain, sets_per_skew, skew).into_iter().map(|w| w > 0).collect()
}
