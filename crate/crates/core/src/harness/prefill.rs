use rand::Rng;
use serde::{Deserialize, Serialize};

use super::seed::component_rng;
use crate::cachecore::{AccessKind, Cache, DesignKind};
use crate::randfunc::SecurityDomain;

/// Spurious domains cycled through during prefill. SassCache confines each
/// domain to part of every skew, so several are needed to reach all sets.
pub const SPURIOUS_DOMAINS: u16 = 16;

/// Give up after this many accesses per line of capacity.
const PREFILL_BUDGET_FACTOR: usize = 64;

/// What an experiment fills before it starts measuring.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Warmup {
    /// Start from an empty cache.
    None,
    /// Fill every design to 100% data occupancy.
    Full,
    /// Exhaust MIRAGE's free data entries; leave the other designs empty.
    #[default]
    DataStoreOnly,
}

impl std::str::FromStr for Warmup {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> crate::error::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "cold" | "false" => Ok(Warmup::None),
            "full" | "true" => Ok(Warmup::Full),
            "data-store-only" | "datastore" | "data" => Ok(Warmup::DataStoreOnly),
            _ => Err(crate::error::Error::InvalidParam(format!("unknown warmup mode {s:?}"))),
        }
    }
}

impl std::fmt::Display for Warmup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Warmup::None => "none",
            Warmup::Full => "full",
            Warmup::DataStoreOnly => "data-store-only",
        })
    }
}

/// Installs never-reused random lines from the spurious domains until the
/// data store is full. Returns the number of accesses issued.
pub fn spurious_prefill(cache: &mut Cache, seed: u64) -> u64 {
    let mut rng = component_rng(seed, "spurious-prefill", 0);
    let capacity = cache.data_capacity();
    let budget = (capacity * PREFILL_BUDGET_FACTOR) as u64;
    let mirage = cache.design() == DesignKind::Mirage;
    let mut issued = 0u64;
    loop {
        let full = if mirage {
            cache.free_data_entries() == 0
        } else {
            cache.valid_lines() >= capacity
        };
        if full || issued >= budget {
            break;
        }
        let domain = SecurityDomain(SecurityDomain::SPURIOUS_BASE.0 + (issued % SPURIOUS_DOMAINS as u64) as u16);
        let line: u64 = rng.gen_range(0..1u64 << 32);
        cache.access(domain.region_base() + (line << 6), domain, AccessKind::Load);
        issued += 1;
    }
    issued
}

/// Applies `mode` to a fresh cache and clears the counters afterwards.
pub fn warm_up(cache: &mut Cache, mode: Warmup, seed: u64) {
    match mode {
        Warmup::None => {}
        Warmup::Full => {
            spurious_prefill(cache, seed);
        }
        Warmup::DataStoreOnly => {
            if cache.design() == DesignKind::Mirage {
                spurious_prefill(cache, seed);
            }
        }
    }
    cache.reset_stats();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cachecore::{CacheConfig, Eviction};

    fn cfg(d: DesignKind) -> CacheConfig {
        CacheConfig::new(d).with_llc_bytes(256 << 10)
    }

    #[test]
    fn mirage_coldfill_exhausted() {
        let mut c = Cache::new(cfg(DesignKind::Mirage)).unwrap();
        spurious_prefill(&mut c, 1);
        assert_eq!(c.stats().coldfill_count as usize, c.data_capacity());
        assert_eq!(c.free_data_entries(), 0);
        for i in 0..1_000u64 {
            let o = c.access((1 << 40) + (i << 6), SecurityDomain(0), AccessKind::Load);
            assert!(matches!(o.eviction, Eviction::Gle(_) | Eviction::Sae(_)));
        }
    }

    #[test]
    fn every_design_reaches_full_occupancy() {
        for d in DesignKind::ALL {
            let mut c = Cache::new(cfg(d)).unwrap();
            spurious_prefill(&mut c, 2);
            assert_eq!(c.valid_lines(), c.data_capacity(), "{d}");
            let occ: f64 = c.occupancy_table().iter().map(|&(dom, _)| c.occupancy_of(dom)).sum();
            assert!((occ - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn second_prefill_is_a_noop() {
        let mut c = Cache::new(cfg(DesignKind::Baseline)).unwrap();
        spurious_prefill(&mut c, 3);
        assert_eq!(spurious_prefill(&mut c, 4), 0);
        assert_eq!(c.valid_lines(), c.data_capacity());
    }

    #[test]
    fn data_store_only_leaves_set_assoc_cold() {
        let mut c = Cache::new(cfg(DesignKind::ScatterCache)).unwrap();
        warm_up(&mut c, Warmup::DataStoreOnly, 5);
        assert_eq!(c.valid_lines(), 0);
        let mut m = Cache::new(cfg(DesignKind::Mirage)).unwrap();
        warm_up(&mut m, Warmup::DataStoreOnly, 5);
        assert_eq!(m.free_data_entries(), 0);
        assert_eq!(m.stats().accesses, 0);
    }
}
