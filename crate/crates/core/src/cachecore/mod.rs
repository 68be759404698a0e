//! Cache geometry, the per-design access state machine, and the counters
//! every experiment reads back.

mod cache;
mod config;

pub use cache::Cache;
pub use config::{
    default_keys, CacheConfig, DesignKind, MirageDataLayout, DEFAULT_ENCRYPTION_LATENCY,
    DEFAULT_EXTRA_TAGS, DEFAULT_LINE_BYTES, DEFAULT_LLC_BYTES, HIT_COST, MISS_COST,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::randfunc::SecurityDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessKind {
    Load,
    Store,
}

/// A line pushed out of the cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Victim {
    pub line: u64,
    pub domain: SecurityDomain,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Eviction {
    /// Hit, or install into an invalid way of a set-associative design.
    None,
    /// MIRAGE install into a free data entry.
    ColdFill,
    Sae(Victim),
    Gle(Victim),
}

impl Eviction {
    pub fn victim(&self) -> Option<Victim> {
        match *self {
            Eviction::Sae(v) | Eviction::Gle(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessOutcome {
    pub hit: bool,
    pub eviction: Eviction,
    pub skew_used: usize,
    pub set_used: usize,
    pub cost: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub accesses: u64,
    pub hits: u64,
    pub misses: u64,
    pub sae_count: u64,
    pub gle_count: u64,
    pub coldfill_count: u64,
    pub setfill_count: u64,
    pub per_domain_misses: BTreeMap<u16, u64>,
}

impl CacheStats {
    /// accesses = hits + misses and misses = sae + gle + coldfill + setfill.
    pub fn is_balanced(&self) -> bool {
        self.accesses == self.hits + self.misses
            && self.misses
                == self.sae_count + self.gle_count + self.coldfill_count + self.setfill_count
    }

    pub fn misses_of(&self, domain: SecurityDomain) -> u64 {
        self.per_domain_misses.get(&domain.0).copied().unwrap_or(0)
    }
}
