//! Functional simulator for randomized last-level caches and the
//! occupancy attacks that run against them.

pub mod aesattack;
pub mod cachecore;
pub mod error;
pub mod fingerprint;
pub mod harness;
pub mod occchannel;
pub mod randfunc;
pub mod replacement;
pub mod stats;

pub use cachecore::{AccessKind, AccessOutcome, Cache, CacheConfig, CacheStats, DesignKind, Eviction};
pub use error::{Error, Result};
pub use randfunc::{PresentKey, SecurityDomain};
pub use replacement::PolicyKind;
