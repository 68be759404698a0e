//! Keyed address-to-set randomization.

mod index;
mod present;

pub use index::{
    derive_set_indices, sass_reachable_index, sass_reachable_sets, sass_set_weights, IndexFunction,
    SetIndexVector, MAX_SKEWS,
};
pub use present::{present_decrypt, present_encrypt, PresentCipher, PresentKey};

use std::fmt;

use serde::{Deserialize, Serialize};

/// Isolation identifier of a process. 0 is the attacker / receiver, 1 the
/// victim / sender; higher ids are used for spurious and noise traffic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SecurityDomain(pub u16);

impl SecurityDomain {
    pub const ATTACKER: SecurityDomain = SecurityDomain(0);
    pub const VICTIM: SecurityDomain = SecurityDomain(1);
    /// First id of the reserved spurious-prefill range.
    pub const SPURIOUS_BASE: SecurityDomain = SecurityDomain(0x100);
    /// Third-party noise traffic.
    pub const NOISE: SecurityDomain = SecurityDomain(2);

    pub fn is_spurious(self) -> bool {
        self.0 >= Self::SPURIOUS_BASE.0
    }

    /// Byte base address of the domain's private region. Regions are far
    /// apart and aligned to 2^40 so no two domains ever share a line.
    pub fn region_base(self) -> u64 {
        (self.0 as u64 + 1) << 40
    }
}

impl fmt::Display for SecurityDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "D{}", self.0)
    }
}
