use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::randfunc::PresentKey;
use crate::replacement::PolicyKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DesignKind {
    Baseline,
    Ceaser,
    #[serde(rename = "ceaser-s")]
    CeaserS,
    ScatterCache,
    SassCache,
    Mirage,
}

impl DesignKind {
    pub const ALL: [DesignKind; 6] = [
        DesignKind::Baseline,
        DesignKind::Ceaser,
        DesignKind::CeaserS,
        DesignKind::ScatterCache,
        DesignKind::SassCache,
        DesignKind::Mirage,
    ];

    /// Designs that compute one candidate set per skew.
    pub fn is_skewed(self) -> bool {
        !matches!(self, DesignKind::Baseline | DesignKind::Ceaser)
    }

    /// Designs that pay the encryption latency on a miss.
    pub fn is_randomized(self) -> bool {
        self != DesignKind::Baseline
    }

    pub fn name(self) -> &'static str {
        match self {
            DesignKind::Baseline => "baseline",
            DesignKind::Ceaser => "ceaser",
            DesignKind::CeaserS => "ceaser-s",
            DesignKind::ScatterCache => "scattercache",
            DesignKind::SassCache => "sasscache",
            DesignKind::Mirage => "mirage",
        }
    }

    /// (skews, ways per skew-set) used when nothing else is configured.
    pub fn default_geometry(self) -> (usize, usize) {
        match self {
            DesignKind::Baseline | DesignKind::Ceaser => (1, 8),
            DesignKind::CeaserS | DesignKind::ScatterCache | DesignKind::SassCache => (2, 4),
            DesignKind::Mirage => (2, 8),
        }
    }
}

impl fmt::Display for DesignKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DesignKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match norm.as_str() {
            "baseline" | "setassoc" | "nonsecure" => Ok(DesignKind::Baseline),
            "ceaser" => Ok(DesignKind::Ceaser),
            "ceasers" => Ok(DesignKind::CeaserS),
            "scattercache" | "scatter" => Ok(DesignKind::ScatterCache),
            "sasscache" | "sass" => Ok(DesignKind::SassCache),
            "mirage" => Ok(DesignKind::Mirage),
            _ => Err(Error::InvalidParam(format!("unknown cache design {s:?}"))),
        }
    }
}

/// How MIRAGE's data store is sized relative to the tag store.
///
/// `Shared`: one data entry per base way of a single skew's sets, i.e. both
/// skews index into one pool of `sets_per_skew * ways` lines.
/// `PerSkew`: one data entry per base way in every skew.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MirageDataLayout {
    #[default]
    Shared,
    PerSkew,
}

impl FromStr for MirageDataLayout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "shared" => Ok(MirageDataLayout::Shared),
            "per-skew" | "perskew" | "per_skew" => Ok(MirageDataLayout::PerSkew),
            _ => Err(Error::InvalidParam(format!("unknown MIRAGE data layout {s:?}"))),
        }
    }
}

impl fmt::Display for MirageDataLayout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MirageDataLayout::Shared => "shared",
            MirageDataLayout::PerSkew => "per-skew",
        })
    }
}

pub const DEFAULT_LLC_BYTES: u64 = 16 << 20;
pub const DEFAULT_LINE_BYTES: u64 = 64;
pub const DEFAULT_EXTRA_TAGS: usize = 6;
pub const DEFAULT_ENCRYPTION_LATENCY: u64 = 3;
pub const HIT_COST: u64 = 1;
pub const MISS_COST: u64 = 100;

/// The two fixed distinct keys used when a config does not supply its own.
pub fn default_keys() -> Vec<PresentKey> {
    vec![
        PresentKey::truncating(0x3c1f_92e4_07ab_56d8_e210),
        PresentKey::truncating(0x9a47_0be3_d5c6_18f2_7b09),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub design: DesignKind,
    pub llc_bytes: u64,
    pub line_bytes: u64,
    pub skews: usize,
    pub ways_per_set: usize,
    /// MIRAGE only; ignored by the other designs.
    pub extra_tags_per_set: usize,
    pub policy: PolicyKind,
    pub keys: Vec<PresentKey>,
    pub seed: u64,
    pub encryption_latency: u64,
    pub mirage_data: MirageDataLayout,
}

impl CacheConfig {
    pub fn new(design: DesignKind) -> Self {
        let (skews, ways) = design.default_geometry();
        CacheConfig {
            design,
            llc_bytes: DEFAULT_LLC_BYTES,
            line_bytes: DEFAULT_LINE_BYTES,
            skews,
            ways_per_set: ways,
            extra_tags_per_set: if design == DesignKind::Mirage { DEFAULT_EXTRA_TAGS } else { 0 },
            policy: PolicyKind::Random,
            keys: default_keys(),
            seed: 0,
            encryption_latency: DEFAULT_ENCRYPTION_LATENCY,
            mirage_data: MirageDataLayout::Shared,
        }
    }

    pub fn with_llc_bytes(mut self, bytes: u64) -> Self {
        self.llc_bytes = bytes;
        self
    }

    pub fn with_policy(mut self, policy: PolicyKind) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_geometry(mut self, skews: usize, ways_per_set: usize) -> Self {
        self.skews = skews;
        self.ways_per_set = ways_per_set;
        self
    }

    pub fn with_mirage_data(mut self, layout: MirageDataLayout) -> Self {
        self.mirage_data = layout;
        self
    }

    pub fn with_keys(mut self, keys: Vec<PresentKey>) -> Self {
        self.keys = keys;
        self
    }

    pub fn total_lines(&self) -> u64 {
        self.llc_bytes / self.line_bytes
    }

    pub fn sets_per_skew(&self) -> usize {
        let denom = self.line_bytes * (self.ways_per_set * self.skews) as u64;
        if denom == 0 {
            return 0;
        }
        (self.llc_bytes / denom) as usize
    }

    /// Tag entries in one skew-set.
    pub fn tags_per_set(&self) -> usize {
        match self.design {
            DesignKind::Mirage => self.ways_per_set + self.extra_tags_per_set,
            _ => self.ways_per_set,
        }
    }

    /// Number of lines the cache can hold at once.
    pub fn data_capacity(&self) -> usize {
        let base = self.sets_per_skew() * self.ways_per_set;
        match (self.design, self.mirage_data) {
            (DesignKind::Mirage, MirageDataLayout::Shared) => base,
            _ => base * self.skews,
        }
    }

    pub fn line_shift(&self) -> u32 {
        self.line_bytes.trailing_zeros()
    }

    pub fn miss_cost(&self) -> u64 {
        if self.design.is_randomized() {
            MISS_COST + self.encryption_latency
        } else {
            MISS_COST
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.line_bytes == 0 || !self.line_bytes.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "line size must be a power of two, got {}",
                self.line_bytes
            )));
        }
        if self.llc_bytes == 0 || !self.llc_bytes.is_multiple_of(self.line_bytes) {
            return Err(Error::Geometry(format!(
                "LLC size {} is not a multiple of the line size {}",
                self.llc_bytes, self.line_bytes
            )));
        }
        if self.ways_per_set == 0 || self.skews == 0 {
            return Err(Error::Geometry("ways and skews must be non-zero".into()));
        }
        let denom = self.line_bytes * (self.ways_per_set * self.skews) as u64;
        if !self.llc_bytes.is_multiple_of(denom) {
            return Err(Error::Geometry(format!(
                "{} bytes do not divide into {} skew(s) of {}-way sets",
                self.llc_bytes, self.skews, self.ways_per_set
            )));
        }
        let sets = self.sets_per_skew();
        if !sets.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "sets per skew must be a power of two, got {sets}"
            )));
        }
        if self.design == DesignKind::Mirage && self.extra_tags_per_set == 0 {
            return Err(Error::Geometry("MIRAGE needs at least one extra tag per set".into()));
        }
        if self.tags_per_set() > 32 {
            return Err(Error::Geometry(format!(
                "at most 32 tags per set are supported, got {}",
                self.tags_per_set()
            )));
        }
        Ok(())
    }
}
