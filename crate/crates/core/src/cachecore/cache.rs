use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use super::{AccessKind, AccessOutcome, CacheConfig, CacheStats, DesignKind, Eviction, Victim};
use crate::error::Result;
use crate::randfunc::{IndexFunction, SecurityDomain, SetIndexVector};
use crate::replacement::{self, SetView};

const NO_SLOT: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, Default)]
struct TagEntry {
    line: u64,
    domain: u16,
    valid: bool,
    /// Forward pointer into the MIRAGE data store.
    data: u32,
}

/// A single LLC instance.
///
/// Tags are laid out skew-major: `(skew * sets + set) * tags_per_set + way`.
/// Two RNG streams are kept apart: `rng` drives skew choice and global
/// eviction, `policy_rng` only the Random replacement policy, so a policy
/// that is never consulted leaves the rest of the run untouched.
#[derive(Clone, Debug)]
pub struct Cache {
    cfg: CacheConfig,
    index: IndexFunction,
    sets: usize,
    tps: usize,
    line_shift: u32,
    capacity: usize,
    tags: Vec<TagEntry>,
    meta: Vec<u64>,
    tree: Vec<u32>,
    // MIRAGE data store: reverse pointers and the free list
    rptr: Vec<u32>,
    free: Vec<u32>,
    valid: usize,
    occupancy: FxHashMap<u16, u64>,
    stamp: u64,
    rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    stats: CacheStats,
}

fn rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut a = ChaCha8Rng::seed_from_u64(seed);
    a.set_stream(1);
    let mut b = ChaCha8Rng::seed_from_u64(seed);
    b.set_stream(2);
    (a, b)
}

impl Cache {
    pub fn new(cfg: CacheConfig) -> Result<Self> {
        cfg.validate()?;
        let sets = cfg.sets_per_skew();
        let index = IndexFunction::new(cfg.design, &cfg.keys, sets, cfg.skews)?;
        let tps = cfg.tags_per_set();
        let n_tags = cfg.skews * sets * tps;
        let capacity = cfg.data_capacity();
        let mirage = cfg.design == DesignKind::Mirage;
        let (rng, policy_rng) = rngs(cfg.seed);
        let mut cache = Cache {
            index,
            sets,
            tps,
            line_shift: cfg.line_shift(),
            capacity,
            tags: vec![TagEntry::default(); n_tags],
            meta: vec![0; n_tags],
            tree: vec![0; cfg.skews * sets],
            rptr: if mirage { vec![NO_SLOT; capacity] } else { Vec::new() },
            free: Vec::new(),
            valid: 0,
            occupancy: FxHashMap::default(),
            stamp: 0,
            rng,
            policy_rng,
            stats: CacheStats::default(),
            cfg,
        };
        cache.reset_free_list();
        Ok(cache)
    }

    fn reset_free_list(&mut self) {
        self.free.clear();
        if self.cfg.design == DesignKind::Mirage {
            // popped from the back, so slot 0 is used first
            self.free.extend((0..self.capacity as u32).rev());
        }
    }

    pub fn config(&self) -> &CacheConfig {
        &self.cfg
    }

    pub fn design(&self) -> DesignKind {
        self.cfg.design
    }

    pub fn stats(&self) -> &CacheStats {
        &self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = CacheStats::default();
    }

    pub fn data_capacity(&self) -> usize {
        self.capacity
    }

    pub fn sets_per_skew(&self) -> usize {
        self.sets
    }

    pub fn valid_lines(&self) -> usize {
        self.valid
    }

    /// Free MIRAGE data entries left; 0 for the other designs.
    pub fn free_data_entries(&self) -> usize {
        self.free.len()
    }

    /// Restarts both RNG streams from `seed` without touching contents.
    pub fn reseed(&mut self, seed: u64) {
        let (a, b) = rngs(seed);
        self.rng = a;
        self.policy_rng = b;
    }

    pub fn line_of(&self, addr: u64) -> u64 {
        addr >> self.line_shift
    }

    pub fn set_indices(&mut self, addr: u64, domain: SecurityDomain) -> SetIndexVector {
        let line = self.line_of(addr);
        self.index.indices(line, domain)
    }

    #[inline]
    fn set_base(&self, skew: usize, set: u32) -> usize {
        (skew * self.sets + set as usize) * self.tps
    }

    fn find(&self, line: u64, domain: SecurityDomain, idx: &SetIndexVector) -> Option<(usize, usize)> {
        let by_domain = self.cfg.design == DesignKind::SassCache;
        for (skew, &set) in idx.as_slice().iter().enumerate() {
            let base = self.set_base(skew, set);
            for way in 0..self.tps {
                let t = &self.tags[base + way];
                if t.valid && t.line == line && (!by_domain || t.domain == domain.0) {
                    return Some((skew, way));
                }
            }
        }
        None
    }

    /// Whether `addr` is resident for `domain`, without touching any state.
    pub fn contains(&mut self, addr: u64, domain: SecurityDomain) -> bool {
        let line = self.line_of(addr);
        let idx = self.index.indices(line, domain);
        self.find(line, domain, &idx).is_some()
    }

    fn view(&mut self, skew: usize, set: u32) -> SetView<'_> {
        let base = self.set_base(skew, set);
        let tps = self.tps;
        SetView::new(
            &mut self.meta[base..base + tps],
            &mut self.tree[skew * self.sets + set as usize],
        )
    }

    fn invalid_way(&self, skew: usize, set: u32) -> Option<usize> {
        let base = self.set_base(skew, set);
        (0..self.tps).find(|&w| !self.tags[base + w].valid)
    }

    fn invalid_count(&self, skew: usize, set: u32) -> usize {
        let base = self.set_base(skew, set);
        self.tags[base..base + self.tps].iter().filter(|t| !t.valid).count()
    }

    fn drop_line(&mut self, tag: usize) -> Victim {
        let t = &mut self.tags[tag];
        debug_assert!(t.valid);
        t.valid = false;
        let victim = Victim {
            line: t.line,
            domain: SecurityDomain(t.domain),
        };
        self.valid -= 1;
        if let Some(c) = self.occupancy.get_mut(&victim.domain.0) {
            *c -= 1;
        }
        victim
    }

    fn fill(&mut self, tag: usize, line: u64, domain: SecurityDomain, data: u32) {
        self.tags[tag] = TagEntry {
            line,
            domain: domain.0,
            valid: true,
            data,
        };
        if data != NO_SLOT {
            self.rptr[data as usize] = tag as u32;
        }
        self.valid += 1;
        *self.occupancy.entry(domain.0).or_insert(0) += 1;
    }

    pub fn access(&mut self, addr: u64, domain: SecurityDomain, _kind: AccessKind) -> AccessOutcome {
        let line = self.line_of(addr);
        let idx = self.index.indices(line, domain);
        self.stamp += 1;
        self.stats.accesses += 1;
        let policy = self.cfg.policy;

        if let Some((skew, way)) = self.find(line, domain, &idx) {
            self.stats.hits += 1;
            let set = idx.get(skew);
            let stamp = self.stamp;
            replacement::on_hit(policy, &mut self.view(skew, set), way, stamp);
            return AccessOutcome {
                hit: true,
                eviction: Eviction::None,
                skew_used: skew,
                set_used: set as usize,
                cost: super::HIT_COST,
            };
        }

        self.stats.misses += 1;
        *self.stats.per_domain_misses.entry(domain.0).or_insert(0) += 1;
        let (skew, way, eviction) = if self.cfg.design == DesignKind::Mirage {
            self.install_mirage(line, domain, &idx)
        } else {
            self.install_set_assoc(line, domain, &idx)
        };
        let set = idx.get(skew);
        let stamp = self.stamp;
        replacement::on_install(policy, &mut self.view(skew, set), way, stamp);
        AccessOutcome {
            hit: false,
            eviction,
            skew_used: skew,
            set_used: set as usize,
            cost: self.cfg.miss_cost(),
        }
    }

    fn install_set_assoc(&mut self, line: u64, domain: SecurityDomain, idx: &SetIndexVector) -> (usize, usize, Eviction) {
        let skews = idx.skew_count();
        let first = if skews > 1 { self.rng.gen_range(0..skews) } else { 0 };
        // the random skew is final: no fallback to a sibling set with room
        if let Some(way) = self.invalid_way(first, idx.get(first)) {
            self.fill(self.set_base(first, idx.get(first)) + way, line, domain, NO_SLOT);
            self.stats.setfill_count += 1;
            return (first, way, Eviction::None);
        }
        let set = idx.get(first);
        let policy = self.cfg.policy;
        let base = self.set_base(first, set);
        let tps = self.tps;
        let way = {
            let mut view = SetView::new(
                &mut self.meta[base..base + tps],
                &mut self.tree[first * self.sets + set as usize],
            );
            replacement::select_victim(policy, &mut view, &mut self.policy_rng)
        };
        let victim = self.drop_line(base + way);
        self.fill(base + way, line, domain, NO_SLOT);
        self.stats.sae_count += 1;
        (first, way, Eviction::Sae(victim))
    }

    fn install_mirage(&mut self, line: u64, domain: SecurityDomain, idx: &SetIndexVector) -> (usize, usize, Eviction) {
        let skews = idx.skew_count();
        let mut best = 0usize;
        let mut tied: [usize; crate::randfunc::MAX_SKEWS] = [0; crate::randfunc::MAX_SKEWS];
        let mut n_tied = 0;
        for s in 0..skews {
            let c = self.invalid_count(s, idx.get(s));
            if c > best {
                best = c;
                n_tied = 0;
            }
            if c == best {
                tied[n_tied] = s;
                n_tied += 1;
            }
        }

        if best == 0 {
            let skew = if skews > 1 { self.rng.gen_range(0..skews) } else { 0 };
            let set = idx.get(skew);
            let base = self.set_base(skew, set);
            let policy = self.cfg.policy;
            let tps = self.tps;
            let way = {
                let mut view = SetView::new(
                    &mut self.meta[base..base + tps],
                    &mut self.tree[skew * self.sets + set as usize],
                );
                replacement::select_victim(policy, &mut view, &mut self.policy_rng)
            };
            let slot = self.tags[base + way].data;
            let victim = self.drop_line(base + way);
            self.fill(base + way, line, domain, slot);
            self.stats.sae_count += 1;
            return (skew, way, Eviction::Sae(victim));
        }

        let skew = if n_tied > 1 { tied[self.rng.gen_range(0..n_tied)] } else { tied[0] };
        let set = idx.get(skew);
        let way = self.invalid_way(skew, set).expect("counted an invalid tag");
        let tag = self.set_base(skew, set) + way;
        if let Some(slot) = self.free.pop() {
            self.fill(tag, line, domain, slot);
            self.stats.coldfill_count += 1;
            return (skew, way, Eviction::ColdFill);
        }
        let slot = self.rng.gen_range(0..self.capacity) as u32;
        let old_tag = self.rptr[slot as usize] as usize;
        let victim = self.drop_line(old_tag);
        self.tags[old_tag].data = NO_SLOT;
        self.fill(tag, line, domain, slot);
        self.stats.gle_count += 1;
        (skew, way, Eviction::Gle(victim))
    }

    /// Invalidates everything and clears the counters. The RNG streams keep
    /// their position.
    pub fn flush_all(&mut self) {
        self.tags.fill(TagEntry::default());
        self.meta.fill(0);
        self.tree.fill(0);
        self.rptr.fill(NO_SLOT);
        self.reset_free_list();
        self.valid = 0;
        self.occupancy.clear();
        self.stamp = 0;
        self.stats = CacheStats::default();
    }

    /// Resident lines of `domain` over total data capacity.
    pub fn occupancy_of(&self, domain: SecurityDomain) -> f64 {
        self.lines_of(domain) as f64 / self.capacity as f64
    }

    pub fn lines_of(&self, domain: SecurityDomain) -> u64 {
        self.occupancy.get(&domain.0).copied().unwrap_or(0)
    }

    /// Per-domain resident line counts, sorted by domain id.
    pub fn occupancy_table(&self) -> Vec<(SecurityDomain, u64)> {
        let mut v: Vec<_> = self
            .occupancy
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&d, &c)| (SecurityDomain(d), c))
            .collect();
        v.sort();
        v
    }

    /// Structural self-check: valid count, capacity bound, and MIRAGE
    /// tag/data pointer round trips.
    pub fn check_consistency(&self) -> std::result::Result<(), String> {
        let valid = self.tags.iter().filter(|t| t.valid).count();
        if valid != self.valid {
            return Err(format!("valid counter {} but {} valid tags", self.valid, valid));
        }
        if valid > self.capacity {
            return Err(format!("{valid} valid lines exceed capacity {}", self.capacity));
        }
        let occ: u64 = self.occupancy.values().sum();
        if occ as usize != valid {
            return Err(format!("occupancy sums to {occ}, expected {valid}"));
        }
        if self.cfg.design != DesignKind::Mirage {
            return Ok(());
        }
        let mut used = 0usize;
        for (i, t) in self.tags.iter().enumerate() {
            if !t.valid {
                continue;
            }
            if t.data == NO_SLOT || self.rptr[t.data as usize] as usize != i {
                return Err(format!("tag {i} does not round-trip through data slot {}", t.data));
            }
            used += 1;
        }
        for (slot, &r) in self.rptr.iter().enumerate() {
            if r != NO_SLOT && (!self.tags[r as usize].valid || self.tags[r as usize].data as usize != slot) {
                return Err(format!("data slot {slot} points at stale tag {r}"));
            }
        }
        if used + self.free.len() != self.capacity {
            return Err(format!(
                "{used} used + {} free data entries != capacity {}",
                self.free.len(),
                self.capacity
            ));
        }
        Ok(())
    }
}
