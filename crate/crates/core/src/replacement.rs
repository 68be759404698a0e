//! Replacement policies applied at set-associative eviction points.
//!
//! Every policy works on a per-set view: one `u64` of metadata per way plus
//! one word of tree bits for TreePLRU. Invalid ways are filled before any
//! policy is consulted, so [`select_victim`] only ever sees full sets.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    #[default]
    Random,
    TreePlru,
    WeightedLru,
    Rrip,
    Fifo,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::Random,
        PolicyKind::TreePlru,
        PolicyKind::WeightedLru,
        PolicyKind::Rrip,
        PolicyKind::Fifo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Random => "random",
            PolicyKind::TreePlru => "treeplru",
            PolicyKind::WeightedLru => "weightedlru",
            PolicyKind::Rrip => "rrip",
            PolicyKind::Fifo => "fifo",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "randomrp" => Ok(PolicyKind::Random),
            "treeplru" | "plru" | "treeplrurp" => Ok(PolicyKind::TreePlru),
            "weightedlru" | "wlru" | "weightedlrurp" => Ok(PolicyKind::WeightedLru),
            "rrip" | "srrip" | "riprp" | "rriprp" => Ok(PolicyKind::Rrip),
            "fifo" | "fiforp" => Ok(PolicyKind::Fifo),
            other => Err(Error::InvalidParam(format!("unknown replacement policy {other:?}"))),
        }
    }
}

/// Maximum RRPV of the 2-bit SRRIP counters.
pub const RRPV_MAX: u64 = 3;
/// RRPV given to a freshly installed line.
pub const RRPV_INSERT: u64 = 2;

/// Mutable policy metadata of one set.
#[derive(Debug)]
pub struct SetView<'a> {
    pub meta: &'a mut [u64],
    pub tree: &'a mut u32,
}

impl<'a> SetView<'a> {
    pub fn new(meta: &'a mut [u64], tree: &'a mut u32) -> Self {
        SetView { meta, tree }
    }

    pub fn ways(&self) -> usize {
        self.meta.len()
    }
}

fn tree_leaves(ways: usize) -> usize {
    ways.next_power_of_two()
}

/// Points every node on the root-to-`way` path away from `way`.
fn plru_touch(tree: &mut u32, ways: usize, way: usize) {
    let leaves = tree_leaves(ways);
    let (mut node, mut lo, mut span) = (0usize, 0usize, leaves);
    while span > 1 {
        let half = span / 2;
        if way < lo + half {
            *tree |= 1 << node; // victim search goes right next time
            node = 2 * node + 1;
        } else {
            *tree &= !(1 << node);
            node = 2 * node + 2;
            lo += half;
        }
        span = half;
    }
}

fn plru_victim(tree: u32, ways: usize) -> usize {
    let leaves = tree_leaves(ways);
    let (mut node, mut lo, mut span) = (0usize, 0usize, leaves);
    while span > 1 {
        let half = span / 2;
        let mut go_right = tree >> node & 1 == 1;
        // a subtree made only of padding leaves is never a candidate
        if go_right && lo + half >= ways {
            go_right = false;
        }
        if go_right {
            node = 2 * node + 2;
            lo += half;
        } else {
            node = 2 * node + 1;
        }
        span = half;
    }
    lo
}

/// Picks the way to evict from a full set.
///
/// `stamp` is not consulted here; timestamp-based policies read what
/// [`on_hit`] and [`on_install`] recorded.
pub fn select_victim<R: Rng + ?Sized>(policy: PolicyKind, set: &mut SetView<'_>, rng: &mut R) -> usize {
    let ways = set.ways();
    debug_assert!(ways > 0);
    match policy {
        PolicyKind::Random => rng.gen_range(0..ways),
        // oldest insertion / oldest touch; ties resolve to the lowest way
        PolicyKind::Fifo | PolicyKind::WeightedLru => set
            .meta
            .iter()
            .enumerate()
            .min_by_key(|&(w, &m)| (m, w))
            .map(|(w, _)| w)
            .unwrap(),
        PolicyKind::TreePlru => plru_victim(*set.tree, ways),
        PolicyKind::Rrip => loop {
            if let Some(w) = set.meta.iter().position(|&r| r >= RRPV_MAX) {
                break w;
            }
            for r in set.meta.iter_mut() {
                *r += 1;
            }
        },
    }
}

pub fn on_hit(policy: PolicyKind, set: &mut SetView<'_>, way: usize, stamp: u64) {
    match policy {
        PolicyKind::Random | PolicyKind::Fifo => {}
        PolicyKind::WeightedLru => set.meta[way] = stamp,
        PolicyKind::TreePlru => plru_touch(set.tree, set.ways(), way),
        PolicyKind::Rrip => set.meta[way] = 0,
    }
}

pub fn on_install(policy: PolicyKind, set: &mut SetView<'_>, way: usize, stamp: u64) {
    match policy {
        PolicyKind::Random => {}
        PolicyKind::Fifo | PolicyKind::WeightedLru => set.meta[way] = stamp,
        PolicyKind::TreePlru => plru_touch(set.tree, set.ways(), way),
        PolicyKind::Rrip => set.meta[way] = RRPV_INSERT,
    }
}

/// Self-contained policy state of a single set, handy for tests and for
/// driving a policy outside a cache.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyState {
    pub policy: PolicyKind,
    pub meta: Vec<u64>,
    pub tree: u32,
    stamp: u64,
}

impl PolicyState {
    pub fn new(policy: PolicyKind, ways: usize) -> Self {
        assert!(ways > 0 && ways <= 32, "ways must be in 1..=32");
        PolicyState {
            policy,
            meta: vec![0; ways],
            tree: 0,
            stamp: 0,
        }
    }

    fn view(&mut self) -> SetView<'_> {
        SetView::new(&mut self.meta, &mut self.tree)
    }

    pub fn hit(&mut self, way: usize) {
        self.stamp += 1;
        let (policy, stamp) = (self.policy, self.stamp);
        on_hit(policy, &mut self.view(), way, stamp);
    }

    pub fn install(&mut self, way: usize) {
        self.stamp += 1;
        let (policy, stamp) = (self.policy, self.stamp);
        on_install(policy, &mut self.view(), way, stamp);
    }

    pub fn victim<R: Rng + ?Sized>(&mut self, rng: &mut R) -> usize {
        let policy = self.policy;
        select_victim(policy, &mut self.view(), rng)
    }
}
